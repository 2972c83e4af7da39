#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "xrank/pipeline.hpp"

namespace fs = std::filesystem;
using namespace xrank;

namespace {

void add_config_options(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "TOML config file; flags override its values");
    cmd->add_option("--corpus", cfg.corpus_path, "corpus file (jsonl or tsv)");
    cmd->add_option("--corpus-format", cfg.corpus_format, "jsonl|tsv")->default_str("jsonl");
    cmd->add_option("--queries", cfg.queries_path, "queries file");
    cmd->add_option("--queries-format", cfg.queries_format, "tsv|jsonl")->default_str("tsv");
    cmd->add_option("--qrels", cfg.qrels_path, "4-column qrels file");
    cmd->add_option("--subdoc", cfg.subdoc_path, "sub-document relevance jsonl");
    cmd->add_option("--human-spans", cfg.human_spans_path, "human span annotations jsonl");
    cmd->add_option("--run-file", cfg.run_file, "existing run file; skips retrieval");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option("--abbrev-file", cfg.abbrev_file, "sentence-split abbreviation list");
    cmd->add_option("--stopwords", cfg.stopwords_file, "stopword list for cosine similarity");
    cmd->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint file for resume");
    cmd->add_option("--scorer", cfg.scorer, "bm25|cmd|addr")->default_str("bm25");
    cmd->add_option("--scorer-cmd", cfg.scorer_cmd, "external scorer command line");
    cmd->add_option("--scorer-addr", cfg.scorer_addr, "external scorer host:port");
    cmd->add_option("--scorer-timeout", cfg.scorer_timeout, "protocol timeout seconds")
        ->default_str("60");
    cmd->add_option("--scorer-max-batch", cfg.scorer_max_batch, "max texts per round trip");
    cmd->add_option("--k1", cfg.k1, "BM25 k1")->default_str("1.2");
    cmd->add_option("--b", cfg.b, "BM25 b")->default_str("0.75");
    cmd->add_option("-k,--k", cfg.k, "explanation depth")->default_str("10");
    cmd->add_option("--first-stage-depth", cfg.first_stage_depth, "retrieval depth")
        ->default_str("1000");
    cmd->add_option("--explainer", cfg.explainer, "sampled|greedy")->default_str("sampled");
    cmd->add_option("--granularity", cfg.granularity, "sentence|word_window|chunk")
        ->default_str("sentence");
    cmd->add_option("-m,--m", cfg.m, "rationales per document")->default_str("3");
    cmd->add_option("-w,--w", cfg.w, "word-window length")->default_str("5");
    cmd->add_option("--n-per-sample", cfg.n_per_sample, "segments masked per draw")
        ->default_str("1");
    cmd->add_option("--num-samples", cfg.num_samples, "occlusion draws (0 = 5x segments)");
    cmd->add_option("--chunk-size", cfg.chunk_size, "sentences per chunk")->default_str("3");
    cmd->add_option("--chunk-threshold", cfg.chunk_threshold,
                    "greedy switches to chunked scoring above this many sentences")
        ->default_str("12");
    cmd->add_flag("--exhaustive", cfg.exhaustive, "one occlusion pass per segment");
    cmd->add_option("--grade-threshold", cfg.grade_threshold, "relevant-grade cutoff")
        ->default_str("1");
    cmd->add_option("--seed", cfg.seed, "seed for all randomness");
    cmd->add_option("--workers", cfg.workers, "worker threads")->default_str("1");
    cmd->add_flag("--no-cache", [&cfg](std::int64_t) { cfg.cache = false; }, "disable score cache");
    cmd->add_option("--metrics", cfg.metrics, "metric selection")->delimiter(',');
    cmd->add_option("--tag", cfg.tag, "run tag")->default_str("xrank");
    cmd->add_option("--m-list", cfg.m_list, "m sweep values")->delimiter(',');
    cmd->add_option("--w-list", cfg.w_list, "w sweep values")->delimiter(',');
}

RunConfig finalize_config(const std::string& config_path, CLI::App* cmd, RunConfig& flag_cfg,
                          bool seed_given) {
    if (config_path.empty()) {
        if (!seed_given) {
            std::random_device rd;
            flag_cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
            std::cerr << "seed not given, using " << flag_cfg.seed << "\n";
        }
        return flag_cfg;
    }
    RunConfig cfg = load_config(config_path);
    // Re-apply any flag the user passed so CLI overrides the file.
    for (const auto* opt : cmd->get_options()) {
        if (opt->count() == 0) continue;
        // flag_cfg already holds the parsed value; copy the touched fields.
        const std::string& name = opt->get_name();
        if (name == "--corpus") cfg.corpus_path = flag_cfg.corpus_path;
        else if (name == "--corpus-format") cfg.corpus_format = flag_cfg.corpus_format;
        else if (name == "--queries") cfg.queries_path = flag_cfg.queries_path;
        else if (name == "--queries-format") cfg.queries_format = flag_cfg.queries_format;
        else if (name == "--qrels") cfg.qrels_path = flag_cfg.qrels_path;
        else if (name == "--subdoc") cfg.subdoc_path = flag_cfg.subdoc_path;
        else if (name == "--human-spans") cfg.human_spans_path = flag_cfg.human_spans_path;
        else if (name == "--run-file") cfg.run_file = flag_cfg.run_file;
        else if (name == "--out-dir") cfg.out_dir = flag_cfg.out_dir;
        else if (name == "--abbrev-file") cfg.abbrev_file = flag_cfg.abbrev_file;
        else if (name == "--stopwords") cfg.stopwords_file = flag_cfg.stopwords_file;
        else if (name == "--checkpoint") cfg.checkpoint_path = flag_cfg.checkpoint_path;
        else if (name == "--scorer") cfg.scorer = flag_cfg.scorer;
        else if (name == "--scorer-cmd") cfg.scorer_cmd = flag_cfg.scorer_cmd;
        else if (name == "--scorer-addr") cfg.scorer_addr = flag_cfg.scorer_addr;
        else if (name == "--scorer-timeout") cfg.scorer_timeout = flag_cfg.scorer_timeout;
        else if (name == "--scorer-max-batch") cfg.scorer_max_batch = flag_cfg.scorer_max_batch;
        else if (name == "--k1") cfg.k1 = flag_cfg.k1;
        else if (name == "--b") cfg.b = flag_cfg.b;
        else if (name == "-k,--k") cfg.k = flag_cfg.k;
        else if (name == "--first-stage-depth") cfg.first_stage_depth = flag_cfg.first_stage_depth;
        else if (name == "--explainer") cfg.explainer = flag_cfg.explainer;
        else if (name == "--granularity") cfg.granularity = flag_cfg.granularity;
        else if (name == "-m,--m") cfg.m = flag_cfg.m;
        else if (name == "-w,--w") cfg.w = flag_cfg.w;
        else if (name == "--n-per-sample") cfg.n_per_sample = flag_cfg.n_per_sample;
        else if (name == "--num-samples") cfg.num_samples = flag_cfg.num_samples;
        else if (name == "--chunk-size") cfg.chunk_size = flag_cfg.chunk_size;
        else if (name == "--chunk-threshold") cfg.chunk_threshold = flag_cfg.chunk_threshold;
        else if (name == "--exhaustive") cfg.exhaustive = flag_cfg.exhaustive;
        else if (name == "--grade-threshold") cfg.grade_threshold = flag_cfg.grade_threshold;
        else if (name == "--seed") cfg.seed = flag_cfg.seed;
        else if (name == "--workers") cfg.workers = flag_cfg.workers;
        else if (name == "--no-cache") cfg.cache = flag_cfg.cache;
        else if (name == "--metrics") cfg.metrics = flag_cfg.metrics;
        else if (name == "--tag") cfg.tag = flag_cfg.tag;
        else if (name == "--m-list") cfg.m_list = flag_cfg.m_list;
        else if (name == "--w-list") cfg.w_list = flag_cfg.w_list;
    }
    return cfg;
}

int run_evaluate(const RunConfig& cfg) {
    try {
        Pipeline pipeline(cfg);
        auto report = pipeline.run_evaluation();
        fs::create_directories(cfg.out_dir);
        write_report(report, cfg.out_dir + "/report.json", ReportFormat::json);
        write_report(report, cfg.out_dir + "/report.tsv", ReportFormat::tsv);
        std::cout << report_to_tsv(report);
        return 0;
    } catch (const PartialFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_sweep(const RunConfig& cfg) {
    try {
        Pipeline pipeline(cfg);
        auto points = pipeline.sweep();
        fs::create_directories(cfg.out_dir);
        bool any_failed = false;
        for (const auto& [mw, report] : points) {
            std::string stem = cfg.out_dir + "/report_m" + std::to_string(mw.first) + "_w" +
                               std::to_string(mw.second);
            write_report(report, stem + ".json", ReportFormat::json);
            write_report(report, stem + ".tsv", ReportFormat::tsv);
            if (report.params.count("failed")) any_failed = true;
        }
        std::ofstream table(cfg.out_dir + "/sweep.tsv");
        table << sweep_table(points);
        std::cout << sweep_table(points);
        return any_failed ? 2 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_explain(const RunConfig& cfg) {
    try {
        Pipeline pipeline(cfg);
        pipeline.run_evaluation();
        fs::create_directories(cfg.out_dir);
        write_explanations(pipeline.last_explanations(), cfg.out_dir + "/explanations.jsonl");
        std::cout << "wrote " << pipeline.last_explanations().size() << " explanations to "
                  << cfg.out_dir << "/explanations.jsonl\n";
        return 0;
    } catch (const PartialFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_plotdata(const std::vector<std::string>& report_paths, const std::string& out_path) {
    using nlohmann::json;
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 1;
    }
    out << "system\tm\tw\tquery_id\tndcg\tmrc\tmer\n";
    auto cell = [](const json& v) { return v.is_null() ? std::string("NA") : v.dump(); };
    for (const auto& path : report_paths) {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot read " << path << "\n";
            return 1;
        }
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) {
            std::cerr << "error: malformed report " << path << "\n";
            return 1;
        }
        std::string system = j["params"].value("tag", path);
        std::string m = j["params"].value("m", "NA");
        std::string w = j["params"].value("w", "NA");
        for (const auto& [qid, row] : j["per_query"].items())
            out << system << "\t" << m << "\t" << w << "\t" << qid << "\t" << cell(row["ndcg"])
                << "\t" << cell(row["tau"]) << "\t" << cell(row["mer"]) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occlusion-rationale evaluation toolkit for ranked retrieval"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    // index
    auto* index_cmd = app.add_subcommand("index", "build and save an inverted index");
    std::string index_corpus, index_out, index_format = "jsonl";
    index_cmd->add_option("--corpus", index_corpus, "corpus file")->required();
    index_cmd->add_option("--format", index_format, "jsonl|tsv");
    index_cmd->add_option("--out", index_out, "index output path")->required();

    // retrieve
    auto* retrieve_cmd = app.add_subcommand("retrieve", "BM25 top-k retrieval to a run file");
    std::string r_corpus, r_queries, r_out, r_tag = "bm25", r_format = "jsonl",
                r_qformat = "tsv";
    int r_k = 1000;
    double r_k1 = 1.2, r_b = 0.75;
    retrieve_cmd->add_option("--corpus", r_corpus)->required();
    retrieve_cmd->add_option("--format", r_format, "jsonl|tsv");
    retrieve_cmd->add_option("--queries", r_queries)->required();
    retrieve_cmd->add_option("--queries-format", r_qformat, "tsv|jsonl");
    retrieve_cmd->add_option("--out", r_out)->required();
    retrieve_cmd->add_option("-k,--k", r_k, "retrieval depth");
    retrieve_cmd->add_option("--k1", r_k1);
    retrieve_cmd->add_option("--b", r_b);
    retrieve_cmd->add_option("--tag", r_tag);

    auto* explain_cmd = app.add_subcommand("explain", "dump rationale explanations as jsonl");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "full evaluation run with reports");
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep over m and w");
    add_config_options(explain_cmd, cfg, config_path);
    add_config_options(evaluate_cmd, cfg, config_path);
    add_config_options(sweep_cmd, cfg, config_path);

    auto* plot_cmd = app.add_subcommand("plotdata", "per-query scatter rows from reports");
    std::vector<std::string> plot_reports;
    std::string plot_out = "plotdata.tsv";
    plot_cmd->add_option("reports", plot_reports, "report json files")->required();
    plot_cmd->add_option("--out", plot_out, "output tsv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*index_cmd) {
            auto corpus = load_corpus(index_corpus, index_format == "tsv" ? CorpusFormat::tsv
                                                                          : CorpusFormat::jsonl);
            InvertedIndex::build(corpus).save(index_out);
            std::cout << "indexed " << corpus.size() << " documents -> " << index_out << "\n";
            return 0;
        }
        if (*retrieve_cmd) {
            auto corpus = load_corpus(r_corpus, r_format == "tsv" ? CorpusFormat::tsv
                                                                  : CorpusFormat::jsonl);
            auto queries = load_queries(r_queries, r_qformat == "jsonl" ? CorpusFormat::jsonl
                                                                        : CorpusFormat::tsv);
            auto index = InvertedIndex::build(corpus);
            BM25Params params{r_k1, r_b};
            std::vector<RankedList> lists;
            for (const auto& q : queries)
                lists.push_back(retrieve_topk(index, params, q, corpus, r_k));
            write_run(lists, r_out, r_tag);
            std::cout << "wrote " << lists.size() << " ranked lists -> " << r_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (*plot_cmd) return run_plotdata(plot_reports, plot_out);

    CLI::App* active = *evaluate_cmd ? static_cast<CLI::App*>(evaluate_cmd)
                       : *sweep_cmd  ? static_cast<CLI::App*>(sweep_cmd)
                                     : static_cast<CLI::App*>(explain_cmd);
    RunConfig final_cfg;
    try {
        final_cfg = finalize_config(config_path, active, cfg, active->count("--seed") > 0);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (*evaluate_cmd) return run_evaluate(final_cfg);
    if (*sweep_cmd) return run_sweep(final_cfg);
    return run_explain(final_cfg);
}
