#include "xrank/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "xrank/external_scorer.hpp"
#include "xrank/segmentation.hpp"

namespace xrank {

std::vector<double> CachingScorer::score_batch(const std::string& query_text,
                                               const std::vector<std::string>& texts) {
    if (!enabled_) return inner_->score_batch(query_text, texts);
    std::vector<double> scores(texts.size(), 0.0);
    std::vector<std::size_t> missing;
    std::vector<std::string> keys(texts.size());
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            keys[i] = fingerprint() + "\x1f" + query_text + "\x1f" +
                      std::to_string(fnv1a64(texts[i]));
            auto it = cache_.find(keys[i]);
            if (it != cache_.end())
                scores[i] = it->second;
            else
                missing.push_back(i);
        }
    }
    if (!missing.empty()) {
        std::vector<std::string> fresh;
        for (auto i : missing) fresh.push_back(texts[i]);
        auto computed = inner_->score_batch(query_text, fresh);
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t j = 0; j < missing.size(); ++j) {
            scores[missing[j]] = computed[j];
            cache_[keys[missing[j]]] = computed[j];
        }
    }
    return scores;
}

namespace {

bool wants(const RunConfig& cfg, const std::string& metric) {
    return std::find(cfg.metrics.begin(), cfg.metrics.end(), metric) != cfg.metrics.end();
}

std::uint64_t doc_seed(std::uint64_t base, const std::string& qid, const std::string& did) {
    return base ^ fnv1a64(qid + "\x1f" + did);
}

int effective_workers(const RunConfig& cfg) {
    int n = std::max(1, cfg.workers);
    if (const char* env = std::getenv("XRANK_WORKERS")) {
        int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return n;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, std::shared_ptr<Scorer> scorer_override)
    : config_(std::move(config)) {
    auto warn = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };

    auto cformat = config_.corpus_format == "tsv" ? CorpusFormat::tsv : CorpusFormat::jsonl;
    auto qformat = config_.queries_format == "jsonl" ? CorpusFormat::jsonl : CorpusFormat::tsv;
    corpus_ = load_corpus(config_.corpus_path, cformat);
    for (const auto& d : corpus_) docs_by_id_[d.doc_id] = &d;
    queries_ = load_queries(config_.queries_path, qformat);

    if (!config_.qrels_path.empty()) {
        load_qrels(config_.qrels_path, relevance_, warn);
        have_qrels_ = true;
    }
    if (!config_.subdoc_path.empty()) {
        std::vector<std::string> ids;
        for (const auto& d : corpus_) ids.push_back(d.doc_id);
        load_subdoc_relevance(config_.subdoc_path, relevance_, ids, warn);
        have_subdoc_ = true;
    }
    if (!config_.human_spans_path.empty()) {
        load_human_spans(config_.human_spans_path, relevance_, warn);
        have_human_spans_ = true;
    }
    stopwords_ = config_.stopwords_file.empty() ? default_stopwords()
                                                : load_stopwords(config_.stopwords_file);

    auto index = std::make_shared<InvertedIndex>(InvertedIndex::build(corpus_));
    index_ = index;

    BM25Params bm25{config_.k1, config_.b};
    std::shared_ptr<Scorer> base;
    if (scorer_override) {
        base = std::move(scorer_override);
    } else if (config_.scorer == "bm25") {
        base = std::make_shared<Bm25Scorer>(index_, bm25);
    } else if (config_.scorer == "cmd" || !config_.scorer_cmd.empty()) {
        base = ExternalScorer::spawn(split_command(config_.scorer_cmd), config_.scorer_timeout,
                                     static_cast<std::size_t>(config_.scorer_max_batch));
    } else if (config_.scorer == "addr" || !config_.scorer_addr.empty()) {
        base = ExternalScorer::connect(config_.scorer_addr, config_.scorer_timeout,
                                       static_cast<std::size_t>(config_.scorer_max_batch));
    } else {
        throw ArgumentError("unknown scorer: " + config_.scorer);
    }
    scorer_ = std::make_shared<CachingScorer>(base, config_.cache);

    if (!config_.run_file.empty()) {
        lists_ = read_run(config_.run_file);
    } else {
        for (const auto& q : queries_)
            lists_.push_back(retrieve_topk(*index_, bm25, q, corpus_, config_.first_stage_depth));
    }
    for (auto& rl : lists_)
        if (rl.entries.size() > static_cast<std::size_t>(config_.k))
            rl.entries.resize(static_cast<std::size_t>(config_.k));

    load_checkpoint();
}

ExplanationSet Pipeline::full_explanation(const Query& query, const Document& doc, int w) {
    ExplanationParams params;
    params.granularity = granularity_from_string(config_.granularity);
    params.w = w;
    params.n_per_sample = config_.n_per_sample;
    params.num_samples = config_.num_samples;
    params.chunk_size = config_.chunk_size;
    params.chunk_threshold = config_.chunk_threshold;
    params.exhaustive = config_.exhaustive;
    params.seed = doc_seed(config_.seed, query.query_id, doc.doc_id);
    params.m = std::numeric_limits<int>::max();  // full depth, sliced per point

    if (config_.explainer == "greedy") return explain_greedy(query, doc, *scorer_, params);
    if (config_.explainer == "sampled") return explain_sampled(query, doc, *scorer_, params);
    throw ArgumentError("unknown explainer: " + config_.explainer);
}

ExplanationSet Pipeline::slice_explanation(const ExplanationSet& full, int m) {
    ExplanationSet e = full;
    e.params.m = m;
    if (static_cast<int>(e.rationales.size()) > m)
        e.rationales.resize(static_cast<std::size_t>(m));
    return e;
}

void Pipeline::explain_all(int w) {
    struct Job {
        const Query* query;
        const Document* doc;
    };
    std::vector<Job> jobs;
    std::map<std::string, const Query*> queries_by_id;
    for (const auto& q : queries_) queries_by_id[q.query_id] = &q;
    for (const auto& rl : lists_) {
        auto qit = queries_by_id.find(rl.query_id);
        if (qit == queries_by_id.end())
            throw IntegrityError("run file query " + rl.query_id + " not in query set");
        for (const auto& e : rl.entries) {
            auto key = std::make_tuple(rl.query_id, e.doc_id, w);
            if (full_explanations_.count(key)) continue;
            auto dit = docs_by_id_.find(e.doc_id);
            if (dit == docs_by_id_.end())
                throw IntegrityError("ranked doc " + e.doc_id + " not in corpus");
            jobs.push_back({qit->second, dit->second});
        }
    }
    if (jobs.empty()) return;

    int n_workers = std::min<int>(effective_workers(config_), static_cast<int>(jobs.size()));
    std::atomic<std::size_t> next{0};
    std::vector<ExplanationSet> results(jobs.size());
    std::vector<char> done(jobs.size(), 0);
    std::mutex err_mutex;
    std::string first_error;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error.empty()) return;
            }
            try {
                results[i] = full_explanation(*jobs[i].query, *jobs[i].doc, w);
                done[i] = 1;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty()) first_error = e.what();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (done[i])
            full_explanations_[{jobs[i].query->query_id, jobs[i].doc->doc_id, w}] =
                std::move(results[i]);

    if (!first_error.empty()) {
        write_checkpoint();
        std::string cp = config_.checkpoint_path.empty()
                             ? config_.out_dir + "/checkpoint.jsonl"
                             : config_.checkpoint_path;
        throw PartialFailure("scorer failed mid-run: " + first_error +
                                 " (progress checkpointed to " + cp + ")",
                             cp);
    }
}

void Pipeline::write_checkpoint() {
    std::string path = config_.checkpoint_path.empty() ? config_.out_dir + "/checkpoint.jsonl"
                                                       : config_.checkpoint_path;
    std::ofstream out(path);
    if (!out) return;
    out << "{\"config_hash\":\"" << config_.fingerprint() << "\"}\n";
    for (const auto& [key, e] : full_explanations_) out << explanation_to_json(e) << "\n";
}

void Pipeline::load_checkpoint() {
    std::string path = config_.checkpoint_path.empty() ? config_.out_dir + "/checkpoint.jsonl"
                                                       : config_.checkpoint_path;
    if (config_.checkpoint_path.empty() || !std::filesystem::exists(path)) return;
    std::ifstream in(path);
    std::string header;
    if (!std::getline(in, header)) return;
    if (header.find(config_.fingerprint()) == std::string::npos) {
        std::cerr << "warning: checkpoint " << path << " was built for a different config, ignoring\n";
        return;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto e = explanation_from_json(line);
        full_explanations_[{e.query_id, e.doc_id, e.params.w}] = e;
    }
}

EvalReport Pipeline::run_point(int m, int w) {
    explain_all(w);
    last_explanations_.clear();

    EvalReport report;
    report.params = config_.to_params();
    report.params["m"] = std::to_string(m);
    report.params["w"] = std::to_string(w);

    std::map<std::pair<std::string, std::string>, double> rescored;
    std::map<std::pair<std::string, std::string>, ExplanationSet> sliced;
    std::map<std::string, int> degenerate_per_query;

    for (const auto& rl : lists_) {
        for (const auto& entry : rl.entries) {
            const auto& full = full_explanations_.at({rl.query_id, entry.doc_id, w});
            auto e = slice_explanation(full, m);
            if (e.degenerate || e.rationales.empty()) {
                ++degenerate_per_query[rl.query_id];
                sliced[{rl.query_id, entry.doc_id}] = std::move(e);
                continue;
            }
            const Document& doc = *docs_by_id_.at(entry.doc_id);
            auto pseudo = build_pseudo_document(doc, e);
            rescored[{rl.query_id, entry.doc_id}] = scorer_->score(
                lookup_query_text(rl.query_id), pseudo.text);
            sliced[{rl.query_id, entry.doc_id}] = std::move(e);
        }
    }

    MrcResult mrc_result;
    if (wants(config_, "mrc")) mrc_result = mrc(lists_, rescored);

    MerResult mer_result;
    bool do_mer = wants(config_, "mer") && have_subdoc_;
    if (do_mer) mer_result = mer(lists_, sliced, relevance_, config_.k, m, stopwords_);

    bool do_ndcg = wants(config_, "ndcg") && have_qrels_;
    bool do_sc = wants(config_, "sc");
    bool do_jaccard = wants(config_, "jaccard") && have_human_spans_;

    double ndcg_sum = 0.0, sc_sum = 0.0, jac_sum = 0.0;
    int ndcg_n = 0, sc_n = 0, jac_n = 0;

    for (const auto& rl : lists_) {
        PerQueryMetrics pm;
        pm.excluded_docs = degenerate_per_query.count(rl.query_id)
                               ? degenerate_per_query[rl.query_id]
                               : 0;
        if (do_ndcg) {
            pm.ndcg = ndcg_at_k(rl, relevance_, config_.k).ndcg;
            ndcg_sum += *pm.ndcg;
            ++ndcg_n;
        }
        if (wants(config_, "mrc")) {
            auto it = mrc_result.per_query_tau.find(rl.query_id);
            if (it != mrc_result.per_query_tau.end())
                pm.tau = it->second;
            else
                pm.tau_excluded = true;
        }
        if (do_mer) pm.mer = mer_result.per_query.at(rl.query_id);

        if (do_sc) {
            const std::string& qtext = lookup_query_text(rl.query_id);
            std::map<std::string, std::vector<double>> masked_per_doc;
            for (const auto& entry : rl.entries) {
                const auto& e = sliced.at({rl.query_id, entry.doc_id});
                if (e.degenerate || e.rationales.empty()) {
                    masked_per_doc[entry.doc_id] = {};
                    continue;
                }
                const Document& doc = *docs_by_id_.at(entry.doc_id);
                double base = scorer_->score(qtext, doc.text);
                std::vector<double>& scores = masked_per_doc[entry.doc_id];
                if (base == 0.0) continue;
                for (const auto& r : e.rationales) {
                    std::string masked = mask_segments(doc.text, {r.segment});
                    scores.push_back(scorer_->score(qtext, masked) / base);
                }
            }
            auto cr = consistency_pool(masked_per_doc);
            pm.s_c = cr.s_c;
            sc_sum += cr.s_c;
            ++sc_n;
        }

        if (do_jaccard) {
            double sum = 0.0;
            for (const auto& entry : rl.entries) {
                const auto& e = sliced.at({rl.query_id, entry.doc_id});
                auto hit = relevance_.human_spans.find({rl.query_id, entry.doc_id});
                if (hit != relevance_.human_spans.end()) sum += jaccard_spans(e, hit->second);
            }
            pm.jaccard = rl.entries.empty() ? 0.0 : sum / static_cast<double>(rl.entries.size());
            jac_sum += *pm.jaccard;
            ++jac_n;
        }
        report.per_query[rl.query_id] = pm;
    }

    if (do_ndcg && ndcg_n > 0) report.ndcg_mean = ndcg_sum / ndcg_n;
    if (wants(config_, "mrc")) {
        report.mrc = mrc_result.mrc;
        report.excluded_queries = mrc_result.excluded_queries;
    }
    if (do_mer) report.mer = mer_result.mer;
    if (do_sc && sc_n > 0) report.s_c = sc_sum / sc_n;
    if (do_jaccard && jac_n > 0) report.jaccard_mean = jac_sum / jac_n;

    for (const auto& [key, e] : sliced) last_explanations_.push_back(e);
    return report;
}

const std::string& Pipeline::lookup_query_text(const std::string& query_id) const {
    for (const auto& q : queries_)
        if (q.query_id == query_id) return q.text;
    throw IntegrityError("unknown query_id: " + query_id);
}

EvalReport Pipeline::run_evaluation() { return run_point(config_.m, config_.w); }

std::vector<std::pair<std::pair<int, int>, EvalReport>> Pipeline::sweep() {
    std::vector<int> ms = config_.m_list.empty() ? std::vector<int>{config_.m} : config_.m_list;
    std::vector<int> ws;
    if (config_.granularity == "word_window") {
        ws = config_.w_list.empty() ? std::vector<int>{config_.w} : config_.w_list;
    } else {
        if (!config_.w_list.empty())
            std::cerr << "warning: w sweep ignored for granularity " << config_.granularity << "\n";
        ws = {config_.w};
    }
    std::vector<std::pair<std::pair<int, int>, EvalReport>> points;
    for (int w : ws) {
        for (int m : ms) {
            try {
                points.push_back({{m, w}, run_point(m, w)});
            } catch (const std::exception& e) {
                EvalReport failed;
                failed.params = config_.to_params();
                failed.params["m"] = std::to_string(m);
                failed.params["w"] = std::to_string(w);
                failed.params["failed"] = e.what();
                points.push_back({{m, w}, failed});
            }
        }
    }
    return points;
}

std::string sweep_table(const std::vector<std::pair<std::pair<int, int>, EvalReport>>& points) {
    std::ostringstream out;
    out << "m\tw\tndcg\tmrc\tmer\ts_c\tjaccard\tstatus\n";
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string("NA");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", *v);
        return std::string(buf);
    };
    for (const auto& [mw, r] : points) {
        bool failed = r.params.count("failed") > 0;
        out << mw.first << "\t" << mw.second << "\t" << cell(r.ndcg_mean) << "\t" << cell(r.mrc)
            << "\t" << cell(r.mer) << "\t" << cell(r.s_c) << "\t" << cell(r.jaccard_mean) << "\t"
            << (failed ? "failed" : "ok") << "\n";
    }
    return out.str();
}

}  // namespace xrank
