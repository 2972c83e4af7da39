#include <doctest.h>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <fstream>

#include "test_support.hpp"
#include "xrank/corpus_io.hpp"
#include "xrank/external_scorer.hpp"
#include "xrank/pipeline.hpp"

using namespace xrank;
using xrank::test::bin_dir;
using xrank::test::fixtures_dir;
using xrank::test::temp_dir;
using xrank::test::write_file;

namespace {

RunConfig fixture_config() {
    RunConfig cfg;
    cfg.corpus_path = fixtures_dir() + "/corpus.jsonl";
    cfg.queries_path = fixtures_dir() + "/queries.tsv";
    cfg.qrels_path = fixtures_dir() + "/qrels.txt";
    cfg.subdoc_path = fixtures_dir() + "/subdoc.jsonl";
    cfg.human_spans_path = fixtures_dir() + "/human_spans.jsonl";
    cfg.k = 3;
    cfg.m = 2;
    cfg.exhaustive = true;
    return cfg;
}

std::string stub_path() { return bin_dir() + "/stub_scorer"; }

}  // namespace

TEST_CASE("config file parsing") {
    auto dir = temp_dir("config");
    write_file(dir / "run.toml",
               "# evaluation setup\n"
               "[data]\n"
               "corpus = \"docs.jsonl\"\n"
               "queries = 'q.tsv'\n"
               "k = 5            # depth\n"
               "m = 4\n"
               "seed = 99\n"
               "cache = false\n"
               "exhaustive = true\n"
               "metrics = [\"ndcg\", \"mrc\"]\n"
               "m_list = [1, 2, 3]\n"
               "tag = \"trial # one\"\n");
    auto cfg = load_config((dir / "run.toml").string());
    CHECK(cfg.corpus_path == "docs.jsonl");
    CHECK(cfg.queries_path == "q.tsv");
    CHECK(cfg.k == 5);
    CHECK(cfg.m == 4);
    CHECK(cfg.seed == 99);
    CHECK_FALSE(cfg.cache);
    CHECK(cfg.exhaustive);
    CHECK(cfg.metrics == std::vector<std::string>{"ndcg", "mrc"});
    CHECK(cfg.m_list == std::vector<int>{1, 2, 3});
    CHECK(cfg.tag == "trial # one");  // '#' inside quotes survives
    CHECK(cfg.w == 5);               // untouched default
}

TEST_CASE("config parser rejects junk with line numbers") {
    auto dir = temp_dir("config_bad");
    write_file(dir / "bad1.toml", "k = 5\nnot a kv pair\n");
    CHECK_THROWS_WITH_AS(load_config((dir / "bad1.toml").string()),
                         doctest::Contains(":2:"), ParseError);
    write_file(dir / "bad2.toml", "mystery_knob = 1\n");
    CHECK_THROWS_AS(load_config((dir / "bad2.toml").string()), ParseError);
    write_file(dir / "bad3.toml", "cache = maybe\n");
    CHECK_THROWS_AS(load_config((dir / "bad3.toml").string()), ParseError);
    CHECK_THROWS_AS(load_config((dir / "missing.toml").string()), ParseError);
}

TEST_CASE("config fingerprint tracks explanation-shaping fields") {
    RunConfig a = fixture_config();
    RunConfig b = a;
    CHECK(a.fingerprint() == b.fingerprint());
    b.seed = a.seed + 1;
    CHECK(a.fingerprint() != b.fingerprint());
    b = a;
    b.out_dir = "/somewhere/else";  // cosmetic, not part of the hash
    CHECK(a.fingerprint() == b.fingerprint());
}

TEST_CASE("split_command honors quotes") {
    auto argv = split_command("python3 serve.py --name \"two words\" -x 'a b'");
    REQUIRE(argv.size() == 6);
    CHECK(argv[0] == "python3");
    CHECK(argv[3] == "two words");
    CHECK(argv[5] == "a b");
}

TEST_CASE("bm25 pipeline populates every metric on the fixtures") {
    Pipeline p(fixture_config());
    REQUIRE(p.ranked_lists().size() == 3);
    for (const auto& rl : p.ranked_lists()) {
        CHECK(rl.entries.size() <= 3);
        CHECK(!rl.entries.empty());
    }
    auto report = p.run_evaluation();
    REQUIRE(report.ndcg_mean.has_value());
    REQUIRE(report.mrc.has_value());
    REQUIRE(report.mer.has_value());
    REQUIRE(report.s_c.has_value());
    REQUIRE(report.jaccard_mean.has_value());
    CHECK(*report.ndcg_mean > 0.0);
    CHECK(*report.ndcg_mean <= 1.0 + 1e-12);
    CHECK(*report.mrc >= -1.0);
    CHECK(*report.mrc <= 1.0 + 1e-12);
    CHECK(*report.mer > 0.0);  // rationales overlap the annotated passages
    CHECK(*report.s_c >= 0.0);
    CHECK(*report.jaccard_mean > 0.0);
    CHECK(report.per_query.size() == 3);
    CHECK(report.params.at("m") == "2");
    CHECK(report.params.at("scorer") == "bm25");
}

TEST_CASE("metric selection drops unrequested fields") {
    RunConfig cfg = fixture_config();
    cfg.metrics = {"ndcg"};
    auto report = Pipeline(cfg).run_evaluation();
    CHECK(report.ndcg_mean.has_value());
    CHECK_FALSE(report.mrc.has_value());
    CHECK_FALSE(report.mer.has_value());
    CHECK_FALSE(report.s_c.has_value());
    CHECK_FALSE(report.jaccard_mean.has_value());
}

TEST_CASE("same seed gives byte-identical reports; workers do not matter") {
    RunConfig cfg = fixture_config();
    cfg.exhaustive = false;  // exercise the sampled path
    cfg.num_samples = 30;
    auto base = report_to_json(Pipeline(cfg).run_evaluation());
    CHECK(report_to_json(Pipeline(cfg).run_evaluation()) == base);
    cfg.workers = 4;
    CHECK(report_to_json(Pipeline(cfg).run_evaluation()) == base);
    cfg.workers = 1;
    cfg.seed = 777;
    auto other = Pipeline(cfg).run_evaluation();
    CHECK(other.per_query.size() == 3);  // different seed still runs clean
}

TEST_CASE("caching is transparent") {
    RunConfig cfg = fixture_config();
    cfg.cache = true;
    auto with_cache = report_to_json(Pipeline(cfg).run_evaluation());
    cfg.cache = false;
    CHECK(report_to_json(Pipeline(cfg).run_evaluation()) == with_cache);
}

TEST_CASE("run file bypasses retrieval") {
    RunConfig cfg = fixture_config();
    Pipeline direct(cfg);
    auto dir = temp_dir("runfile");
    write_run(direct.ranked_lists(), (dir / "run.txt").string(), "fixture");

    RunConfig cfg2 = fixture_config();
    cfg2.run_file = (dir / "run.txt").string();
    Pipeline from_file(cfg2);
    REQUIRE(from_file.ranked_lists().size() == direct.ranked_lists().size());
    for (std::size_t i = 0; i < direct.ranked_lists().size(); ++i) {
        const auto& a = direct.ranked_lists()[i];
        const auto& b = from_file.ranked_lists()[i];
        REQUIRE(a.entries.size() == b.entries.size());
        for (std::size_t j = 0; j < a.entries.size(); ++j)
            CHECK(a.entries[j].doc_id == b.entries[j].doc_id);
    }
    CHECK(report_to_json(from_file.run_evaluation()) ==
          report_to_json(direct.run_evaluation()));
}

TEST_CASE("sweep covers the m grid and reuses explanations") {
    RunConfig cfg = fixture_config();
    cfg.m_list = {1, 2, 3};
    Pipeline p(cfg);
    auto points = p.sweep();
    REQUIRE(points.size() == 3);
    for (const auto& [mw, report] : points) {
        CHECK(mw.second == cfg.w);
        CHECK(report.params.count("failed") == 0);
        CHECK(report.params.at("m") == std::to_string(mw.first));
    }
    // each sweep point matches an independent single-point run
    for (const auto& [mw, report] : points) {
        RunConfig single = fixture_config();
        single.m = mw.first;
        CHECK(report_to_json(Pipeline(single).run_evaluation()) == report_to_json(report));
    }
    auto table = sweep_table(points);
    CHECK(table.find("m\tw\tndcg") == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);
}

TEST_CASE("checkpoint contents steer a resumed run; stale hashes are ignored") {
    RunConfig cfg = fixture_config();
    Pipeline original(cfg);
    auto clean = report_to_json(original.run_evaluation());

    // checkpoint claiming every explanation is just the first sentence
    auto dir = temp_dir("checkpoint");
    auto corpus = load_corpus(cfg.corpus_path);
    std::map<std::string, const Document*> docs;
    for (const auto& d : corpus) docs[d.doc_id] = &d;
    std::ostringstream fake;
    fake << "{\"config_hash\":\"" << cfg.fingerprint() << "\"}\n";
    for (const auto& rl : original.ranked_lists()) {
        for (const auto& entry : rl.entries) {
            ExplanationSet e;
            e.query_id = rl.query_id;
            e.doc_id = entry.doc_id;
            auto sentences = split_sentences(docs.at(entry.doc_id)->text, entry.doc_id);
            e.rationales.push_back({sentences[0], 1.0});
            e.params.w = cfg.w;
            fake << explanation_to_json(e) << "\n";
        }
    }
    write_file(dir / "cp.jsonl", fake.str());

    RunConfig resumed = cfg;
    resumed.checkpoint_path = (dir / "cp.jsonl").string();
    auto steered = report_to_json(Pipeline(resumed).run_evaluation());
    CHECK(steered != clean);  // the checkpointed explanations were used

    write_file(dir / "stale.jsonl", "{\"config_hash\":\"0\"}\n");
    RunConfig stale = cfg;
    stale.checkpoint_path = (dir / "stale.jsonl").string();
    CHECK(report_to_json(Pipeline(stale).run_evaluation()) == clean);
}

TEST_CASE("spawned stub scorer matches the in-process reference") {
    auto scorer = ExternalScorer::spawn({stub_path()}, 10.0);
    xrank::test::TermCountScorer reference;
    std::vector<std::string> texts = {"ant bee ant", "nothing here", "", "bee"};
    auto got = scorer->score_batch("ant bee", texts);
    auto want = reference.score_batch("ant bee", texts);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
    CHECK_FALSE(scorer->deterministic());
}

TEST_CASE("max_batch splits requests without changing results") {
    auto scorer = ExternalScorer::spawn({stub_path()}, 10.0, 2);
    std::vector<std::string> texts = {"ant", "ant ant", "bee", "ant bee", "x"};
    auto got = scorer->score_batch("ant", texts);
    REQUIRE(got.size() == 5);
    CHECK(got[0] == 1.0);
    CHECK(got[1] == 2.0);
    CHECK(got[2] == 0.0);
    CHECK(got[3] == 1.0);
}

TEST_CASE("tcp stub scorer round trip") {
    int fds[2];
    REQUIRE(pipe(fds) == 0);
    pid_t pid = fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
        dup2(fds[1], STDOUT_FILENO);
        close(fds[0]);
        close(fds[1]);
        execl(stub_path().c_str(), "stub_scorer", "--tcp", "--port", "0",
              static_cast<char*>(nullptr));
        _exit(127);
    }
    close(fds[1]);
    FILE* out = fdopen(fds[0], "r");
    char line[128] = {0};
    REQUIRE(fgets(line, sizeof(line), out) != nullptr);
    int port = 0;
    REQUIRE(sscanf(line, "listening on %d", &port) == 1);

    auto scorer = ExternalScorer::connect("127.0.0.1:" + std::to_string(port), 10.0);
    auto scores = scorer->score_batch("ant", {"ant ant", "bee"});
    REQUIRE(scores.size() == 2);
    CHECK(scores[0] == 2.0);
    CHECK(scores[1] == 0.0);

    scorer.reset();
    kill(pid, SIGTERM);
    waitpid(pid, nullptr, 0);
    fclose(out);
}

TEST_CASE("protocol faults surface as scorer errors") {
    SUBCASE("error object") {
        auto scorer = ExternalScorer::spawn({stub_path(), "--error-after", "1"}, 10.0);
        CHECK_THROWS_AS(scorer->score_batch("q", {"text"}), ScorerError);
    }
    SUBCASE("malformed line") {
        auto scorer = ExternalScorer::spawn({stub_path(), "--malformed-after", "1"}, 10.0);
        CHECK_THROWS_AS(scorer->score_batch("q", {"text"}), ScorerError);
    }
    SUBCASE("timeout") {
        auto scorer = ExternalScorer::spawn({stub_path(), "--hang-after", "1"}, 0.3);
        CHECK_THROWS_AS(scorer->score_batch("q", {"text"}), ScorerError);
    }
    SUBCASE("failed handshake") {
        CHECK_THROWS_AS(ExternalScorer::spawn({stub_path(), "--error-after", "0"}, 10.0),
                        ScorerError);
    }
}

TEST_CASE("mid-run scorer failure checkpoints progress") {
    auto dir = temp_dir("partial");
    RunConfig cfg = fixture_config();
    cfg.scorer = "cmd";
    cfg.scorer_cmd = stub_path() + " --error-after 4";
    cfg.checkpoint_path = (dir / "cp.jsonl").string();
    cfg.out_dir = dir.string();
    Pipeline p(cfg);
    CHECK_THROWS_AS(p.run_evaluation(), PartialFailure);
    std::ifstream in(cfg.checkpoint_path);
    REQUIRE(in.good());
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header.find(cfg.fingerprint()) != std::string::npos);
}

TEST_CASE("external scorer pipeline runs end to end") {
    RunConfig cfg = fixture_config();
    cfg.scorer = "cmd";
    cfg.scorer_cmd = stub_path();
    auto report = Pipeline(cfg).run_evaluation();
    CHECK(report.per_query.size() == 3);
    REQUIRE(report.mrc.has_value());
    CHECK(*report.mrc >= -1.0);
    CHECK(*report.mrc <= 1.0 + 1e-12);
}
