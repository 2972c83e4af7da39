#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_support.hpp"
#include "xrank/corpus_io.hpp"
#include "xrank/rationales.hpp"

using namespace xrank;
using xrank::test::TermCountScorer;

namespace {

ExplanationParams sentence_params(int m) {
    ExplanationParams p;
    p.granularity = Granularity::sentence;
    p.m = m;
    p.exhaustive = true;
    return p;
}

}  // namespace

TEST_CASE("segment without query terms gets zero weight") {
    TermCountScorer scorer;
    Query q{"q", "solar"};
    Document d{"d", "Solar power grows. Cats sleep all day. Solar cells improve."};
    auto e = explain_sampled(q, d, scorer, sentence_params(3));
    REQUIRE(e.rationales.size() == 3);
    for (const auto& r : e.rationales)
        if (r.segment.text == "Cats sleep all day.") CHECK(r.weight == 0.0);
}

TEST_CASE("one-segment doc is the sole rationale") {
    TermCountScorer scorer;
    Query q{"q", "alpha"};
    Document d{"d", "alpha beta gamma"};
    auto e = explain_sampled(q, d, scorer, sentence_params(5));
    REQUIRE(e.rationales.size() == 1);
    // masking the only segment leaves an empty doc: phi = |1 - 0| / 1
    CHECK(e.rationales[0].weight == doctest::Approx(1.0));
}

TEST_CASE("exhaustive mode equals brute-force leave-one-out deltas") {
    TermCountScorer scorer;
    Query q{"q", "ant bee"};
    Document d{"d", "Ant walks far. Bee ant fly. No insects here."};
    auto segments = split_sentences(d.text, d.doc_id);
    REQUIRE(segments.size() == 3);

    double base = scorer.score(q.text, d.text);
    std::map<std::string, double> brute;
    for (const auto& s : segments) {
        double occluded = scorer.score(q.text, mask_segments(d.text, {s}));
        brute[s.text] = std::fabs(base - occluded) / base;
    }
    auto e = explain_sampled(q, d, scorer, sentence_params(3));
    REQUIRE(e.rationales.size() == 3);
    for (const auto& r : e.rationales)
        CHECK(r.weight == doctest::Approx(brute.at(r.segment.text)).epsilon(1e-12));
    // weights are sorted non-increasing
    for (std::size_t i = 1; i < e.rationales.size(); ++i)
        CHECK(e.rationales[i - 1].weight >= e.rationales[i].weight);
}

TEST_CASE("sampled explainer is seed deterministic") {
    TermCountScorer scorer;
    Query q{"q", "ant bee cat"};
    Document d{"d", "ant bee cat dog elk fox gnu hen ibis jay kiwi lark"};
    ExplanationParams p;
    p.granularity = Granularity::word_window;
    p.w = 2;
    p.m = 3;
    p.n_per_sample = 2;
    p.num_samples = 20;
    p.seed = 1234;
    auto a = explain_sampled(q, d, scorer, p);
    auto b = explain_sampled(q, d, scorer, p);
    REQUIRE(a.rationales.size() == b.rationales.size());
    for (std::size_t i = 0; i < a.rationales.size(); ++i) {
        CHECK(a.rationales[i].segment.char_start == b.rationales[i].segment.char_start);
        CHECK(a.rationales[i].weight == b.rationales[i].weight);
    }
    p.seed = 99;
    auto c = explain_sampled(q, d, scorer, p);
    CHECK(c.rationales.size() == a.rationales.size());  // same structure, possibly new order
}

TEST_CASE("sampled weights are non-negative") {
    TermCountScorer scorer;
    Query q{"q", "ant"};
    Document d{"d", "ant bee. cat ant. dog elk. fox ant."};
    ExplanationParams p = sentence_params(10);
    p.exhaustive = false;
    p.num_samples = 50;
    p.n_per_sample = 2;
    auto e = explain_sampled(q, d, scorer, p);
    for (const auto& r : e.rationales) CHECK(r.weight >= 0.0);
}

TEST_CASE("degenerate zero score flags instead of dividing") {
    TermCountScorer scorer;
    Query q{"q", "zebra"};
    Document d{"d", "ant bee. cat dog."};
    auto e = explain_sampled(q, d, scorer, sentence_params(2));
    CHECK(e.degenerate);
    CHECK(e.rationales.empty());
}

TEST_CASE("n_per_sample above segment count clamps with a warning") {
    TermCountScorer scorer;
    Query q{"q", "ant"};
    Document d{"d", "ant bee. cat ant."};
    ExplanationParams p;
    p.granularity = Granularity::sentence;
    p.m = 2;
    p.n_per_sample = 10;
    p.num_samples = 4;
    int warnings = 0;
    auto e = explain_sampled(q, d, scorer, p, [&](const std::string&) { ++warnings; });
    CHECK(warnings == 1);
    CHECK(!e.rationales.empty());
}

TEST_CASE("greedy m=1 equals exhaustive single-sentence argmax") {
    TermCountScorer scorer;
    Query q{"q", "ant bee"};
    Document d{"d", "Ant here. Bee ant there. Nothing. Bee alone."};
    auto sentences = split_sentences(d.text, d.doc_id);
    double base = scorer.score(q.text, d.text);
    double best = -1e300;
    std::string best_text;
    for (const auto& s : sentences) {
        double phi = (base - scorer.score(q.text, mask_segments(d.text, {s}))) / base;
        if (phi > best) {
            best = phi;
            best_text = s.text;
        }
    }
    ExplanationParams p;
    p.m = 1;
    auto e = explain_greedy(q, d, scorer, p);
    REQUIRE(e.rationales.size() == 1);
    CHECK(e.rationales[0].segment.text == best_text);
    CHECK(e.rationales[0].weight == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("greedy finds the only query-bearing sentence first") {
    TermCountScorer scorer;
    Query q{"q", "solar"};
    Document d{"d", "Nothing here. Solar is the topic. Still nothing."};
    ExplanationParams p;
    p.m = 2;
    auto e = explain_greedy(q, d, scorer, p);
    REQUIRE(e.rationales.size() >= 1);
    CHECK(e.rationales[0].segment.text == "Solar is the topic.");
    CHECK(e.rationales[0].weight == doctest::Approx(1.0));
    // after removing it the residual score is 0: truncation, not a phantom pick
    CHECK(e.truncated);
}

TEST_CASE("greedy m=2 matches a brute-force replay of the recurrence") {
    TermCountScorer scorer;
    Query q{"q", "ant bee cat"};
    Document d{"d", "Ant and bee. Cat alone. Bee bee cat. Ant only."};
    ExplanationParams p;
    p.m = 2;
    auto e = explain_greedy(q, d, scorer, p);
    REQUIRE(e.rationales.size() == 2);

    // independent replay with direct score calls
    auto sentences = split_sentences(d.text, d.doc_id);
    std::vector<Segment> removed;
    for (int step = 0; step < 2; ++step) {
        double base = scorer.score(q.text, mask_segments(d.text, removed));
        double best = -1e300;
        Segment pick;
        for (const auto& s : sentences) {
            bool used = false;
            for (const auto& r : removed)
                if (r.char_start == s.char_start) used = true;
            if (used) continue;
            auto trial = removed;
            trial.push_back(s);
            double phi = (base - scorer.score(q.text, mask_segments(d.text, trial))) / base;
            if (phi > best) {
                best = phi;
                pick = s;
            }
        }
        CHECK(e.rationales[static_cast<std::size_t>(step)].segment.char_start == pick.char_start);
        CHECK(e.rationales[static_cast<std::size_t>(step)].weight ==
              doctest::Approx(best).epsilon(1e-12));
        removed.push_back(pick);
    }
}

TEST_CASE("greedy prefix property") {
    TermCountScorer scorer;
    Query q{"q", "ant bee cat dog"};
    Document d{"d", "Ant bee here. Cat dog there. Bee cat mix. Dog ant end. Empty filler."};
    for (int m = 1; m <= 4; ++m) {
        ExplanationParams pa, pb;
        pa.m = m;
        pb.m = m + 1;
        auto a = explain_greedy(q, d, scorer, pa);
        auto b = explain_greedy(q, d, scorer, pb);
        REQUIRE(a.rationales.size() <= b.rationales.size());
        for (std::size_t i = 0; i < a.rationales.size(); ++i)
            CHECK(a.rationales[i].segment.char_start == b.rationales[i].segment.char_start);
    }
}

TEST_CASE("greedy m beyond sentence count returns all sentences") {
    TermCountScorer scorer;
    Query q{"q", "ant bee"};
    Document d{"d", "Ant one. Bee two."};
    ExplanationParams p;
    p.m = 10;
    auto e = explain_greedy(q, d, scorer, p);
    CHECK(e.rationales.size() == 2);
}

TEST_CASE("pseudo-document reconstruction and ordering") {
    TermCountScorer scorer;
    Query q{"q", "ant"};
    Document d{"d", "Ant first. Middle part. Ant last."};
    auto e = explain_sampled(q, d, scorer, sentence_params(3));
    auto pseudo = build_pseudo_document(d, e);
    CHECK(pseudo.text == normalize_whitespace(d.text));

    // two rationales selected in weight order still concatenate in doc order
    ExplanationSet two;
    two.doc_id = d.doc_id;
    auto sentences = split_sentences(d.text, d.doc_id);
    two.rationales.push_back({sentences[2], 0.9});
    two.rationales.push_back({sentences[0], 0.5});
    CHECK(build_pseudo_document(d, two).text == "Ant first. Ant last.");

    ExplanationSet empty;
    CHECK_THROWS_AS(build_pseudo_document(d, empty), ArgumentError);
}

TEST_CASE("single rationale pseudo document is the segment text") {
    Document d{"d", "One two. Three four."};
    ExplanationSet e;
    e.rationales.push_back({split_sentences(d.text, d.doc_id)[1], 1.0});
    CHECK(build_pseudo_document(d, e).text == "Three four.");
}

TEST_CASE("ablate_combinations m_max=1 equals leave-one-out") {
    TermCountScorer scorer;
    Query q{"q", "ant bee"};
    Document d{"d", "ant bee cat dog"};
    auto spans = word_windows(d.text, 1, 0, d.doc_id);
    auto result = ablate_combinations(q, d, scorer, spans, 1);
    REQUIRE(result.combinations.size() == spans.size());
    double base = scorer.score(q.text, d.text);
    for (const auto& [combo, s] : result.combinations) {
        REQUIRE(combo.size() == 1);
        double expect =
            scorer.score(q.text, mask_segments(d.text, {spans[static_cast<std::size_t>(combo[0])]})) /
            base;
        CHECK(s == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("masking all query terms gives fidelity 1") {
    TermCountScorer scorer;
    Query q{"q", "ant"};
    Document d{"d", "ant bee cat"};
    auto spans = word_windows(d.text, 1, 0, d.doc_id);
    auto result = ablate_combinations(q, d, scorer, spans, 1);
    CHECK(result.fidelity[0] == doctest::Approx(1.0));  // span "ant"
    CHECK(result.fidelity[1] == doctest::Approx(0.0));
}

TEST_CASE("4 spans at m_max=2 match direct enumeration") {
    TermCountScorer scorer;
    Query q{"q", "ant bee cat dog"};
    Document d{"d", "ant bee cat dog"};
    auto spans = word_windows(d.text, 1, 0, d.doc_id);
    REQUIRE(spans.size() == 4);
    auto result = ablate_combinations(q, d, scorer, spans, 2);
    CHECK(result.combinations.size() == 10);  // C(4,1) + C(4,2)
    CHECK_FALSE(result.sampled);
    double base = scorer.score(q.text, d.text);
    for (const auto& [combo, s] : result.combinations) {
        std::vector<Segment> masked;
        for (int i : combo) masked.push_back(spans[static_cast<std::size_t>(i)]);
        CHECK(s == doctest::Approx(scorer.score(q.text, mask_segments(d.text, masked)) / base)
                       .epsilon(1e-12));
    }
    // fidelity is the max drop over combinations containing the span
    for (std::size_t j = 0; j < spans.size(); ++j) {
        double want = 0.0;
        for (const auto& [combo, s] : result.combinations)
            if (std::find(combo.begin(), combo.end(), static_cast<int>(j)) != combo.end())
                want = std::max(want, 1.0 - s);
        CHECK(result.fidelity[j] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("combination budget triggers seeded subsampling") {
    TermCountScorer scorer;
    Query q{"q", "t0"};
    std::string text;
    for (int i = 0; i < 12; ++i) text += (i ? " t" : "t") + std::to_string(i);
    Document d{"d", text};
    auto spans = word_windows(d.text, 1, 0, d.doc_id);
    auto a = ablate_combinations(q, d, scorer, spans, 3, 50, 7);
    CHECK(a.sampled);
    CHECK(a.combinations.size() == 50);
    auto b = ablate_combinations(q, d, scorer, spans, 3, 50, 7);
    REQUIRE(b.combinations.size() == a.combinations.size());
    for (std::size_t i = 0; i < a.combinations.size(); ++i)
        CHECK(a.combinations[i].first == b.combinations[i].first);
}

TEST_CASE("full-coverage pseudo document scores like the original under BM25") {
    auto corpus = load_corpus(xrank::test::fixtures_dir() + "/corpus.jsonl");
    auto index = std::make_shared<InvertedIndex>(InvertedIndex::build(corpus));
    Bm25Scorer scorer(index, {});
    Query q{"q", "solar energy"};
    for (const auto& d : corpus) {
        if (scorer.score(q.text, d.text) == 0.0) continue;
        ExplanationParams p = sentence_params(1000);
        auto e = explain_sampled(q, d, scorer, p);
        auto pseudo = build_pseudo_document(d, e);
        CHECK(scorer.score(q.text, pseudo.text) ==
              doctest::Approx(scorer.score(q.text, normalize_whitespace(d.text))).epsilon(1e-9));
    }
}
