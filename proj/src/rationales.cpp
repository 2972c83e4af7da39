#include "xrank/rationales.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace xrank {

namespace {

// Descending weight, ties broken by earlier document position.
bool weight_order(const Rationale& a, const Rationale& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.segment.char_start < b.segment.char_start;
}

bool overlaps(const Segment& a, const Segment& b) {
    return a.char_start < b.char_end && b.char_start < a.char_end;
}

}  // namespace

ExplanationSet explain_sampled(const Query& query, const Document& doc, Scorer& scorer,
                               const ExplanationParams& params, const WarnFn& warn) {
    ExplanationSet out;
    out.query_id = query.query_id;
    out.doc_id = doc.doc_id;
    out.granularity = params.granularity;
    out.params = params;

    auto segments = segment(doc.text, params.granularity, params.w, params.chunk_size, doc.doc_id);
    if (segments.empty()) throw ArgumentError("document " + doc.doc_id + " has no segments");

    double base = scorer.score(query.text, doc.text);
    if (base == 0.0) {
        out.degenerate = true;
        return out;
    }

    const int n_segs = static_cast<int>(segments.size());
    int n_per = params.n_per_sample;
    if (n_per > n_segs) {
        if (warn)
            warn("n_per_sample " + std::to_string(n_per) + " > segment count " +
                 std::to_string(n_segs) + " for doc " + doc.doc_id + ", clamping");
        n_per = n_segs;
    }
    if (n_per < 1) throw ArgumentError("n_per_sample must be >= 1");

    std::vector<double> weight(segments.size(), 0.0);
    std::vector<int> visits(segments.size(), 0);

    auto accumulate = [&](const std::vector<int>& chosen) {
        std::vector<Segment> masked_set;
        for (int idx : chosen) masked_set.push_back(segments[static_cast<std::size_t>(idx)]);
        std::string masked = mask_segments(doc.text, masked_set);
        double occluded = scorer.score(query.text, masked);
        double phi = std::fabs(base - occluded) / base / static_cast<double>(chosen.size());
        for (int idx : chosen) {
            weight[static_cast<std::size_t>(idx)] += phi;
            ++visits[static_cast<std::size_t>(idx)];
        }
    };

    if (params.exhaustive) {
        for (int i = 0; i < n_segs; ++i) accumulate({i});
    } else {
        int num_samples = params.num_samples > 0 ? params.num_samples : 5 * n_segs;
        std::mt19937_64 rng(params.seed);
        std::vector<int> pool(segments.size());
        std::iota(pool.begin(), pool.end(), 0);
        for (int s = 0; s < num_samples; ++s) {
            // Partial Fisher-Yates draw of n_per distinct segments.
            std::vector<int> chosen;
            for (int t = 0; t < n_per; ++t) {
                std::uniform_int_distribution<int> dist(t, n_segs - 1);
                std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(dist(rng))]);
                chosen.push_back(pool[static_cast<std::size_t>(t)]);
            }
            accumulate(chosen);
        }
    }

    if (params.mean_normalize)
        for (std::size_t i = 0; i < weight.size(); ++i)
            if (visits[i] > 0) weight[i] /= visits[i];

    std::vector<Rationale> ranked;
    for (std::size_t i = 0; i < segments.size(); ++i) ranked.push_back({segments[i], weight[i]});
    std::sort(ranked.begin(), ranked.end(), weight_order);

    for (const auto& r : ranked) {
        if (static_cast<int>(out.rationales.size()) >= params.m) break;
        bool clash = false;
        for (const auto& kept : out.rationales)
            if (overlaps(kept.segment, r.segment)) clash = true;
        if (!clash) out.rationales.push_back(r);
    }
    return out;
}

ExplanationSet explain_greedy(const Query& query, const Document& doc, Scorer& scorer,
                              const ExplanationParams& params) {
    ExplanationSet out;
    out.query_id = query.query_id;
    out.doc_id = doc.doc_id;
    out.granularity = Granularity::sentence;
    out.params = params;

    auto sentences = split_sentences(doc.text, doc.doc_id);
    if (sentences.empty()) throw ArgumentError("document " + doc.doc_id + " has no sentences");

    bool use_chunked = static_cast<int>(sentences.size()) > params.chunk_threshold;
    auto theta = [&](const std::string& text) -> double {
        if (text.empty()) return 0.0;
        if (use_chunked) return score_document_chunked(scorer, query.text, text, params.chunk_size).score;
        return scorer.score(query.text, text);
    };

    int m = std::min(params.m, static_cast<int>(sentences.size()));
    std::vector<Segment> removed;
    std::vector<std::size_t> remaining(sentences.size());
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});

    for (int step = 0; step < m; ++step) {
        std::string residual = mask_segments(doc.text, removed);
        double base = theta(residual);
        if (base == 0.0) {
            out.truncated = true;
            if (step == 0) out.degenerate = true;
            break;
        }
        double best_phi = 0.0;
        std::size_t best_pos = 0;
        bool found = false;
        for (std::size_t pos = 0; pos < remaining.size(); ++pos) {
            auto trial = removed;
            trial.push_back(sentences[remaining[pos]]);
            double occluded = theta(mask_segments(doc.text, trial));
            double phi = (base - occluded) / base;
            // Ties go to the earlier document position (remaining is in order).
            if (!found || phi > best_phi) {
                best_phi = phi;
                best_pos = pos;
                found = true;
            }
        }
        out.rationales.push_back({sentences[remaining[best_pos]], best_phi});
        removed.push_back(sentences[remaining[best_pos]]);
        remaining.erase(remaining.begin() + static_cast<long>(best_pos));
    }
    return out;
}

PseudoDocument build_pseudo_document(const Document& doc, const ExplanationSet& explanation) {
    if (explanation.rationales.empty())
        throw ArgumentError("cannot build a pseudo-document from an empty explanation");
    auto rationales = explanation.rationales;
    std::sort(rationales.begin(), rationales.end(), [](const Rationale& a, const Rationale& b) {
        return a.segment.char_start < b.segment.char_start;
    });
    std::string text;
    for (const auto& r : rationales) {
        if (!text.empty()) text.push_back(' ');
        text += normalize_whitespace(r.segment.text);
    }
    return {doc.doc_id, text};
}

AblationResult ablate_combinations(const Query& query, const Document& doc, Scorer& scorer,
                                   const std::vector<Segment>& spans, int m_max, int budget,
                                   std::uint64_t seed) {
    if (m_max < 1) throw ArgumentError("m_max must be >= 1");
    if (spans.empty()) throw ArgumentError("no spans to ablate");
    for (std::size_t i = 0; i < spans.size(); ++i)
        for (std::size_t j = i + 1; j < spans.size(); ++j)
            if (overlaps(spans[i], spans[j])) throw ArgumentError("overlapping spans");

    double base = scorer.score(query.text, doc.text);
    if (base == 0.0) throw StateError("theta(Q, D) = 0, relative scores undefined");

    const int n = static_cast<int>(spans.size());
    std::vector<std::vector<int>> combos;
    std::vector<int> current;
    auto gen = [&](auto&& self, int start, int depth) -> void {
        if (depth > 0) combos.push_back(current);
        if (depth == std::min(m_max, n)) return;
        for (int i = start; i < n; ++i) {
            current.push_back(i);
            self(self, i + 1, depth + 1);
            current.pop_back();
        }
    };
    gen(gen, 0, 0);

    AblationResult result;
    if (static_cast<int>(combos.size()) > budget) {
        std::mt19937_64 rng(seed);
        std::shuffle(combos.begin(), combos.end(), rng);
        combos.resize(static_cast<std::size_t>(budget));
        result.sampled = true;
    }

    result.fidelity.assign(spans.size(), 0.0);
    for (const auto& combo : combos) {
        std::vector<Segment> masked_set;
        for (int idx : combo) masked_set.push_back(spans[static_cast<std::size_t>(idx)]);
        double s_ic = scorer.score(query.text, mask_segments(doc.text, masked_set)) / base;
        result.combinations.emplace_back(combo, s_ic);
        for (int idx : combo)
            result.fidelity[static_cast<std::size_t>(idx)] =
                std::max(result.fidelity[static_cast<std::size_t>(idx)], 1.0 - s_ic);
    }
    return result;
}

}  // namespace xrank
