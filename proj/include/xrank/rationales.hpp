#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xrank/scoring.hpp"
#include "xrank/segmentation.hpp"
#include "xrank/types.hpp"

namespace xrank {

struct Rationale {
    Segment segment;
    double weight = 0.0;  // occlusion importance
};

struct ExplanationParams {
    Granularity granularity = Granularity::sentence;
    int m = 3;               // rationales per document
    int w = 5;               // word-window length
    int n_per_sample = 1;    // segments masked jointly per draw
    int num_samples = 0;     // 0 = 5x segment count
    int chunk_size = 3;
    int chunk_threshold = 12;  // greedy switches to chunked scoring above this many sentences
    bool exhaustive = false;   // one pass per segment instead of sampling
    bool mean_normalize = false;  // divide accumulated weights by visit counts
    std::uint64_t seed = 42;
};

struct ExplanationSet {
    std::string query_id;
    std::string doc_id;
    Granularity granularity = Granularity::sentence;
    std::vector<Rationale> rationales;
    ExplanationParams params;
    bool degenerate = false;  // theta(Q, D) == 0, all weights zero
    bool truncated = false;   // greedy stopped early on a zero residual score
};

struct PseudoDocument {
    std::string doc_id;
    std::string text;
};

// Sampled joint-occlusion explainer. Each draw masks n_per_sample distinct
// segments, the relative absolute score change divided by n_per_sample is
// accumulated onto each masked segment; returns the top-m by accumulated
// weight. Exhaustive mode visits each segment alone exactly once.
ExplanationSet explain_sampled(const Query& query, const Document& doc, Scorer& scorer,
                               const ExplanationParams& params, const WarnFn& warn = {});

// Greedy sentence explainer: repeatedly scores each remaining sentence's
// signed relative drop against the current residual document, removes the
// best one. Rationales are in selection order.
ExplanationSet explain_greedy(const Query& query, const Document& doc, Scorer& scorer,
                              const ExplanationParams& params);

PseudoDocument build_pseudo_document(const Document& doc, const ExplanationSet& explanation);

struct AblationResult {
    // Masked relative score per evaluated combination (segment indices into `spans`).
    std::vector<std::pair<std::vector<int>, double>> combinations;
    // Per-span fidelity: max over combinations containing the span of (1 - s_ic).
    std::vector<double> fidelity;
    bool sampled = false;  // budget forced a seeded subsample
};

AblationResult ablate_combinations(const Query& query, const Document& doc, Scorer& scorer,
                                   const std::vector<Segment>& spans, int m_max,
                                   int budget = 1024, std::uint64_t seed = 42);

}  // namespace xrank
