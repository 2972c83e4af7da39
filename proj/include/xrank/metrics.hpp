#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "xrank/rationales.hpp"
#include "xrank/types.hpp"

namespace xrank {

struct TauResult {
    double tau = 0.0;
    long concordant = 0;
    long discordant = 0;
    long tied_pairs = 0;  // tied in either ranking
};

// Kendall tau-b over two rank (or score) vectors aligned by position.
TauResult kendall_tau(const std::vector<double>& ranks_a, const std::vector<double>& ranks_b);

// Convenience over two orderings of the identical item set.
TauResult kendall_tau(const std::vector<std::string>& order_a,
                      const std::vector<std::string>& order_b);

struct MrcResult {
    double mrc = 0.0;
    std::map<std::string, double> per_query_tau;
    int excluded_queries = 0;  // fewer than 2 scorable docs
};

// Rerank each query's top-k by pseudo-document scores (ties broken by
// ascending doc_id) and correlate with the original order. Docs missing
// from `rescored` are treated as degenerate and excluded.
MrcResult mrc(const std::vector<RankedList>& original,
              const std::map<std::pair<std::string, std::string>, double>& rescored);

const std::set<std::string>& default_stopwords();
std::set<std::string> load_stopwords(const std::string& path);

// Term-frequency cosine over tokenized texts with stopwords removed.
double cosine_similarity(const std::string& text_a, const std::string& text_b,
                         const std::set<std::string>& stopwords = default_stopwords());

// Mean Explanation Relevance: mean over queries, top-k docs and m rationale
// slots of the best cosine match against the document's relevant passages.
// Missing rationale slots and empty passage sets contribute 0 while the
// normalization stays |Q| * m * k.
struct MerResult {
    double mer = 0.0;
    std::map<std::string, double> per_query;
};
MerResult mer(const std::vector<RankedList>& lists,
              const std::map<std::pair<std::string, std::string>, ExplanationSet>& explanations,
              const RelevanceStore& relevance, int k, int m,
              const std::set<std::string>& stopwords = default_stopwords());

struct NdcgResult {
    double ndcg = 0.0;
    bool no_relevant = false;  // query has no relevant docs in the qrels
};
NdcgResult ndcg_at_k(const RankedList& ranked, const RelevanceStore& relevance, int k);

struct ConsistencyResult {
    std::map<std::string, double> per_doc;  // C_i
    double s_c = 0.0;
    int excluded_docs = 0;
};
ConsistencyResult consistency_pool(
    const std::map<std::string, std::vector<double>>& masked_scores_per_doc);

double jaccard_spans(const ExplanationSet& machine, const std::vector<std::string>& human_spans);

}  // namespace xrank
