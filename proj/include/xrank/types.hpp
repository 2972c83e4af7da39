#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xrank {

using WarnFn = std::function<void(const std::string&)>;

struct Document {
    std::string doc_id;
    std::string text;
};

struct Query {
    std::string query_id;
    std::string text;
};

struct RunEntry {
    std::string doc_id;
    double score = 0.0;
    int rank = 0;
};

// Ranks are 1..k consecutive, scores non-increasing, doc_ids distinct.
struct RankedList {
    std::string query_id;
    std::vector<RunEntry> entries;
};

// Doc-level grades plus sub-document relevant passages R(D_i) and
// human-annotated spans H_i. Keys are (query_id, doc_id).
struct RelevanceStore {
    std::map<std::pair<std::string, std::string>, int> doc_grades;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> relevant_passages;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> human_spans;

    int grade(const std::string& qid, const std::string& did) const {
        auto it = doc_grades.find({qid, did});
        return it == doc_grades.end() ? 0 : it->second;
    }
};

enum class Granularity { sentence, word_window, chunk };

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);

struct Segment {
    std::string doc_id;
    Granularity granularity = Granularity::sentence;
    int index = 0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string text;
};

struct PerQueryMetrics {
    std::optional<double> ndcg;
    std::optional<double> tau;       // MRC contribution
    std::optional<double> mer;
    std::optional<double> s_c;
    std::optional<double> jaccard;
    int excluded_docs = 0;           // degenerate-score documents
    bool tau_excluded = false;       // < 2 scorable docs
};

struct EvalReport {
    std::map<std::string, PerQueryMetrics> per_query;
    std::optional<double> ndcg_mean;
    std::optional<double> mrc;
    std::optional<double> mer;
    std::optional<double> s_c;
    std::optional<double> jaccard_mean;
    int excluded_queries = 0;
    std::map<std::string, std::string> params;  // full parameter provenance
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ScorerError : std::runtime_error {
    ScorerError(const std::string& msg, std::uint64_t request_id = 0)
        : std::runtime_error(msg), request_id(request_id) {}
    std::uint64_t request_id;
};

}  // namespace xrank
