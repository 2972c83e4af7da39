#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>

#include "xrank/config.hpp"
#include "xrank/corpus_io.hpp"
#include "xrank/metrics.hpp"
#include "xrank/rationales.hpp"
#include "xrank/scoring.hpp"
#include "xrank/types.hpp"

namespace xrank {

// Thrown after a mid-run scorer failure once partial progress has been
// checkpointed; callers map this to the partial-failure exit code.
struct PartialFailure : std::runtime_error {
    PartialFailure(const std::string& msg, std::string checkpoint)
        : std::runtime_error(msg), checkpoint_path(std::move(checkpoint)) {}
    std::string checkpoint_path;
};

// Memoizes scorer calls keyed by (scorer fingerprint, query, text hash).
class CachingScorer : public Scorer {
  public:
    CachingScorer(std::shared_ptr<Scorer> inner, bool enabled)
        : inner_(std::move(inner)), enabled_(enabled && inner_->deterministic()) {}
    std::vector<double> score_batch(const std::string& query_text,
                                    const std::vector<std::string>& texts) override;
    bool deterministic() const override { return inner_->deterministic(); }
    std::string fingerprint() const override { return inner_->fingerprint(); }

  private:
    std::shared_ptr<Scorer> inner_;
    bool enabled_;
    std::unordered_map<std::string, double> cache_;
    std::mutex mutex_;
};

// Loaded, immutable inputs shared by evaluation points.
class Pipeline {
  public:
    // scorer_override skips scorer construction from the config; everything
    // else (retrieval, caching, checkpoints) behaves identically.
    explicit Pipeline(RunConfig config, std::shared_ptr<Scorer> scorer_override = nullptr);

    EvalReport run_evaluation();
    // One report per (m, w) point; failed points carry params["failed"].
    std::vector<std::pair<std::pair<int, int>, EvalReport>> sweep();

    const std::vector<RankedList>& ranked_lists() const { return lists_; }
    const std::vector<ExplanationSet>& last_explanations() const { return last_explanations_; }
    Scorer& scorer() { return *scorer_; }
    const RunConfig& config() const { return config_; }

  private:
    EvalReport run_point(int m, int w);
    const std::string& lookup_query_text(const std::string& query_id) const;
    ExplanationSet full_explanation(const Query& query, const Document& doc, int w);
    static ExplanationSet slice_explanation(const ExplanationSet& full, int m);
    void explain_all(int w);
    void write_checkpoint();
    void load_checkpoint();

    RunConfig config_;
    std::vector<Document> corpus_;
    std::map<std::string, const Document*> docs_by_id_;
    std::vector<Query> queries_;
    RelevanceStore relevance_;
    bool have_qrels_ = false;
    bool have_subdoc_ = false;
    bool have_human_spans_ = false;
    std::set<std::string> stopwords_;
    std::shared_ptr<const InvertedIndex> index_;
    std::shared_ptr<Scorer> scorer_;
    std::vector<RankedList> lists_;  // top-k per query

    // Full-depth explanations cached across sweep points, keyed by
    // (query_id, doc_id, w).
    std::map<std::tuple<std::string, std::string, int>, ExplanationSet> full_explanations_;
    std::mutex explain_mutex_;
    std::vector<ExplanationSet> last_explanations_;
};

std::string sweep_table(const std::vector<std::pair<std::pair<int, int>, EvalReport>>& points);

}  // namespace xrank
