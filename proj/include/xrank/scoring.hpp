#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "xrank/types.hpp"

namespace xrank {

struct BM25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::string doc_id;
    int tf = 0;
};

class InvertedIndex {
  public:
    static InvertedIndex build(const std::vector<Document>& corpus);

    std::size_t num_docs() const { return n_docs_; }
    double avgdl() const { return avgdl_; }
    int doc_length(const std::string& doc_id) const;
    int df(const std::string& term) const;
    double idf(const std::string& term) const;  // ln((N - df + 0.5)/(df + 0.5) + 1)
    const std::vector<Posting>* postings(const std::string& term) const;
    const std::map<std::string, std::vector<Posting>>& all_postings() const { return postings_; }
    const std::map<std::string, int>& doc_lengths() const { return doc_lengths_; }

    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

  private:
    std::map<std::string, std::vector<Posting>> postings_;
    std::map<std::string, int> doc_lengths_;
    double avgdl_ = 0.0;
    std::size_t n_docs_ = 0;
};

// Okapi BM25 over arbitrary text: tf and |D| from doc_text, df/avgdl/N from
// the index. Supports scoring pseudo-documents against corpus statistics.
double bm25_score(const InvertedIndex& index, const BM25Params& params,
                  const std::string& query_text, const std::string& doc_text);

RankedList retrieve_topk(const InvertedIndex& index, const BM25Params& params,
                         const Query& query, const std::vector<Document>& corpus, int k);

// Uniform theta(Q, D) contract over built-in and external scorers.
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual std::vector<double> score_batch(const std::string& query_text,
                                            const std::vector<std::string>& texts) = 0;
    virtual bool deterministic() const { return true; }
    virtual std::string fingerprint() const = 0;

    double score(const std::string& query_text, const std::string& text) {
        return score_batch(query_text, {text})[0];
    }
};

class Bm25Scorer : public Scorer {
  public:
    Bm25Scorer(std::shared_ptr<const InvertedIndex> index, BM25Params params)
        : index_(std::move(index)), params_(params) {}
    std::vector<double> score_batch(const std::string& query_text,
                                    const std::vector<std::string>& texts) override;
    std::string fingerprint() const override;

  private:
    std::shared_ptr<const InvertedIndex> index_;
    BM25Params params_;
};

struct ChunkedScore {
    double score = 0.0;
    int argmax_chunk = 0;
};

// Max-aggregation over non-overlapping sentence chunks.
ChunkedScore score_document_chunked(Scorer& scorer, const std::string& query_text,
                                    const std::string& doc_text, int chunk_size = 3);

}  // namespace xrank
