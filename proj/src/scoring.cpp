#include "xrank/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "xrank/segmentation.hpp"

namespace xrank {

InvertedIndex InvertedIndex::build(const std::vector<Document>& corpus) {
    InvertedIndex idx;
    idx.n_docs_ = corpus.size();
    std::uint64_t total_len = 0;
    for (const auto& doc : corpus) {
        auto tokens = tokenize(doc.text);
        idx.doc_lengths_[doc.doc_id] = static_cast<int>(tokens.size());
        total_len += tokens.size();
        std::map<std::string, int> tf;
        for (const auto& t : tokens) ++tf[t.text];
        for (const auto& [term, count] : tf) idx.postings_[term].push_back({doc.doc_id, count});
    }
    idx.avgdl_ = corpus.empty() ? 0.0 : static_cast<double>(total_len) / corpus.size();
    return idx;
}

int InvertedIndex::doc_length(const std::string& doc_id) const {
    auto it = doc_lengths_.find(doc_id);
    return it == doc_lengths_.end() ? 0 : it->second;
}

int InvertedIndex::df(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : static_cast<int>(it->second.size());
}

double InvertedIndex::idf(const std::string& term) const {
    double n = static_cast<double>(n_docs_);
    double d = static_cast<double>(df(term));
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

namespace {

constexpr char kIndexMagic[4] = {'X', 'R', 'I', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, 4);
}

std::uint32_t get_u32(std::istream& in) {
    char buf[4];
    in.read(buf, 4);
    if (!in) throw ParseError("truncated index file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

void put_str(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
    std::uint32_t len = get_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw ParseError("truncated index file");
    return s;
}

std::uint32_t fnv1a(const std::string& data) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : data) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

}  // namespace

void InvertedIndex::save(const std::string& path) const {
    std::ostringstream body;
    put_u32(body, static_cast<std::uint32_t>(n_docs_));
    put_u32(body, static_cast<std::uint32_t>(doc_lengths_.size()));
    for (const auto& [did, len] : doc_lengths_) {
        put_str(body, did);
        put_u32(body, static_cast<std::uint32_t>(len));
    }
    put_u32(body, static_cast<std::uint32_t>(postings_.size()));
    for (const auto& [term, plist] : postings_) {
        put_str(body, term);
        put_u32(body, static_cast<std::uint32_t>(plist.size()));
        for (const auto& p : plist) {
            put_str(body, p.doc_id);
            put_u32(body, static_cast<std::uint32_t>(p.tf));
        }
    }
    std::string payload = body.str();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write index: " + path);
    out.write(kIndexMagic, 4);
    put_u32(out, kIndexVersion);
    put_u32(out, fnv1a(payload));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open index: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kIndexMagic, 4) != 0)
        throw ParseError("not an index file: " + path);
    std::uint32_t version = get_u32(in);
    if (version != kIndexVersion)
        throw ParseError("index version mismatch: file has v" + std::to_string(version) +
                         ", expected v" + std::to_string(kIndexVersion));
    std::uint32_t checksum = get_u32(in);
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (fnv1a(payload) != checksum) throw ParseError("index checksum mismatch: " + path);

    std::istringstream body(payload);
    InvertedIndex idx;
    idx.n_docs_ = get_u32(body);
    std::uint64_t total_len = 0;
    std::uint32_t n_lens = get_u32(body);
    for (std::uint32_t i = 0; i < n_lens; ++i) {
        std::string did = get_str(body);
        std::uint32_t len = get_u32(body);
        idx.doc_lengths_[did] = static_cast<int>(len);
        total_len += len;
    }
    std::uint32_t n_terms = get_u32(body);
    for (std::uint32_t i = 0; i < n_terms; ++i) {
        std::string term = get_str(body);
        std::uint32_t n_post = get_u32(body);
        auto& plist = idx.postings_[term];
        for (std::uint32_t p = 0; p < n_post; ++p) {
            std::string did = get_str(body);
            plist.push_back({did, static_cast<int>(get_u32(body))});
        }
    }
    idx.avgdl_ = idx.n_docs_ == 0 ? 0.0 : static_cast<double>(total_len) / idx.n_docs_;
    return idx;
}

double bm25_score(const InvertedIndex& index, const BM25Params& params,
                  const std::string& query_text, const std::string& doc_text) {
    if (index.num_docs() == 0) throw StateError("cannot score against an empty index");
    auto doc_tokens = tokenize(doc_text);
    std::map<std::string, int> tf;
    for (const auto& t : doc_tokens) ++tf[t.text];
    double dl = static_cast<double>(doc_tokens.size());
    double avgdl = index.avgdl();
    double norm = avgdl > 0.0 ? params.k1 * (1.0 - params.b + params.b * dl / avgdl) : params.k1;

    std::set<std::string> query_terms;
    for (const auto& t : tokenize(query_text)) query_terms.insert(t.text);

    double score = 0.0;
    for (const auto& term : query_terms) {
        auto it = tf.find(term);
        if (it == tf.end()) continue;
        double f = static_cast<double>(it->second);
        score += index.idf(term) * f * (params.k1 + 1.0) / (f + norm);
    }
    return score;
}

RankedList retrieve_topk(const InvertedIndex& index, const BM25Params& params,
                         const Query& query, const std::vector<Document>& corpus, int k) {
    if (k < 1) throw ArgumentError("k must be >= 1");
    // Candidates: docs matching at least one query term.
    std::set<std::string> candidates;
    for (const auto& t : tokenize(query.text)) {
        if (const auto* plist = index.postings(t.text))
            for (const auto& p : *plist) candidates.insert(p.doc_id);
    }
    std::map<std::string, const Document*> by_id;
    for (const auto& d : corpus) by_id[d.doc_id] = &d;

    std::vector<RunEntry> scored;
    for (const auto& did : candidates) {
        auto it = by_id.find(did);
        if (it == by_id.end()) continue;
        scored.push_back({did, bm25_score(index, params, query.text, it->second->text), 0});
    }
    std::sort(scored.begin(), scored.end(), [](const RunEntry& a, const RunEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    RankedList rl;
    rl.query_id = query.query_id;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        scored[i].rank = static_cast<int>(i) + 1;
        rl.entries.push_back(scored[i]);
    }
    return rl;
}

std::vector<double> Bm25Scorer::score_batch(const std::string& query_text,
                                            const std::vector<std::string>& texts) {
    if (texts.empty()) throw ArgumentError("score_batch requires a non-empty text sequence");
    std::vector<double> scores;
    scores.reserve(texts.size());
    for (const auto& t : texts) scores.push_back(bm25_score(*index_, params_, query_text, t));
    return scores;
}

std::string Bm25Scorer::fingerprint() const {
    std::ostringstream ss;
    ss << "bm25:k1=" << params_.k1 << ":b=" << params_.b << ":N=" << index_->num_docs()
       << ":avgdl=" << index_->avgdl();
    return ss.str();
}

ChunkedScore score_document_chunked(Scorer& scorer, const std::string& query_text,
                                    const std::string& doc_text, int chunk_size) {
    auto chunks = chunk_sentences(doc_text, chunk_size);
    if (chunks.empty()) throw ArgumentError("cannot chunk-score an empty document");
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    auto scores = scorer.score_batch(query_text, texts);
    ChunkedScore result{scores[0], 0};
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > result.score) {
            result.score = scores[i];
            result.argmax_chunk = static_cast<int>(i);
        }
    }
    return result;
}

}  // namespace xrank
