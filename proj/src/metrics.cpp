#include "xrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "xrank/segmentation.hpp"

namespace xrank {

TauResult kendall_tau(const std::vector<double>& ranks_a, const std::vector<double>& ranks_b) {
    if (ranks_a.size() != ranks_b.size()) throw ArgumentError("rank vectors differ in length");
    const std::size_t n = ranks_a.size();
    if (n < 2) throw ArgumentError("kendall_tau needs at least 2 items");

    long concordant = 0, discordant = 0, tied_a = 0, tied_b = 0, tied_either = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double da = ranks_a[i] - ranks_a[j];
            double db = ranks_b[i] - ranks_b[j];
            bool ta = da == 0.0, tb = db == 0.0;
            if (ta) ++tied_a;
            if (tb) ++tied_b;
            if (ta || tb) {
                ++tied_either;
                continue;
            }
            if (da * db > 0.0)
                ++concordant;
            else
                ++discordant;
        }
    }
    const long n0 = static_cast<long>(n) * (static_cast<long>(n) - 1) / 2;
    // single sqrt keeps tau exactly +-1 in the tie-free extremes
    double denom = std::sqrt(static_cast<double>(n0 - tied_a) * static_cast<double>(n0 - tied_b));
    TauResult r;
    r.concordant = concordant;
    r.discordant = discordant;
    r.tied_pairs = tied_either;
    r.tau = denom == 0.0 ? 0.0 : static_cast<double>(concordant - discordant) / denom;
    return r;
}

TauResult kendall_tau(const std::vector<std::string>& order_a,
                      const std::vector<std::string>& order_b) {
    if (order_a.size() != order_b.size()) throw ArgumentError("orderings differ in length");
    std::map<std::string, double> pos_b;
    for (std::size_t i = 0; i < order_b.size(); ++i) {
        if (!pos_b.emplace(order_b[i], static_cast<double>(i)).second)
            throw ArgumentError("duplicate item in ordering: " + order_b[i]);
    }
    std::vector<double> ra, rb;
    for (std::size_t i = 0; i < order_a.size(); ++i) {
        auto it = pos_b.find(order_a[i]);
        if (it == pos_b.end()) throw ArgumentError("orderings cover different item sets");
        ra.push_back(static_cast<double>(i));
        rb.push_back(it->second);
    }
    return kendall_tau(ra, rb);
}

MrcResult mrc(const std::vector<RankedList>& original,
              const std::map<std::pair<std::string, std::string>, double>& rescored) {
    MrcResult result;
    double sum = 0.0;
    int counted = 0;
    for (const auto& rl : original) {
        struct Row {
            std::string doc_id;
            int orig_rank;
            double pseudo_score;
        };
        std::vector<Row> rows;
        for (const auto& e : rl.entries) {
            auto it = rescored.find({rl.query_id, e.doc_id});
            if (it == rescored.end()) continue;  // degenerate, excluded
            rows.push_back({e.doc_id, e.rank, it->second});
        }
        if (rows.size() < 2) {
            ++result.excluded_queries;
            continue;
        }
        std::vector<std::string> orig_order, pseudo_order;
        auto by_orig = rows;
        std::sort(by_orig.begin(), by_orig.end(),
                  [](const Row& a, const Row& b) { return a.orig_rank < b.orig_rank; });
        for (const auto& r : by_orig) orig_order.push_back(r.doc_id);
        auto by_pseudo = rows;
        std::sort(by_pseudo.begin(), by_pseudo.end(), [](const Row& a, const Row& b) {
            if (a.pseudo_score != b.pseudo_score) return a.pseudo_score > b.pseudo_score;
            return a.doc_id < b.doc_id;
        });
        for (const auto& r : by_pseudo) pseudo_order.push_back(r.doc_id);
        double tau = kendall_tau(orig_order, pseudo_order).tau;
        result.per_query_tau[rl.query_id] = tau;
        sum += tau;
        ++counted;
    }
    result.mrc = counted > 0 ? sum / counted : 0.0;
    return result;
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
        "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
        "both", "but", "by", "can", "cannot", "could", "did", "do", "does", "doing", "down",
        "during", "each", "few", "for", "from", "further", "had", "has", "have", "having",
        "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
        "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
        "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
        "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she", "should",
        "so", "some", "such", "than", "that", "the", "their", "theirs", "them", "themselves",
        "then", "there", "these", "they", "this", "those", "through", "to", "too", "under",
        "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
        "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours",
        "yourself", "yourselves",
    };
    return words;
}

std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open stopword file: " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

namespace {

std::map<std::string, int> tf_vector(const std::string& text, const std::set<std::string>& stop) {
    std::map<std::string, int> tf;
    for (const auto& t : tokenize(text))
        if (!stop.count(t.text)) ++tf[t.text];
    return tf;
}

}  // namespace

double cosine_similarity(const std::string& text_a, const std::string& text_b,
                         const std::set<std::string>& stopwords) {
    auto va = tf_vector(text_a, stopwords);
    auto vb = tf_vector(text_b, stopwords);
    if (va.empty() || vb.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [term, f] : va) {
        na += static_cast<double>(f) * f;
        auto it = vb.find(term);
        if (it != vb.end()) dot += static_cast<double>(f) * it->second;
    }
    for (const auto& [term, f] : vb) nb += static_cast<double>(f) * f;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

MerResult mer(const std::vector<RankedList>& lists,
              const std::map<std::pair<std::string, std::string>, ExplanationSet>& explanations,
              const RelevanceStore& relevance, int k, int m,
              const std::set<std::string>& stopwords) {
    if (k < 1 || m < 1) throw ArgumentError("mer requires k >= 1 and m >= 1");
    MerResult result;
    double total = 0.0;
    for (const auto& rl : lists) {
        double query_sum = 0.0;
        std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), rl.entries.size());
        for (std::size_t i = 0; i < depth; ++i) {
            const auto& did = rl.entries[i].doc_id;
            auto eit = explanations.find({rl.query_id, did});
            if (eit == explanations.end())
                throw IntegrityError("missing explanation for (" + rl.query_id + "," + did + ")");
            auto pit = relevance.relevant_passages.find({rl.query_id, did});
            if (pit == relevance.relevant_passages.end() || pit->second.empty()) continue;
            const auto& rationales = eit->second.rationales;
            std::size_t slots = std::min<std::size_t>(static_cast<std::size_t>(m), rationales.size());
            for (std::size_t j = 0; j < slots; ++j) {
                double best = 0.0;
                for (const auto& passage : pit->second)
                    best = std::max(best,
                                    cosine_similarity(rationales[j].segment.text, passage, stopwords));
                query_sum += best;
            }
        }
        double per_query = query_sum / (static_cast<double>(m) * k);
        result.per_query[rl.query_id] = per_query;
        total += per_query;
    }
    result.mer = lists.empty() ? 0.0 : total / static_cast<double>(lists.size());
    return result;
}

NdcgResult ndcg_at_k(const RankedList& ranked, const RelevanceStore& relevance, int k) {
    if (k < 1) throw ArgumentError("k must be >= 1");
    double dcg = 0.0;
    std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        int g = relevance.grade(ranked.query_id, ranked.entries[i].doc_id);
        dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> grades;
    for (const auto& [key, g] : relevance.doc_grades)
        if (key.first == ranked.query_id && g > 0) grades.push_back(g);
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(k), grades.size()); ++i)
        idcg += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    NdcgResult r;
    if (idcg == 0.0) {
        r.ndcg = 0.0;
        r.no_relevant = true;
    } else {
        r.ndcg = dcg / idcg;
    }
    return r;
}

ConsistencyResult consistency_pool(
    const std::map<std::string, std::vector<double>>& masked_scores_per_doc) {
    ConsistencyResult result;
    double sum = 0.0;
    int counted = 0;
    for (const auto& [doc_id, scores] : masked_scores_per_doc) {
        if (scores.empty()) {
            ++result.excluded_docs;
            continue;
        }
        double c = 0.0;
        for (double s : scores) c += s;
        c /= static_cast<double>(scores.size());
        result.per_doc[doc_id] = c;
        sum += c;
        ++counted;
    }
    result.s_c = counted > 0 ? sum / counted : 0.0;
    return result;
}

double jaccard_spans(const ExplanationSet& machine, const std::vector<std::string>& human_spans) {
    std::set<std::string> human;
    for (const auto& span : human_spans)
        for (const auto& t : tokenize(span)) human.insert(t.text);
    if (human.empty()) return 0.0;
    std::set<std::string> mach;
    for (const auto& r : machine.rationales)
        for (const auto& t : tokenize(r.segment.text)) mach.insert(t.text);
    if (mach.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : mach)
        if (human.count(t)) ++inter;
    std::size_t uni = mach.size() + human.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace xrank
