#include "xrank/corpus_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace xrank {

using nlohmann::json;

std::string to_string(Granularity g) {
    switch (g) {
        case Granularity::sentence: return "sentence";
        case Granularity::word_window: return "word_window";
        case Granularity::chunk: return "chunk";
    }
    return "sentence";
}

Granularity granularity_from_string(const std::string& s) {
    if (s == "sentence") return Granularity::sentence;
    if (s == "word_window") return Granularity::word_window;
    if (s == "chunk") return Granularity::chunk;
    throw ArgumentError("unknown granularity: " + s);
}

namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    return in;
}

[[noreturn]] void line_error(const std::string& path, int lineno, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": " + what);
}

std::vector<std::pair<std::string, std::string>> load_id_text(const std::string& path,
                                                             CorpusFormat format) {
    auto in = open_or_throw(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (format == CorpusFormat::jsonl) {
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text"))
                line_error(path, lineno, "malformed jsonl record (need keys id, text)");
            out.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
        } else {
            auto tab = line.find('\t');
            if (tab == std::string::npos) line_error(path, lineno, "expected 2 tab-separated columns");
            out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
        }
    }
    return out;
}

}  // namespace

std::vector<Document> load_corpus(const std::string& path, CorpusFormat format) {
    std::vector<Document> docs;
    std::set<std::string> seen;
    for (auto& [id, text] : load_id_text(path, format)) {
        if (id.empty()) throw IntegrityError("empty doc_id in " + path);
        if (!seen.insert(id).second) throw IntegrityError("duplicate doc_id: " + id);
        docs.push_back({id, text});
    }
    return docs;
}

std::vector<Query> load_queries(const std::string& path, CorpusFormat format) {
    std::vector<Query> qs;
    std::set<std::string> seen;
    for (auto& [id, text] : load_id_text(path, format)) {
        if (!seen.insert(id).second) throw IntegrityError("duplicate query_id: " + id);
        qs.push_back({id, text});
    }
    return qs;
}

void load_qrels(const std::string& path, RelevanceStore& store, const WarnFn& warn) {
    auto in = open_or_throw(path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, iter, did, grade_s;
        if (!(ss >> qid >> iter >> did >> grade_s))
            line_error(path, lineno, "expected 4 whitespace-separated columns");
        int grade = 0;
        try {
            std::size_t pos = 0;
            grade = std::stoi(grade_s, &pos);
            if (pos != grade_s.size()) throw std::invalid_argument(grade_s);
        } catch (const std::exception&) {
            line_error(path, lineno, "non-integer grade: " + grade_s);
        }
        auto key = std::make_pair(qid, did);
        if (store.doc_grades.count(key) && warn)
            warn("duplicate qrels entry for (" + qid + "," + did + "), keeping last");
        store.doc_grades[key] = grade;
    }
}

namespace {

void load_span_file(const std::string& path, const char* key,
                    std::map<std::pair<std::string, std::string>, std::vector<std::string>>& dest,
                    const std::vector<std::string>& known_doc_ids, const WarnFn& warn) {
    auto in = open_or_throw(path);
    std::set<std::string> known(known_doc_ids.begin(), known_doc_ids.end());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("query_id") || !j.contains("doc_id") ||
            !j.contains(key) || !j[key].is_array())
            line_error(path, lineno, std::string("malformed record (need query_id, doc_id, ") + key + ")");
        std::string qid = j["query_id"].get<std::string>();
        std::string did = j["doc_id"].get<std::string>();
        if (!known.empty() && !known.count(did) && warn)
            warn(path + ":" + std::to_string(lineno) + ": doc_id " + did + " not in loaded corpus");
        dest[{qid, did}] = j[key].get<std::vector<std::string>>();
    }
}

}  // namespace

void load_subdoc_relevance(const std::string& path, RelevanceStore& store,
                           const std::vector<std::string>& known_doc_ids, const WarnFn& warn) {
    load_span_file(path, "passages", store.relevant_passages, known_doc_ids, warn);
}

void load_human_spans(const std::string& path, RelevanceStore& store, const WarnFn& warn) {
    load_span_file(path, "spans", store.human_spans, {}, warn);
}

std::vector<RankedList> read_run(const std::string& path) {
    auto in = open_or_throw(path);
    std::map<std::string, RankedList> by_qid;
    std::vector<std::string> order;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, q0, did, rank_s, score_s, tag;
        if (!(ss >> qid >> q0 >> did >> rank_s >> score_s >> tag))
            line_error(path, lineno, "expected 6 columns (qid Q0 docid rank score tag)");
        RunEntry e;
        try {
            std::size_t p1 = 0, p2 = 0;
            e.rank = std::stoi(rank_s, &p1);
            e.score = std::stod(score_s, &p2);
            if (p1 != rank_s.size() || p2 != score_s.size()) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            line_error(path, lineno, "rank/score column type mismatch");
        }
        e.doc_id = did;
        if (!by_qid.count(qid)) order.push_back(qid);
        by_qid[qid].query_id = qid;
        by_qid[qid].entries.push_back(e);
    }
    std::vector<RankedList> lists;
    for (auto& qid : order) {
        auto& rl = by_qid[qid];
        std::sort(rl.entries.begin(), rl.entries.end(),
                  [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
        std::set<std::string> dids;
        for (std::size_t i = 0; i < rl.entries.size(); ++i) {
            if (rl.entries[i].rank != static_cast<int>(i) + 1)
                throw IntegrityError("non-consecutive ranks for query " + qid);
            if (!dids.insert(rl.entries[i].doc_id).second)
                throw IntegrityError("duplicate doc_id " + rl.entries[i].doc_id + " for query " + qid);
        }
        lists.push_back(std::move(rl));
    }
    return lists;
}

namespace {

std::string format_score(double s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", s);
    return buf;
}

}  // namespace

void write_run(const std::vector<RankedList>& lists, const std::string& path, const std::string& tag) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write run file: " + path);
    for (const auto& rl : lists) {
        auto entries = rl.entries;
        std::sort(entries.begin(), entries.end(),
                  [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
        for (const auto& e : entries)
            out << rl.query_id << " Q0 " << e.doc_id << " " << e.rank << " "
                << format_score(e.score) << " " << tag << "\n";
    }
}

namespace {

json metric_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

std::string metric_tsv(const std::optional<double>& v) {
    return v ? format_score(*v) : "NA";
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["params"] = report.params;
    json pq = json::object();
    for (const auto& [qid, m] : report.per_query) {
        json row;
        row["ndcg"] = metric_json(m.ndcg);
        row["tau"] = metric_json(m.tau);
        row["mer"] = metric_json(m.mer);
        row["s_c"] = metric_json(m.s_c);
        row["jaccard"] = metric_json(m.jaccard);
        row["excluded_docs"] = m.excluded_docs;
        row["tau_excluded"] = m.tau_excluded;
        pq[qid] = row;
    }
    j["per_query"] = pq;
    json agg;
    agg["ndcg"] = metric_json(report.ndcg_mean);
    agg["mrc"] = metric_json(report.mrc);
    agg["mer"] = metric_json(report.mer);
    agg["s_c"] = metric_json(report.s_c);
    agg["jaccard"] = metric_json(report.jaccard_mean);
    agg["excluded_queries"] = report.excluded_queries;
    j["aggregate"] = agg;
    return j.dump(2) + "\n";
}

std::string report_to_tsv(const EvalReport& report) {
    std::ostringstream out;
    out << "query_id\tndcg\ttau\tmer\ts_c\tjaccard\texcluded_docs\n";
    for (const auto& [qid, m] : report.per_query) {
        out << qid << "\t" << metric_tsv(m.ndcg) << "\t" << metric_tsv(m.tau) << "\t"
            << metric_tsv(m.mer) << "\t" << metric_tsv(m.s_c) << "\t" << metric_tsv(m.jaccard)
            << "\t" << m.excluded_docs << "\n";
    }
    out << "ALL\t" << metric_tsv(report.ndcg_mean) << "\t" << metric_tsv(report.mrc) << "\t"
        << metric_tsv(report.mer) << "\t" << metric_tsv(report.s_c) << "\t"
        << metric_tsv(report.jaccard_mean) << "\t" << report.excluded_queries << "\n";
    return out.str();
}

std::string explanation_to_json(const ExplanationSet& e) {
    json j;
    j["query_id"] = e.query_id;
    j["doc_id"] = e.doc_id;
    j["granularity"] = to_string(e.granularity);
    json params;
    params["m"] = e.params.m;
    params["w"] = e.params.w;
    params["n_per_sample"] = e.params.n_per_sample;
    params["num_samples"] = e.params.num_samples;
    params["seed"] = e.params.seed;
    params["exhaustive"] = e.params.exhaustive;
    j["params"] = params;
    json rats = json::array();
    for (const auto& r : e.rationales) {
        json rj;
        rj["start"] = r.segment.char_start;
        rj["end"] = r.segment.char_end;
        rj["text"] = r.segment.text;
        rj["weight"] = r.weight;
        rj["index"] = r.segment.index;
        rats.push_back(rj);
    }
    j["rationales"] = rats;
    j["degenerate"] = e.degenerate;
    j["truncated"] = e.truncated;
    return j.dump();
}

ExplanationSet explanation_from_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ParseError("malformed explanation record: " + line);
    ExplanationSet e;
    e.query_id = j.at("query_id").get<std::string>();
    e.doc_id = j.at("doc_id").get<std::string>();
    e.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    const auto& p = j.at("params");
    e.params.granularity = e.granularity;
    e.params.m = p.value("m", 0);
    e.params.w = p.value("w", 0);
    e.params.n_per_sample = p.value("n_per_sample", 1);
    e.params.num_samples = p.value("num_samples", 0);
    e.params.seed = p.value("seed", std::uint64_t(0));
    e.params.exhaustive = p.value("exhaustive", false);
    for (const auto& rj : j.at("rationales")) {
        Rationale r;
        r.segment.doc_id = e.doc_id;
        r.segment.granularity = e.granularity;
        r.segment.char_start = rj.at("start").get<std::size_t>();
        r.segment.char_end = rj.at("end").get<std::size_t>();
        r.segment.text = rj.at("text").get<std::string>();
        r.segment.index = rj.value("index", 0);
        r.weight = rj.at("weight").get<double>();
        e.rationales.push_back(std::move(r));
    }
    e.degenerate = j.value("degenerate", false);
    e.truncated = j.value("truncated", false);
    return e;
}

void write_explanations(const std::vector<ExplanationSet>& sets, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write explanations: " + path);
    for (const auto& e : sets) out << explanation_to_json(e) << "\n";
}

std::vector<ExplanationSet> read_explanations(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<ExplanationSet> sets;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) sets.push_back(explanation_from_json(line));
    return sets;
}

void write_report(const EvalReport& report, const std::string& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << (format == ReportFormat::json ? report_to_json(report) : report_to_tsv(report));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace xrank
