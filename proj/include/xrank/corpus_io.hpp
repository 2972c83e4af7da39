#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xrank/rationales.hpp"
#include "xrank/types.hpp"

namespace xrank {

enum class CorpusFormat { jsonl, tsv };

std::vector<Document> load_corpus(const std::string& path, CorpusFormat format = CorpusFormat::jsonl);
std::vector<Query> load_queries(const std::string& path, CorpusFormat format = CorpusFormat::tsv);

// Standard 4-column qrels: qid iter docid grade. Repeated (qid,docid) keeps
// the last value and warns.
void load_qrels(const std::string& path, RelevanceStore& store, const WarnFn& warn = {});

// jsonl records {query_id, doc_id, passages:[...]}. Records whose doc_id is
// absent from known_doc_ids trigger a warning but are kept.
void load_subdoc_relevance(const std::string& path, RelevanceStore& store,
                           const std::vector<std::string>& known_doc_ids = {},
                           const WarnFn& warn = {});

// Same shape with key "spans".
void load_human_spans(const std::string& path, RelevanceStore& store, const WarnFn& warn = {});

std::vector<RankedList> read_run(const std::string& path);
void write_run(const std::vector<RankedList>& lists, const std::string& path, const std::string& tag);

enum class ReportFormat { json, tsv };
void write_report(const EvalReport& report, const std::string& path, ReportFormat format);
std::string report_to_json(const EvalReport& report);
std::string report_to_tsv(const EvalReport& report);

// Explanation dump, one json object per line:
// {"query_id","doc_id","granularity","params":{...},"rationales":[{"start","end","text","weight"}]}
std::string explanation_to_json(const ExplanationSet& e);
ExplanationSet explanation_from_json(const std::string& line);
void write_explanations(const std::vector<ExplanationSet>& sets, const std::string& path);
std::vector<ExplanationSet> read_explanations(const std::string& path);

}  // namespace xrank
