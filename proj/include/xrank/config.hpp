#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xrank/types.hpp"

namespace xrank {

struct RunConfig {
    // Data paths
    std::string corpus_path;
    std::string queries_path;
    std::string qrels_path;
    std::string subdoc_path;
    std::string human_spans_path;
    std::string run_file;       // skip retrieval when set
    std::string out_dir = ".";
    std::string corpus_format = "jsonl";
    std::string queries_format = "tsv";
    std::string abbrev_file;
    std::string stopwords_file;
    std::string checkpoint_path;

    // Scorer
    std::string scorer = "bm25";  // bm25 | cmd | addr
    std::string scorer_cmd;
    std::string scorer_addr;
    double scorer_timeout = 60.0;
    int scorer_max_batch = 0;
    double k1 = 1.2;
    double b = 0.75;

    // Evaluation parameters
    int k = 10;
    int first_stage_depth = 1000;
    std::string explainer = "sampled";  // sampled | greedy
    std::string granularity = "sentence";
    int m = 3;
    int w = 5;
    int n_per_sample = 1;
    int num_samples = 0;  // 0 = 5x segment count
    int chunk_size = 3;
    int chunk_threshold = 12;
    bool exhaustive = false;
    int grade_threshold = 1;
    std::uint64_t seed = 42;
    int workers = 1;
    bool cache = true;
    std::vector<std::string> metrics = {"ndcg", "mrc", "mer", "sc", "jaccard"};
    std::string tag = "xrank";

    // Sweep axes
    std::vector<int> m_list;
    std::vector<int> w_list;

    std::map<std::string, std::string> to_params() const;
    std::string fingerprint() const;  // hash of everything that shapes explanations
};

// Flat TOML subset: key = value with strings, numbers, booleans and arrays;
// section headers are accepted and ignored.
RunConfig load_config(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& raw_value);

std::uint64_t fnv1a64(const std::string& data);

}  // namespace xrank
