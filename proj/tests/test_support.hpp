#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "xrank/scoring.hpp"
#include "xrank/segmentation.hpp"

namespace xrank::test {

inline std::string fixtures_dir() {
    const char* env = std::getenv("XRANK_FIXTURES");
    return env ? env : "tests/fixtures";
}

inline std::string bin_dir() {
    const char* env = std::getenv("XRANK_BIN_DIR");
    return env ? env : ".";
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("xrank_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Deterministic synthetic scorer: total occurrences of query tokens in the
// text. Mirrors the stub_scorer tool.
class TermCountScorer : public Scorer {
  public:
    std::vector<double> score_batch(const std::string& query_text,
                                    const std::vector<std::string>& texts) override {
        std::vector<double> scores;
        for (const auto& text : texts) {
            std::map<std::string, int> tf;
            for (const auto& t : tokenize(text)) ++tf[t.text];
            double s = 0.0;
            for (const auto& t : tokenize(query_text)) {
                auto it = tf.find(t.text);
                if (it != tf.end()) s += it->second;
            }
            scores.push_back(s);
        }
        return scores;
    }
    std::string fingerprint() const override { return "term_count"; }
};

}  // namespace xrank::test
