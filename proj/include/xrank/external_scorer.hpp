#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "xrank/scoring.hpp"

namespace xrank {

// Newline-delimited JSON scorer protocol:
//   request:  {"id": <u64>, "query": "<text>", "texts": ["<t1>", ...]}
//   response: {"id": <u64>, "scores": [<f64>, ...]}
//   error:    {"id": <u64>, "error": "<message>"}
// Handshake: {"id":0,"query":"","texts":[]} must yield {"id":0,"scores":[]}.
class ExternalScorer : public Scorer {
  public:
    // Spawns `argv` and talks over its stdio.
    static std::unique_ptr<ExternalScorer> spawn(const std::vector<std::string>& argv,
                                                 double timeout_seconds = 60.0,
                                                 std::size_t max_batch = 0);
    // Connects to "host:port".
    static std::unique_ptr<ExternalScorer> connect(const std::string& address,
                                                   double timeout_seconds = 60.0,
                                                   std::size_t max_batch = 0);
    ~ExternalScorer() override;

    std::vector<double> score_batch(const std::string& query_text,
                                    const std::vector<std::string>& texts) override;
    bool deterministic() const override { return false; }
    std::string fingerprint() const override { return "external:" + label_; }

  private:
    ExternalScorer(int fd_out, int fd_in, int child_pid, std::string label,
                   double timeout_seconds, std::size_t max_batch);
    std::vector<double> round_trip(const std::string& query_text,
                                   const std::vector<std::string>& texts);
    std::string read_line_with_timeout();

    int fd_out_;       // write requests here
    int fd_in_;        // read responses here
    int child_pid_;    // -1 for TCP
    std::string label_;
    double timeout_seconds_;
    std::size_t max_batch_;  // 0 = unbounded
    std::uint64_t next_id_ = 1;
    std::string read_buffer_;
    std::mutex mutex_;  // serializes protocol framing across callers
};

// Parses an argv string with shell-style whitespace splitting and quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace xrank
