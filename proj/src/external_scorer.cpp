#include "xrank/external_scorer.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <json.hpp>

namespace xrank {

using nlohmann::json;

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> argv;
    std::string cur;
    bool in_single = false, in_double = false, have = false;
    for (char c : command) {
        if (in_single) {
            if (c == '\'') in_single = false;
            else cur.push_back(c);
        } else if (in_double) {
            if (c == '"') in_double = false;
            else cur.push_back(c);
        } else if (c == '\'') {
            in_single = true;
            have = true;
        } else if (c == '"') {
            in_double = true;
            have = true;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (have) argv.push_back(cur);
            cur.clear();
            have = false;
        } else {
            cur.push_back(c);
            have = true;
        }
    }
    if (have) argv.push_back(cur);
    return argv;
}

ExternalScorer::ExternalScorer(int fd_out, int fd_in, int child_pid, std::string label,
                               double timeout_seconds, std::size_t max_batch)
    : fd_out_(fd_out),
      fd_in_(fd_in),
      child_pid_(child_pid),
      label_(std::move(label)),
      timeout_seconds_(timeout_seconds),
      max_batch_(max_batch) {
    // Handshake: id 0, empty query, empty texts.
    json req = {{"id", 0}, {"query", ""}, {"texts", json::array()}};
    std::string line = req.dump() + "\n";
    if (::write(fd_out_, line.data(), line.size()) != static_cast<ssize_t>(line.size()))
        throw ScorerError("scorer handshake write failed: " + label_, 0);
    std::string resp = read_line_with_timeout();
    json j = json::parse(resp, nullptr, false);
    if (j.is_discarded() || j.value("id", std::uint64_t(1)) != 0 || !j.contains("scores") ||
        !j["scores"].empty())
        throw ScorerError("scorer handshake failed: " + label_, 0);
}

std::unique_ptr<ExternalScorer> ExternalScorer::spawn(const std::vector<std::string>& argv,
                                                      double timeout_seconds,
                                                      std::size_t max_batch) {
    if (argv.empty()) throw ArgumentError("empty scorer command");
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw ScorerError("pipe() failed: " + std::string(std::strerror(errno)), 0);
    pid_t pid = fork();
    if (pid < 0) throw ScorerError("fork() failed: " + std::string(std::strerror(errno)), 0);
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        std::vector<char*> cargv;
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    return std::unique_ptr<ExternalScorer>(new ExternalScorer(
        to_child[1], from_child[0], pid, "cmd:" + argv[0], timeout_seconds, max_batch));
}

std::unique_ptr<ExternalScorer> ExternalScorer::connect(const std::string& address,
                                                        double timeout_seconds,
                                                        std::size_t max_batch) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos) throw ArgumentError("scorer address must be host:port");
    std::string host = address.substr(0, colon);
    std::string port = address.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
        throw ScorerError("cannot resolve scorer address " + address, 0);
    int fd = -1;
    for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
        fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
        close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) throw ScorerError("cannot connect to scorer at " + address, 0);
    return std::unique_ptr<ExternalScorer>(
        new ExternalScorer(fd, fd, -1, "addr:" + address, timeout_seconds, max_batch));
}

ExternalScorer::~ExternalScorer() {
    if (fd_out_ >= 0) close(fd_out_);
    if (fd_in_ >= 0 && fd_in_ != fd_out_) close(fd_in_);
    if (child_pid_ > 0) {
        int status = 0;
        if (waitpid(child_pid_, &status, WNOHANG) == 0) {
            kill(child_pid_, SIGTERM);
            waitpid(child_pid_, &status, 0);
        }
    }
}

std::string ExternalScorer::read_line_with_timeout() {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(timeout_seconds_ * 1000.0));
    for (;;) {
        auto nl = read_buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = read_buffer_.substr(0, nl);
            read_buffer_.erase(0, nl + 1);
            return line;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                             deadline - std::chrono::steady_clock::now())
                             .count();
        if (remaining <= 0) throw ScorerError("scorer timeout after " +
                                              std::to_string(timeout_seconds_) + "s: " + label_, 0);
        pollfd pfd{fd_in_, POLLIN, 0};
        int rc = ::poll(&pfd, 1, static_cast<int>(remaining));
        if (rc < 0) throw ScorerError("poll() failed: " + std::string(std::strerror(errno)), 0);
        if (rc == 0) throw ScorerError("scorer timeout after " +
                                       std::to_string(timeout_seconds_) + "s: " + label_, 0);
        char buf[4096];
        ssize_t n = ::read(fd_in_, buf, sizeof(buf));
        if (n <= 0) throw ScorerError("scorer closed the connection: " + label_, 0);
        read_buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

std::vector<double> ExternalScorer::round_trip(const std::string& query_text,
                                               const std::vector<std::string>& texts) {
    std::uint64_t id = next_id_++;
    json req = {{"id", id}, {"query", query_text}, {"texts", texts}};
    std::string line = req.dump() + "\n";
    if (::write(fd_out_, line.data(), line.size()) != static_cast<ssize_t>(line.size()))
        throw ScorerError("scorer write failed: " + label_, id);
    std::string resp = read_line_with_timeout();
    json j = json::parse(resp, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id"))
        throw ScorerError("malformed scorer response: " + resp, id);
    if (j["id"].get<std::uint64_t>() != id)
        throw ScorerError("scorer response id mismatch (expected " + std::to_string(id) + ")", id);
    if (j.contains("error"))
        throw ScorerError("scorer error: " + j["error"].get<std::string>(), id);
    if (!j.contains("scores") || !j["scores"].is_array())
        throw ScorerError("scorer response missing scores array", id);
    auto scores = j["scores"].get<std::vector<double>>();
    if (scores.size() != texts.size())
        throw ScorerError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                              std::to_string(texts.size()) + " texts",
                          id);
    return scores;
}

std::vector<double> ExternalScorer::score_batch(const std::string& query_text,
                                                const std::vector<std::string>& texts) {
    if (texts.empty()) throw ArgumentError("score_batch requires a non-empty text sequence");
    std::lock_guard<std::mutex> lock(mutex_);
    if (max_batch_ == 0 || texts.size() <= max_batch_) return round_trip(query_text, texts);
    std::vector<double> scores;
    scores.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += max_batch_) {
        std::size_t end = std::min(start + max_batch_, texts.size());
        std::vector<std::string> part(texts.begin() + static_cast<long>(start),
                                      texts.begin() + static_cast<long>(end));
        auto s = round_trip(query_text, part);
        scores.insert(scores.end(), s.begin(), s.end());
    }
    return scores;
}

}  // namespace xrank
