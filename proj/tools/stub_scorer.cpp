// Test scorer speaking the newline-delimited JSON protocol on stdio or TCP.
// Score = total occurrences of query tokens in the text. Fault-injection
// flags exercise the client's error paths.

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xrank/segmentation.hpp"

using nlohmann::json;

namespace {

double term_count_score(const std::string& query, const std::string& text) {
    std::map<std::string, int> tf;
    for (const auto& t : xrank::tokenize(text)) ++tf[t.text];
    double score = 0.0;
    for (const auto& t : xrank::tokenize(query)) {
        auto it = tf.find(t.text);
        if (it != tf.end()) score += it->second;
    }
    return score;
}

struct Options {
    int hang_after = -1;       // stop responding after N requests (handshake is 0)
    int malformed_after = -1;  // emit garbage after N requests
    int error_after = -1;      // emit protocol error objects after N requests
    int port = 0;              // 0 = stdio
};

void serve(std::istream& in, std::ostream& out, const Options& opts) {
    std::string line;
    int served = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json req = json::parse(line, nullptr, false);
        if (req.is_discarded()) continue;
        if (opts.hang_after >= 0 && served >= opts.hang_after) {
            std::this_thread::sleep_for(std::chrono::hours(1));
            return;
        }
        if (opts.malformed_after >= 0 && served >= opts.malformed_after) {
            out << "this is not json\n" << std::flush;
            ++served;
            continue;
        }
        if (opts.error_after >= 0 && served >= opts.error_after) {
            json err = {{"id", req.value("id", 0)}, {"error", "induced failure"}};
            out << err.dump() << "\n" << std::flush;
            ++served;
            continue;
        }
        std::string query = req.value("query", "");
        std::vector<double> scores;
        for (const auto& t : req.value("texts", std::vector<std::string>{}))
            scores.push_back(term_count_score(query, t));
        json resp = {{"id", req.value("id", 0)}, {"scores", scores}};
        out << resp.dump() << "\n" << std::flush;
        ++served;
    }
}

int serve_tcp(const Options& opts) {
    int server_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (server_fd < 0) return 1;
    int one = 1;
    setsockopt(server_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(opts.port));
    if (bind(server_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        listen(server_fd, 4) != 0) {
        std::cerr << "stub_scorer: cannot listen on port " << opts.port << "\n";
        return 1;
    }
    socklen_t len = sizeof(addr);
    getsockname(server_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    std::cout << "listening on " << ntohs(addr.sin_port) << "\n" << std::flush;
    for (;;) {
        int client = accept(server_fd, nullptr, nullptr);
        if (client < 0) break;
        // One connection at a time; buffer line reads over the socket.
        std::string buffer;
        char chunk[4096];
        std::string line;
        int served = 0;
        auto respond = [&](const std::string& s) {
            (void)!::write(client, s.data(), s.size());
        };
        ssize_t n;
        bool hung = false;
        while (!hung && (n = ::read(client, chunk, sizeof(chunk))) > 0) {
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = buffer.find('\n')) != std::string::npos) {
                line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (line.empty()) continue;
                json req = json::parse(line, nullptr, false);
                if (req.is_discarded()) continue;
                if (opts.hang_after >= 0 && served >= opts.hang_after) {
                    hung = true;
                    break;
                }
                if (opts.malformed_after >= 0 && served >= opts.malformed_after) {
                    respond("garbage\n");
                    ++served;
                    continue;
                }
                std::string query = req.value("query", "");
                std::vector<double> scores;
                for (const auto& t : req.value("texts", std::vector<std::string>{}))
                    scores.push_back(term_count_score(query, t));
                json resp = {{"id", req.value("id", 0)}, {"scores", scores}};
                respond(resp.dump() + "\n");
                ++served;
            }
        }
        if (hung) std::this_thread::sleep_for(std::chrono::hours(1));
        close(client);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"term-count stub scorer (NDJSON protocol)"};
    Options opts;
    bool tcp = false;
    app.add_flag("--tcp", tcp, "listen on TCP instead of stdio");
    app.add_option("--port", opts.port, "TCP port (0 = ephemeral)");
    app.add_option("--hang-after", opts.hang_after, "stop responding after N requests");
    app.add_option("--malformed-after", opts.malformed_after, "emit garbage after N requests");
    app.add_option("--error-after", opts.error_after, "emit error objects after N requests");
    CLI11_PARSE(app, argc, argv);

    if (tcp) return serve_tcp(opts);
    serve(std::cin, std::cout, opts);
    return 0;
}
