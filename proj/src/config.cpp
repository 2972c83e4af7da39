#include "xrank/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace xrank {

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> parse_array(const std::string& s) {
    std::vector<std::string> out;
    std::string body = trim(s);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
        throw ParseError("expected array value: " + s);
    body = body.substr(1, body.size() - 2);
    std::string item;
    for (char c : body) {
        if (c == ',') {
            if (!trim(item).empty()) out.push_back(unquote(trim(item)));
            item.clear();
        } else {
            item.push_back(c);
        }
    }
    if (!trim(item).empty()) out.push_back(unquote(trim(item)));
    return out;
}

std::vector<int> parse_int_array(const std::string& s) {
    std::vector<int> out;
    for (const auto& item : parse_array(s)) out.push_back(std::stoi(item));
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ParseError("expected boolean, got: " + s);
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& raw_value) {
    const std::string v = unquote(trim(raw_value));
    if (key == "corpus") cfg.corpus_path = v;
    else if (key == "queries") cfg.queries_path = v;
    else if (key == "qrels") cfg.qrels_path = v;
    else if (key == "subdoc") cfg.subdoc_path = v;
    else if (key == "human_spans") cfg.human_spans_path = v;
    else if (key == "run_file") cfg.run_file = v;
    else if (key == "out_dir") cfg.out_dir = v;
    else if (key == "corpus_format") cfg.corpus_format = v;
    else if (key == "queries_format") cfg.queries_format = v;
    else if (key == "abbrev_file") cfg.abbrev_file = v;
    else if (key == "stopwords") cfg.stopwords_file = v;
    else if (key == "checkpoint") cfg.checkpoint_path = v;
    else if (key == "scorer") cfg.scorer = v;
    else if (key == "scorer_cmd") cfg.scorer_cmd = v;
    else if (key == "scorer_addr") cfg.scorer_addr = v;
    else if (key == "scorer_timeout") cfg.scorer_timeout = std::stod(v);
    else if (key == "scorer_max_batch") cfg.scorer_max_batch = std::stoi(v);
    else if (key == "k1") cfg.k1 = std::stod(v);
    else if (key == "b") cfg.b = std::stod(v);
    else if (key == "k") cfg.k = std::stoi(v);
    else if (key == "first_stage_depth") cfg.first_stage_depth = std::stoi(v);
    else if (key == "explainer") cfg.explainer = v;
    else if (key == "granularity") cfg.granularity = v;
    else if (key == "m") cfg.m = std::stoi(v);
    else if (key == "w") cfg.w = std::stoi(v);
    else if (key == "n_per_sample") cfg.n_per_sample = std::stoi(v);
    else if (key == "num_samples") cfg.num_samples = std::stoi(v);
    else if (key == "chunk_size") cfg.chunk_size = std::stoi(v);
    else if (key == "chunk_threshold") cfg.chunk_threshold = std::stoi(v);
    else if (key == "exhaustive") cfg.exhaustive = parse_bool(v);
    else if (key == "grade_threshold") cfg.grade_threshold = std::stoi(v);
    else if (key == "seed") cfg.seed = std::stoull(v);
    else if (key == "workers") cfg.workers = std::stoi(v);
    else if (key == "cache") cfg.cache = parse_bool(v);
    else if (key == "tag") cfg.tag = v;
    else if (key == "metrics") cfg.metrics = parse_array(raw_value);
    else if (key == "m_list") cfg.m_list = parse_int_array(raw_value);
    else if (key == "w_list") cfg.w_list = parse_int_array(raw_value);
    else throw ParseError("unknown config key: " + key);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') continue;  // section headers are decorative
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
        // strip trailing comment outside quotes
        std::string value = t.substr(eq + 1);
        bool in_q = false;
        char qc = 0;
        for (std::size_t i = 0; i < value.size(); ++i) {
            char c = value[i];
            if (in_q) {
                if (c == qc) in_q = false;
            } else if (c == '"' || c == '\'') {
                in_q = true;
                qc = c;
            } else if (c == '#') {
                value = value.substr(0, i);
                break;
            }
        }
        try {
            apply_config_line(cfg, trim(t.substr(0, eq)), value);
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

std::map<std::string, std::string> RunConfig::to_params() const {
    std::map<std::string, std::string> p;
    p["k"] = std::to_string(k);
    p["m"] = std::to_string(m);
    p["w"] = std::to_string(w);
    p["n_per_sample"] = std::to_string(n_per_sample);
    p["num_samples"] = std::to_string(num_samples);
    p["granularity"] = granularity;
    p["explainer"] = explainer;
    p["chunk_size"] = std::to_string(chunk_size);
    p["seed"] = std::to_string(seed);
    p["scorer"] = scorer;
    p["exhaustive"] = exhaustive ? "true" : "false";
    p["k1"] = std::to_string(k1);
    p["b"] = std::to_string(b);
    p["first_stage_depth"] = std::to_string(first_stage_depth);
    p["grade_threshold"] = std::to_string(grade_threshold);
    p["tag"] = tag;
    return p;
}

std::string RunConfig::fingerprint() const {
    std::ostringstream ss;
    for (const auto& [key, value] : to_params()) ss << key << "=" << value << ";";
    ss << corpus_path << ";" << queries_path << ";" << run_file << ";" << scorer_cmd << ";"
       << scorer_addr;
    return std::to_string(fnv1a64(ss.str()));
}

}  // namespace xrank
