#include "xrank/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace xrank {

namespace {

inline bool is_ws(unsigned char c) { return std::isspace(c) != 0; }
inline bool is_token_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_token_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < n && is_token_char(static_cast<unsigned char>(text[i]))) ++i;
        std::string t = text.substr(start, i - start);
        for (auto& c : t)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        tokens.push_back({std::move(t), start, i});
    }
    return tokens;
}

const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> abbrevs = {
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.",
        "e.g.", "i.e.", "etc.", "vs.", "cf.", "ca.", "al.", "approx.",
        "u.s.", "u.k.", "u.n.", "fig.", "eq.", "no.", "vol.", "pp.",
        "inc.", "ltd.", "co.", "dept.", "est.", "jan.", "feb.", "mar.",
        "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
    };
    return abbrevs;
}

std::vector<std::string> load_abbreviations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open abbreviation file: " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && is_ws(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

namespace {

bool is_abbreviation(const std::string& text, std::size_t dot_pos,
                     const std::vector<std::string>& abbrevs) {
    // Scan back over letters and dots to capture forms like "u.s."
    std::size_t start = dot_pos;
    while (start > 0) {
        unsigned char c = static_cast<unsigned char>(text[start - 1]);
        if (std::isalpha(c) || c == '.')
            --start;
        else
            break;
    }
    if (start == dot_pos) return false;
    std::string word = text.substr(start, dot_pos - start + 1);
    for (auto& c : word)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return std::find(abbrevs.begin(), abbrevs.end(), word) != abbrevs.end();
}

}  // namespace

std::vector<Segment> split_sentences(const std::string& text, const std::string& doc_id,
                                     const std::vector<std::string>& abbreviations) {
    const auto& abbrevs = abbreviations.empty() ? default_abbreviations() : abbreviations;
    const std::size_t n = text.size();
    std::vector<std::size_t> breaks;  // exclusive sentence end positions
    for (std::size_t i = 0; i < n; ++i) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (c == '.' && is_abbreviation(text, i, abbrevs)) continue;
        std::size_t j = i + 1;
        while (j < n && is_ws(static_cast<unsigned char>(text[j]))) ++j;
        if (j == n) {
            breaks.push_back(i + 1);
        } else if (j > i + 1) {
            unsigned char next = static_cast<unsigned char>(text[j]);
            if (std::isupper(next) || std::isdigit(next)) breaks.push_back(i + 1);
        }
    }

    std::vector<Segment> sentences;
    std::size_t pos = 0;
    auto emit = [&](std::size_t end) {
        while (pos < end && is_ws(static_cast<unsigned char>(text[pos]))) ++pos;
        std::size_t last = end;
        while (last > pos && is_ws(static_cast<unsigned char>(text[last - 1]))) --last;
        if (last > pos) {
            Segment s;
            s.doc_id = doc_id;
            s.granularity = Granularity::sentence;
            s.index = static_cast<int>(sentences.size());
            s.char_start = pos;
            s.char_end = last;
            s.text = text.substr(pos, last - pos);
            sentences.push_back(std::move(s));
        }
        pos = end;
    };
    for (std::size_t b : breaks) emit(b);
    emit(n);  // trailing text without a terminator forms the final sentence
    return sentences;
}

std::vector<Segment> word_windows(const std::string& text, int w, int stride,
                                  const std::string& doc_id) {
    if (w < 1) throw ArgumentError("word window size must be >= 1");
    if (stride <= 0) stride = w;
    auto tokens = tokenize(text);
    std::vector<Segment> windows;
    for (std::size_t start = 0; start < tokens.size(); start += static_cast<std::size_t>(stride)) {
        std::size_t end = std::min(start + static_cast<std::size_t>(w), tokens.size());
        Segment s;
        s.doc_id = doc_id;
        s.granularity = Granularity::word_window;
        s.index = static_cast<int>(windows.size());
        s.char_start = tokens[start].char_start;
        s.char_end = tokens[end - 1].char_end;
        s.text = text.substr(s.char_start, s.char_end - s.char_start);
        windows.push_back(std::move(s));
        if (end == tokens.size()) break;
    }
    return windows;
}

std::vector<Segment> chunk_sentences(const std::string& text, int chunk_size,
                                     const std::string& doc_id,
                                     const std::vector<std::string>& abbreviations) {
    if (chunk_size < 1) throw ArgumentError("chunk size must be >= 1");
    auto sentences = split_sentences(text, doc_id, abbreviations);
    std::vector<Segment> chunks;
    for (std::size_t i = 0; i < sentences.size(); i += static_cast<std::size_t>(chunk_size)) {
        std::size_t j = std::min(i + static_cast<std::size_t>(chunk_size), sentences.size());
        Segment s;
        s.doc_id = doc_id;
        s.granularity = Granularity::chunk;
        s.index = static_cast<int>(chunks.size());
        s.char_start = sentences[i].char_start;
        s.char_end = sentences[j - 1].char_end;
        s.text = text.substr(s.char_start, s.char_end - s.char_start);
        chunks.push_back(std::move(s));
    }
    return chunks;
}

std::vector<Segment> segment(const std::string& text, Granularity g, int w, int chunk_size,
                             const std::string& doc_id,
                             const std::vector<std::string>& abbreviations) {
    switch (g) {
        case Granularity::sentence: return split_sentences(text, doc_id, abbreviations);
        case Granularity::word_window: return word_windows(text, w, 0, doc_id);
        case Granularity::chunk: return chunk_sentences(text, chunk_size, doc_id, abbreviations);
    }
    return {};
}

std::string normalize_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (is_ws(c)) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

std::string mask_segments(const std::string& doc_text, const std::vector<Segment>& segments) {
    if (segments.empty()) return doc_text;
    auto sorted = segments;
    std::sort(sorted.begin(), sorted.end(),
              [](const Segment& a, const Segment& b) { return a.char_start < b.char_start; });
    std::size_t prev_end = 0;
    std::string kept;
    kept.reserve(doc_text.size());
    for (const auto& s : sorted) {
        if (s.char_end > doc_text.size() || s.char_start >= s.char_end)
            throw ArgumentError("segment range outside document");
        if (s.char_start < prev_end) throw ArgumentError("overlapping segments in mask");
        kept.append(doc_text, prev_end, s.char_start - prev_end);
        kept.push_back(' ');
        prev_end = s.char_end;
    }
    kept.append(doc_text, prev_end, doc_text.size() - prev_end);
    return normalize_whitespace(kept);
}

}  // namespace xrank
