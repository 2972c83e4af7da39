#pragma once

#include <string>
#include <vector>

#include "xrank/types.hpp"

namespace xrank {

struct Token {
    std::string text;        // lowercased
    std::size_t char_start = 0;
    std::size_t char_end = 0;
};

// Lowercased alphanumeric runs; everything else separates. Bytes >= 0x80 are
// treated as token characters so UTF-8 words survive intact.
std::vector<Token> tokenize(const std::string& text);

// Abbreviations that suppress a sentence break, lowercase with trailing dot
// ("dr.", "e.g.", ...). Defaults used when the list is empty.
const std::vector<std::string>& default_abbreviations();
std::vector<std::string> load_abbreviations(const std::string& path);

std::vector<Segment> split_sentences(const std::string& text, const std::string& doc_id = "",
                                     const std::vector<std::string>& abbreviations = {});

std::vector<Segment> word_windows(const std::string& text, int w, int stride = 0,
                                  const std::string& doc_id = "");

std::vector<Segment> chunk_sentences(const std::string& text, int chunk_size = 3,
                                     const std::string& doc_id = "",
                                     const std::vector<std::string>& abbreviations = {});

std::vector<Segment> segment(const std::string& text, Granularity g, int w, int chunk_size,
                             const std::string& doc_id = "",
                             const std::vector<std::string>& abbreviations = {});

// Document text with the segments' ranges removed, whitespace collapsed to
// single spaces. Removing the empty set is identity.
std::string mask_segments(const std::string& doc_text, const std::vector<Segment>& segments);

std::string normalize_whitespace(const std::string& text);

}  // namespace xrank
