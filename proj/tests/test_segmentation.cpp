#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "xrank/segmentation.hpp"

using namespace xrank;

TEST_CASE("tokenize lowercases alphanumeric runs") {
    auto tokens = tokenize("The FAO, of UN.");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0].text == "the");
    CHECK(tokens[1].text == "fao");
    CHECK(tokens[2].text == "of");
    CHECK(tokens[3].text == "un");
}

TEST_CASE("tokenize empty text") { CHECK(tokenize("").empty()); }

TEST_CASE("tokenize preserves offsets") {
    auto tokens = tokenize("a  b");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].char_start == 0);
    CHECK(tokens[0].char_end == 1);
    CHECK(tokens[1].char_start == 3);
    CHECK(tokens[1].char_end == 4);
}

TEST_CASE("split_sentences basic split") {
    auto s = split_sentences("A b. C d.");
    REQUIRE(s.size() == 2);
    CHECK(s[0].text == "A b.");
    CHECK(s[1].text == "C d.");
}

TEST_CASE("split_sentences abbreviation guard") {
    CHECK(split_sentences("Dr. Smith left.").size() == 1);
    CHECK(split_sentences("See e.g. The example.").size() == 1);
}

TEST_CASE("split_sentences without terminator is one sentence") {
    auto s = split_sentences("no terminator here");
    REQUIRE(s.size() == 1);
    CHECK(s[0].text == "no terminator here");
}

TEST_CASE("split_sentences handles ? and ! and digits") {
    auto s = split_sentences("Really? Yes! 3 reasons follow.");
    CHECK(s.size() == 3);
}

TEST_CASE("sentence coverage reproduces the normalized document") {
    std::vector<std::string> texts = {
        "A b. C d.  E f!",
        "One sentence only",
        "Dr. Smith visited the U.S. lab. It was closed. Nobody answered?",
        "  Leading space. Trailing stuff  ",
    };
    for (const auto& text : texts) {
        std::string joined;
        for (const auto& s : split_sentences(text)) {
            if (!joined.empty()) joined += " ";
            joined += s.text;
        }
        CHECK(normalize_whitespace(joined) == normalize_whitespace(text));
    }
}

TEST_CASE("segment text equals the document substring") {
    std::string text = "First point. Second point! Third?  Fourth trails";
    for (const auto& s : split_sentences(text))
        CHECK(s.text == text.substr(s.char_start, s.char_end - s.char_start));
    for (const auto& s : word_windows(text, 3))
        CHECK(s.text == text.substr(s.char_start, s.char_end - s.char_start));
}

TEST_CASE("word_windows sizes and argument checks") {
    std::string text = "one two three four five six seven";
    auto windows = word_windows(text, 3);
    REQUIRE(windows.size() == 3);
    CHECK(tokenize(windows[0].text).size() == 3);
    CHECK(tokenize(windows[1].text).size() == 3);
    CHECK(tokenize(windows[2].text).size() == 1);

    CHECK(word_windows(text, 50).size() == 1);
    CHECK_THROWS_AS(word_windows(text, 0), ArgumentError);
}

TEST_CASE("word_windows coverage equals token count under default stride") {
    std::mt19937_64 rng(11);
    std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
    for (int trial = 0; trial < 30; ++trial) {
        std::string text;
        int n = 1 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            if (!text.empty()) text += " ";
            text += vocab[rng() % vocab.size()];
        }
        int w = 1 + static_cast<int>(rng() % 7);
        std::size_t covered = 0;
        for (const auto& win : word_windows(text, w)) covered += tokenize(win.text).size();
        CHECK(covered == tokenize(text).size());
    }
}

TEST_CASE("chunk_sentences groups with a short tail") {
    std::string text = "S1. S2. S3. S4. S5. S6. S7.";
    auto chunks = chunk_sentences(text, 3);
    REQUIRE(chunks.size() == 3);
    CHECK(split_sentences(chunks[0].text).size() == 3);
    CHECK(split_sentences(chunks[2].text).size() == 1);

    CHECK(chunk_sentences("A one. B two.", 3).size() == 1);
}

TEST_CASE("mask_segments identity, full mask and token removal") {
    std::string text = "a b c";
    CHECK(mask_segments(text, {}) == text);

    auto windows = word_windows(text, 1);
    REQUIRE(windows.size() == 3);
    CHECK(mask_segments(text, {windows[1]}) == "a c");
    CHECK(mask_segments(text, windows).empty());

    std::string sent_text = "First one. Second one.";
    auto sentences = split_sentences(sent_text);
    CHECK(mask_segments(sent_text, sentences).empty());
}

TEST_CASE("mask_segments rejects overlap") {
    std::string text = "one two three four";
    auto a = word_windows(text, 3)[0];
    auto b = word_windows(text, 2)[1];  // overlaps a
    CHECK_THROWS_AS(mask_segments(text, {a, b}), ArgumentError);
}

TEST_CASE("mask removal is order independent for disjoint sets") {
    std::string text = "w1 w2 w3 w4 w5 w6 w7 w8";
    auto windows = word_windows(text, 1);
    std::vector<Segment> s1 = {windows[1], windows[5]};
    std::vector<Segment> s2 = {windows[6], windows[2]};
    std::vector<Segment> both = {windows[5], windows[2], windows[6], windows[1]};
    // masking the union jointly equals masking it in any listed order
    CHECK(mask_segments(text, both) == "w1 w4 w5 w8");
    std::vector<Segment> reversed(both.rbegin(), both.rend());
    CHECK(mask_segments(text, reversed) == mask_segments(text, both));
    (void)s1;
    (void)s2;
}

TEST_CASE("determinism: identical text gives identical segmentation") {
    std::string text = "Repeatable input. With two sentences.";
    auto a = split_sentences(text);
    auto b = split_sentences(text);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].char_start == b[i].char_start);
        CHECK(a[i].char_end == b[i].char_end);
        CHECK(a[i].text == b[i].text);
    }
}

TEST_CASE("offsets stay valid with multibyte characters (fuzz)") {
    std::mt19937_64 rng(99);
    std::vector<std::string> pieces = {"caf\xC3\xA9", "na\xC3\xAFve", "\xE6\x97\xA5\xE6\x9C\xAC",
                                       "word", ".", "!", " ", "  ", "?", "Zed", "42"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        int n = static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) text += pieces[rng() % pieces.size()];
        for (const auto& t : tokenize(text)) {
            REQUIRE(t.char_start < t.char_end);
            REQUIRE(t.char_end <= text.size());
            CHECK(text.substr(t.char_start, t.char_end - t.char_start).size() ==
                  t.char_end - t.char_start);
        }
        for (const auto& s : split_sentences(text)) {
            REQUIRE(s.char_end <= text.size());
            CHECK(s.text == text.substr(s.char_start, s.char_end - s.char_start));
        }
    }
}

TEST_CASE("abbreviation list file is honored") {
    auto dir = xrank::test::temp_dir("abbrev");
    xrank::test::write_file(dir / "ab.txt", "zzz.\n");
    auto abbrevs = load_abbreviations((dir / "ab.txt").string());
    CHECK(split_sentences("Zzz. Next one.", "", abbrevs).size() == 1);
    CHECK(split_sentences("Zzz. Next one.").size() == 2);
}
