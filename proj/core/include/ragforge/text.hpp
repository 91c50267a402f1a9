#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ragforge {

/// One word of a tokenized text plus its byte span in the original string.
struct WordSpan {
    std::string_view text;
    std::size_t begin = 0; // byte offset
    std::size_t end = 0;   // byte offset one past the word
};

/// Decodes the UTF-8 codepoint starting at `pos`, advancing `pos` past it.
/// Invalid sequences decode as U+FFFD and advance one byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

/// Han ideographs (the blocks that matter for Chinese text). Kana and
/// Hangul are outside the configured language set and not included.
bool is_cjk(char32_t cp);

/// Word segmentation used everywhere a "word" is counted: runs of
/// non-whitespace split on whitespace, except that every CJK codepoint is
/// its own word ("100 words" must mean something for Chinese).
std::vector<WordSpan> word_spans(std::string_view text);

std::vector<std::string> word_tokenize(std::string_view text);
std::size_t count_words(std::string_view text);

/// First `n` words of `text` as a substring of the original (keeps CJK text
/// unmangled). Returns the whole string when it has at most n words.
std::string word_prefix(std::string_view text, std::size_t n);

std::string trim(std::string_view s);
bool is_blank(std::string_view s);

/// Similarity of two strings as Jaccard overlap of their byte 3-gram sets.
/// Symmetric, in [0,1]; 1.0 for equal non-empty strings.
double trigram_jaccard(std::string_view a, std::string_view b);

/// Uniform draw in [0, n) by rejection sampling on the raw 64-bit stream.
/// Unlike std::uniform_int_distribution the result does not depend on the
/// standard library, so frozen expected values stay valid.
std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n);

/// Deterministic Fisher-Yates built on rng_below.
template <typename T>
void shuffle_deterministic(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace ragforge
