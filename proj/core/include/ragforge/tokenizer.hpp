#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/text.hpp"

namespace ragforge {

/// Length accounting is pluggable so an external BPE tokenizer can stand in
/// for the built-in rule when byte-accurate budgets matter.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string id() const = 0;
    virtual std::size_t count_tokens(std::string_view text) const = 0;
};

/// Default, dependency-free: whitespace words, one token per CJK codepoint.
class WordTokenizer final : public Tokenizer {
public:
    std::string id() const override { return "word-cjk1"; }
    std::size_t count_tokens(std::string_view text) const override { return count_words(text); }
};

const Tokenizer& default_tokenizer();

} // namespace ragforge
