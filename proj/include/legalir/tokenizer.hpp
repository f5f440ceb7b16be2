#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/error.hpp"
#include "legalir/utf8.hpp"

namespace legalir {

enum class TokenizerMode {
  unicode_word,  // maximal runs of letters/digits/ideographs
  character,     // one token per non-space code point (unsegmented scripts)
};

struct TokenizerConfig {
  TokenizerMode mode = TokenizerMode::unicode_word;
  bool lowercase = true;
};

inline std::string_view to_string(TokenizerMode mode) {
  return mode == TokenizerMode::character ? "character" : "unicode_word";
}

inline TokenizerMode parse_tokenizer_mode(std::string_view s) {
  if (s == "unicode_word") return TokenizerMode::unicode_word;
  if (s == "character") return TokenizerMode::character;
  throw Error("lexical", "unknown tokenizer mode '" + std::string(s) + "'");
}

/// A token together with the byte range it was read from. Offsets refer to
/// the original (not case-folded) text, so windows of tokens can be mapped
/// back to verbatim substrings.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<Token> tokenize_with_offsets(std::string_view text,
                                                const TokenizerConfig& config) {
  std::vector<Token> tokens;
  Token current;
  bool in_token = false;

  auto emit = [&](std::size_t end) {
    current.end = end;
    tokens.push_back(std::move(current));
    current = Token{};
    in_token = false;
  };

  for (std::size_t i = 0; i < text.size();) {
    const auto d = utf8::decode(text, i);
    const char32_t cp = config.lowercase ? utf8::to_lower(d.cp) : d.cp;

    if (config.mode == TokenizerMode::character) {
      if (!utf8::is_space(d.cp)) {
        current.begin = i;
        utf8::append(current.text, cp);
        emit(i + d.length);
      }
    } else if (utf8::is_word_char(d.cp)) {
      if (!in_token) {
        current.begin = i;
        in_token = true;
      }
      utf8::append(current.text, cp);
    } else if (in_token) {
      emit(i);
    }
    i += d.length;
  }
  if (in_token) emit(text.size());
  return tokens;
}

inline std::vector<std::string> tokenize(std::string_view text,
                                         const TokenizerConfig& config = {}) {
  auto detailed = tokenize_with_offsets(text, config);
  std::vector<std::string> out;
  out.reserve(detailed.size());
  for (auto& t : detailed) out.push_back(std::move(t.text));
  return out;
}

}  // namespace legalir
