#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/error.hpp"
#include "legalir/labeled_pair.hpp"
#include "legalir/tokenizer.hpp"

namespace legalir {

/// Sliding-window parameters, in tokens of the active tokenizer.
struct ChunkConfig {
  std::size_t window_size = 150;
  std::size_t stride = 50;

  void validate() const {
    if (stride < 1 || stride > window_size) {
      throw Error("chunking", "chunk config requires 1 <= stride <= window_size (got " +
                                  std::to_string(window_size) + "/" + std::to_string(stride) +
                                  ")");
    }
  }

  friend bool operator==(const ChunkConfig&, const ChunkConfig&) = default;
};

struct Chunk {
  std::string article_id;
  std::size_t start = 0;  // token offset into the article
  std::vector<std::string> tokens;
  ChunkConfig config;
  std::string text;  // verbatim source span; empty when chunked from bare tokens

  std::string passage_id() const { return article_id + "#" + std::to_string(start); }
};

/// Window starts for an article of `length` tokens: 0, stride, 2*stride, ...
/// and, if the regular grid would overrun, one last window snapped to end
/// at the final token.
inline std::vector<std::size_t> chunk_starts(std::size_t length, const ChunkConfig& config) {
  config.validate();
  std::vector<std::size_t> starts;
  if (length == 0) return starts;
  if (length <= config.window_size) {
    starts.push_back(0);
    return starts;
  }
  std::size_t s = 0;
  for (; s + config.window_size < length; s += config.stride) starts.push_back(s);
  const std::size_t last = length - config.window_size;
  if (starts.empty() || starts.back() != last) starts.push_back(last);
  return starts;
}

inline std::vector<Chunk> chunk_article(const std::vector<std::string>& tokens,
                                        const ChunkConfig& config,
                                        const std::string& article_id = {}) {
  std::vector<Chunk> out;
  for (auto start : chunk_starts(tokens.size(), config)) {
    const auto end = std::min(tokens.size(), start + config.window_size);
    Chunk c;
    c.article_id = article_id;
    c.start = start;
    c.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                    tokens.begin() + static_cast<std::ptrdiff_t>(end));
    c.config = config;
    out.push_back(std::move(c));
  }
  return out;
}

/// Tokenizes `text` and chunks it, keeping each window's verbatim source
/// span in `Chunk::text`.
inline std::vector<Chunk> chunk_text(std::string_view text, const std::string& article_id,
                                     const ChunkConfig& config,
                                     const TokenizerConfig& tokenizer = {}) {
  const auto detailed = tokenize_with_offsets(text, tokenizer);
  std::vector<std::string> tokens;
  tokens.reserve(detailed.size());
  for (const auto& t : detailed) tokens.push_back(t.text);

  auto chunks = chunk_article(tokens, config, article_id);
  for (auto& c : chunks) {
    const auto& first = detailed[c.start];
    const auto& last = detailed[c.start + c.tokens.size() - 1];
    c.text = std::string(text.substr(first.begin, last.end - first.begin));
  }
  return chunks;
}

inline std::string passage_text(const Chunk& chunk) {
  if (!chunk.text.empty()) return chunk.text;
  std::string out;
  for (const auto& t : chunk.tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

/// Every (question, chunk) pair inherits the article-level label.
inline std::vector<LabeledPair> derive_chunk_labels(const std::string& query_id,
                                                    const std::string& query_text, Label label,
                                                    const std::vector<Chunk>& chunks) {
  std::vector<LabeledPair> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) {
    out.push_back({query_id, c.passage_id(), query_text, passage_text(c), label,
                   PairOrigin::derived_chunk});
  }
  return out;
}

}  // namespace legalir
