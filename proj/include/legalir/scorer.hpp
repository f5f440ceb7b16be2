#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "legalir/error.hpp"
#include "legalir/lexical.hpp"
#include "legalir/tokenizer.hpp"

namespace legalir {

struct TextPair {
  std::string_view a;
  std::string_view b;
};

/// A scorer failure. `pair_index` points into the batch when the failing
/// pair is known.
class ScorerFailure : public Error {
 public:
  explicit ScorerFailure(const std::string& message,
                         std::optional<std::size_t> pair_index = std::nullopt)
      : Error("scorer", message), pair_index_(pair_index) {}

  std::optional<std::size_t> pair_index() const { return pair_index_; }

 private:
  std::optional<std::size_t> pair_index_;
};

/// Pairwise relatedness in [0, 1]. Implementations must be deterministic for
/// fixed inputs within one run. Scorers that cannot take concurrent calls
/// report `concurrent_safe() == false` and callers serialize them.
class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;

  virtual double score(std::string_view a, std::string_view b) = 0;

  virtual std::vector<double> score_batch(std::span<const TextPair> pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      try {
        out.push_back(score(pairs[i].a, pairs[i].b));
      } catch (const ScorerFailure& e) {
        throw ScorerFailure(e.what(), i);
      } catch (const std::exception& e) {
        throw ScorerFailure(e.what(), i);
      }
    }
    return out;
  }

  virtual bool concurrent_safe() const { return false; }
};

/// Throws unless `value` is a finite number in [0, 1].
inline double checked_unit_score(double value, std::optional<std::size_t> pair_index = {}) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw ScorerFailure("score " + std::to_string(value) + " outside [0, 1]", pair_index);
  }
  return value;
}

/// Baseline scorer: tf-idf cosine under fixed corpus statistics.
class TfidfCosineScorer final : public SemanticScorer {
 public:
  TfidfCosineScorer(std::shared_ptr<const InvertedIndex> stats, TokenizerConfig tokenizer = {})
      : stats_(std::move(stats)), tokenizer_(tokenizer) {
    if (!stats_ || stats_->unit_count() == 0) {
      throw Error("scorer", "tf-idf scorer needs non-empty corpus statistics");
    }
  }

  double score(std::string_view a, std::string_view b) override {
    return tfidf_cosine(tokenize(a, tokenizer_), tokenize(b, tokenizer_), *stats_);
  }

  bool concurrent_safe() const override { return true; }

 private:
  std::shared_ptr<const InvertedIndex> stats_;
  TokenizerConfig tokenizer_;
};

/// Adapts a callable; mostly useful in tests and for in-process models.
class FunctionScorer final : public SemanticScorer {
 public:
  using Fn = std::function<double(std::string_view, std::string_view)>;

  explicit FunctionScorer(Fn fn, bool concurrent_safe = true)
      : fn_(std::move(fn)), concurrent_safe_(concurrent_safe) {}

  double score(std::string_view a, std::string_view b) override { return fn_(a, b); }
  bool concurrent_safe() const override { return concurrent_safe_; }

 private:
  Fn fn_;
  bool concurrent_safe_;
};

}  // namespace legalir
