#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "legalir/chunking.hpp"
#include "legalir/corpus.hpp"
#include "legalir/error.hpp"
#include "legalir/gold.hpp"
#include "legalir/labeled_pair.hpp"
#include "legalir/lexical.hpp"
#include "legalir/parallel.hpp"
#include "legalir/rng.hpp"
#include "legalir/scorer.hpp"

namespace legalir {

struct Question {
  std::string id;
  std::string text;
};

inline std::vector<Question> questions_from(const CorpusStore& store) {
  std::vector<Question> out;
  for (const auto& d : store) out.push_back({d.id, d.kept_text()});
  return out;
}

/// tf-idf view of an article collection: corpus statistics plus one vector
/// per article, in ascending id order.
class ArticleTfidf {
 public:
  ArticleTfidf(const CorpusStore& articles, TokenizerConfig tokenizer = {})
      : tokenizer_(tokenizer) {
    std::vector<InvertedIndex::Unit> units;
    for (const auto& a : articles) units.emplace_back(a.id, tokenize(a.kept_text(), tokenizer_));
    stats_ = InvertedIndex::build(units);
    std::sort(units.begin(), units.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto& [id, tokens] : units) vectors_.emplace_back(id, tfidf_vector(tokens, stats_));
  }

  const InvertedIndex& stats() const { return stats_; }

  /// Every article ranked by cosine to `text`, descending, ties by id.
  std::vector<ScoredId> rank(std::string_view text) const {
    if (stats_.unit_count() == 0) return {};
    return rank_by_cosine(tfidf_vector(tokenize(text, tokenizer_), stats_), vectors_);
  }

 private:
  TokenizerConfig tokenizer_;
  InvertedIndex stats_;
  std::vector<std::pair<std::string, TfidfVector>> vectors_;
};

// ---------------------------------------------------------------------------
// Retrieval pairs

struct RetrievalPairOptions {
  std::size_t neg_cap = 150;
  TokenizerConfig tokenizer;
  /// When set, each (question, article) pair is expanded into chunk pairs.
  std::optional<ChunkConfig> chunking;
};

/// Positives are the gold articles; negatives the `neg_cap` highest tf-idf
/// ranked non-gold articles.
inline std::vector<LabeledPair> generate_retrieval_pairs(const std::vector<Question>& questions,
                                                         const GoldLabels& gold,
                                                         const CorpusStore& articles,
                                                         const RetrievalPairOptions& options = {}) {
  if (options.chunking) options.chunking->validate();
  const ArticleTfidf tfidf(articles, options.tokenizer);

  std::vector<LabeledPair> out;
  auto emit = [&](const Question& q, const CaseDocument& article, Label label) {
    const auto text = article.kept_text();
    if (!options.chunking) {
      out.push_back({q.id, article.id, q.text, text, label, PairOrigin::gold});
      return;
    }
    const auto chunks = chunk_text(text, article.id, *options.chunking, options.tokenizer);
    auto derived = derive_chunk_labels(q.id, q.text, label, chunks);
    out.insert(out.end(), std::make_move_iterator(derived.begin()),
               std::make_move_iterator(derived.end()));
  };

  for (const auto& q : questions) {
    auto g = gold.find(q.id);
    if (g == gold.end()) throw Error("trainpairs", "question '" + q.id + "' has no gold entry");
    std::unordered_set<std::string> positives;
    for (const auto& id : g->second) {
      if (!articles.contains(id)) {
        throw Error("trainpairs", "gold article '" + id + "' of question '" + q.id +
                                      "' is not in the article corpus");
      }
      if (positives.insert(id).second) emit(q, articles.at(id), Label::positive);
    }
    std::size_t taken = 0;
    for (const auto& cand : tfidf.rank(q.text)) {
      if (taken >= options.neg_cap) break;
      if (positives.contains(cand.id)) continue;
      emit(q, articles.at(cand.id), Label::negative);
      ++taken;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// tf-idf augmentation

/// `given` followed by the `n_augment` best tf-idf matches not already given.
inline std::vector<std::string> augment_articles(std::string_view question,
                                                 const std::vector<std::string>& given,
                                                 const ArticleTfidf& articles,
                                                 std::size_t n_augment) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& id : given) {
    if (articles.stats().ordinal(id) == std::nullopt) {
      throw Error("trainpairs", "given article '" + id + "' is not in the article corpus");
    }
    if (seen.insert(id).second) out.push_back(id);
  }
  if (n_augment == 0) return out;
  std::size_t added = 0;
  for (const auto& cand : articles.rank(question)) {
    if (added >= n_augment) break;
    if (seen.insert(cand.id).second) {
      out.push_back(cand.id);
      ++added;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Silver supporting pairs

struct SilverOptions {
  std::size_t ratio_neg = 1;
  std::uint64_t seed = 0;
};

/// Dataset metadata that travels with silver output so it is never mistaken
/// for a gold set.
inline nlohmann::ordered_json silver_metadata(const SilverOptions& options) {
  return {{"generator", "silver-supporting"},
          {"reconstructed", true},
          {"positives", "consecutive sentences within one kept paragraph"},
          {"negatives", "sentence paired with a uniformly drawn sentence from a different case"},
          {"ratio_neg", options.ratio_neg},
          {"seed", options.seed}};
}

/// Consecutive sentences of a kept paragraph are positive pairs; each
/// positive gets `ratio_neg` negatives whose second sentence is drawn
/// uniformly from the sentences of other cases.
inline std::vector<LabeledPair> generate_silver_supporting(const CorpusStore& corpus,
                                                           const SilverOptions& options) {
  struct SentenceRef {
    std::size_t doc;
    std::string id;
    const std::string* text;
  };
  std::vector<SentenceRef> pool;
  std::vector<std::size_t> per_doc(corpus.size(), 0);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& doc = corpus.documents()[d];
    for (const auto* p : doc.kept_paragraphs()) {
      for (std::size_t k = 0; k < p->sentences.size(); ++k) {
        pool.push_back({d, doc.id + ":p" + std::to_string(p->index) + ":s" + std::to_string(k),
                        &p->sentences[k]});
        ++per_doc[d];
      }
    }
  }

  Rng rng(options.seed);
  std::vector<LabeledPair> out;
  std::size_t cursor = 0;  // walks `pool` in the same order as the loops below
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& doc = corpus.documents()[d];
    const std::size_t others = pool.size() - per_doc[d];
    const std::size_t want = std::min(options.ratio_neg, others);
    for (const auto* p : doc.kept_paragraphs()) {
      const std::size_t n = p->sentences.size();
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const auto& first = pool[cursor + k];
        const auto& second = pool[cursor + k + 1];
        out.push_back({first.id, second.id, *first.text, *second.text, Label::positive,
                       PairOrigin::silver});

        std::unordered_set<std::size_t> used;
        while (used.size() < want) {
          const auto pick = static_cast<std::size_t>(rng.uniform_index(pool.size()));
          if (pool[pick].doc == d || !used.insert(pick).second) continue;
          out.push_back({first.id, pool[pick].id, *first.text, *pool[pick].text, Label::negative,
                         PairOrigin::silver});
        }
      }
      cursor += n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-labeled refinement

struct SelfLabelConfig {
  std::size_t e1 = 2;  // epochs before refinement; metadata only
  std::size_t e2 = 3;  // epochs after refinement; metadata only
  double threshold = 0.5;
  std::size_t iterations = 1;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("trainpairs", "threshold must be in [0, 1]");
    if (iterations < 1) throw Error("trainpairs", "iterations must be >= 1");
  }
};

struct RefineResult {
  std::vector<LabeledPair> pairs;
  std::vector<std::size_t> flips_per_iteration;
  std::vector<std::size_t> positives_after_iteration;
};

/// Throws if a (query_id, passage_id) key repeats.
inline void require_unique_keys(const std::vector<LabeledPair>& pairs) {
  std::set<std::pair<std::string_view, std::string_view>> keys;
  for (const auto& p : pairs) {
    if (!keys.emplace(p.query_id, p.passage_id).second) {
      throw Error("trainpairs", "duplicate pair (" + p.query_id + ", " + p.passage_id + ")");
    }
  }
}

/// Each iteration scores every positive pair and flips those below the
/// threshold to negative (origin self_flipped). Negatives never flip back.
/// Once an iteration flips nothing the dataset is a fixed point and the
/// remaining iterations are recorded as zero flips.
inline RefineResult self_label_refine(std::vector<LabeledPair> dataset, SemanticScorer& predictor,
                                      const SelfLabelConfig& config, std::size_t jobs = 1) {
  config.validate();
  RefineResult result;
  bool fixed = false;
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset[i].label == Label::positive) positives.push_back(i);
    }
    if (fixed) {
      result.flips_per_iteration.push_back(0);
      result.positives_after_iteration.push_back(positives.size());
      continue;
    }

    std::vector<TextPair> batch;
    batch.reserve(positives.size());
    for (auto i : positives) batch.push_back({dataset[i].query_text, dataset[i].passage_text});

    std::vector<double> scores(batch.size());
    const std::size_t shards = predictor.concurrent_safe() ? std::max<std::size_t>(1, jobs) : 1;
    const std::size_t per = (batch.size() + shards - 1) / std::max<std::size_t>(1, shards);
    auto fail = [&](std::size_t k, const std::string& what) -> Error {
      const auto& p = dataset[positives[k]];
      return Error("trainpairs", "predictor failed on pair (" + p.query_id + ", " + p.passage_id +
                                     "): " + what);
    };
    parallel_for(per == 0 ? 0 : (batch.size() + per - 1) / per, shards, [&](std::size_t s) {
      const std::size_t lo = s * per;
      const std::size_t hi = std::min(batch.size(), lo + per);
      std::vector<double> part;
      try {
        part = predictor.score_batch(std::span<const TextPair>(batch.data() + lo, hi - lo));
      } catch (const ScorerFailure& e) {
        throw fail(lo + e.pair_index().value_or(0), e.what());
      }
      if (part.size() != hi - lo) throw fail(lo, "wrong number of scores");
      for (std::size_t k = lo; k < hi; ++k) {
        const double v = part[k - lo];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
          throw fail(k, "score " + std::to_string(v) + " outside [0, 1]");
        }
        scores[k] = v;
      }
    });

    std::size_t flips = 0;
    for (std::size_t k = 0; k < positives.size(); ++k) {
      if (scores[k] < config.threshold) {
        auto& p = dataset[positives[k]];
        p.label = Label::negative;
        p.origin = PairOrigin::self_flipped;
        ++flips;
      }
    }
    result.flips_per_iteration.push_back(flips);
    result.positives_after_iteration.push_back(positives.size() - flips);
    fixed = flips == 0;
  }
  result.pairs = std::move(dataset);
  return result;
}

}  // namespace legalir
