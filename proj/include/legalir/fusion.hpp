#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "legalir/corpus.hpp"
#include "legalir/error.hpp"
#include "legalir/lexical.hpp"
#include "legalir/parallel.hpp"
#include "legalir/scorer.hpp"
#include "legalir/tokenizer.hpp"

namespace legalir {

enum class ScoreChannel { lexical, semantic, fused };

inline std::string_view to_string(ScoreChannel c) {
  switch (c) {
    case ScoreChannel::lexical: return "lexical";
    case ScoreChannel::semantic: return "semantic";
    case ScoreChannel::fused: return "fused";
  }
  return "lexical";
}

/// Paragraph-pair scores for one (query case, candidate case): rows are the
/// query's kept paragraphs, columns the candidate's. Row-major storage.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::string query_id, std::string candidate_id, std::size_t rows, std::size_t cols,
              ScoreChannel channel)
      : query_id_(std::move(query_id)),
        candidate_id_(std::move(candidate_id)),
        rows_(rows),
        cols_(cols),
        channel_(channel),
        values_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) throw Error("fusion", "score matrix needs N >= 1 and M >= 1");
  }

  const std::string& query_id() const { return query_id_; }
  const std::string& candidate_id() const { return candidate_id_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  ScoreChannel channel() const { return channel_; }

  double& at(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  std::string query_id_;
  std::string candidate_id_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  ScoreChannel channel_ = ScoreChannel::lexical;
  std::vector<double> values_;
};

enum class LexicalNormalization { per_matrix_minmax, none };

inline LexicalNormalization parse_lexical_normalization(std::string_view s) {
  if (s == "per_matrix_minmax") return LexicalNormalization::per_matrix_minmax;
  if (s == "none") return LexicalNormalization::none;
  throw Error("fusion", "unknown lexical normalization '" + std::string(s) + "'");
}

struct FusionConfig {
  double alpha = 0.7;  // weight of the semantic channel
  LexicalNormalization lexical_normalization = LexicalNormalization::per_matrix_minmax;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("fusion", "alpha must be in [0, 1]");
  }
};

// ---------------------------------------------------------------------------
// Matrices

using ParagraphTokens = std::vector<std::vector<std::string>>;

inline ParagraphTokens kept_paragraph_tokens(const CaseDocument& doc,
                                             const TokenizerConfig& tokenizer) {
  ParagraphTokens out;
  for (const auto* p : doc.kept_paragraphs()) out.push_back(tokenize(p->text, tokenizer));
  return out;
}

namespace detail {

inline std::string paragraph_unit_id(std::size_t j) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%08zu", j);
  return buf;
}

inline void require_kept(const CaseDocument& doc) {
  if (doc.kept_count() == 0) {
    throw Error("fusion", "case '" + doc.id + "' has no kept paragraphs");
  }
}

}  // namespace detail

/// Cell (i, j) is the BM25 score of candidate paragraph j for query
/// paragraph i, over an index of the candidate's paragraphs.
inline ScoreMatrix lexical_matrix(const std::string& query_id, const ParagraphTokens& query,
                                  const std::string& candidate_id,
                                  const ParagraphTokens& candidate,
                                  const Bm25Params& params = {}) {
  params.validate();
  ScoreMatrix m(query_id, candidate_id, query.size(), candidate.size(), ScoreChannel::lexical);
  std::vector<InvertedIndex::Unit> units;
  units.reserve(candidate.size());
  for (std::size_t j = 0; j < candidate.size(); ++j) {
    units.emplace_back(detail::paragraph_unit_id(j), candidate[j]);
  }
  // Zero-padded ids keep ordinal order equal to paragraph order.
  const auto index = InvertedIndex::build(std::move(units));
  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto row = bm25_scores(index, query[i], params);
    std::copy(row.begin(), row.end(), m.values().begin() + static_cast<std::ptrdiff_t>(i * m.cols()));
  }
  return m;
}

inline ScoreMatrix lexical_matrix(const CaseDocument& query_case,
                                  const CaseDocument& candidate_case,
                                  const Bm25Params& params = {},
                                  const TokenizerConfig& tokenizer = {}) {
  detail::require_kept(query_case);
  detail::require_kept(candidate_case);
  return lexical_matrix(query_case.id, kept_paragraph_tokens(query_case, tokenizer),
                        candidate_case.id, kept_paragraph_tokens(candidate_case, tokenizer),
                        params);
}

/// Cell (i, j) = scorer(query paragraph i, candidate paragraph j). Scores
/// outside [0, 1] and scorer failures are reported with the pair position.
inline ScoreMatrix semantic_matrix(const CaseDocument& query_case,
                                   const CaseDocument& candidate_case, SemanticScorer& scorer) {
  detail::require_kept(query_case);
  detail::require_kept(candidate_case);
  const auto q = query_case.kept_paragraphs();
  const auto c = candidate_case.kept_paragraphs();

  std::vector<TextPair> pairs;
  pairs.reserve(q.size() * c.size());
  for (const auto* qp : q)
    for (const auto* cp : c) pairs.push_back({qp->text, cp->text});

  auto describe = [&](std::size_t k) {
    const auto* qp = q[k / c.size()];
    const auto* cp = c[k % c.size()];
    return "query '" + query_case.id + "' paragraph " + std::to_string(qp->index) +
           " vs candidate '" + candidate_case.id + "' paragraph " + std::to_string(cp->index);
  };

  std::vector<double> scores;
  try {
    scores = scorer.score_batch(pairs);
  } catch (const ScorerFailure& e) {
    const auto where = e.pair_index() ? describe(*e.pair_index()) : std::string("unknown pair");
    throw Error("fusion", "semantic scorer failed on " + where + ": " + e.what());
  }
  if (scores.size() != pairs.size()) {
    throw Error("fusion", "semantic scorer returned " + std::to_string(scores.size()) +
                              " scores for " + std::to_string(pairs.size()) + " pairs");
  }

  ScoreMatrix m(query_case.id, candidate_case.id, q.size(), c.size(), ScoreChannel::semantic);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k]) || scores[k] < 0.0 || scores[k] > 1.0) {
      throw Error("fusion", "semantic score " + std::to_string(scores[k]) + " outside [0, 1] on " +
                                describe(k));
    }
    m.values()[k] = scores[k];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Fusion and aggregation

/// Min-max rescale into [0, 1]; a constant matrix maps to all zeros.
inline ScoreMatrix minmax_normalized(const ScoreMatrix& m) {
  ScoreMatrix out = m;
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (auto& v : out.values()) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

/// fused = alpha * semantic + (1 - alpha) * lexical', where lexical' is the
/// lexical matrix after the configured normalization.
inline ScoreMatrix fuse(const ScoreMatrix& lex, const ScoreMatrix& sem,
                        const FusionConfig& config) {
  config.validate();
  if (lex.channel() != ScoreChannel::lexical || sem.channel() != ScoreChannel::semantic) {
    throw Error("fusion", "fuse expects a lexical and a semantic matrix");
  }
  if (lex.rows() != sem.rows() || lex.cols() != sem.cols()) {
    throw Error("fusion", "matrix dimension mismatch: " + std::to_string(lex.rows()) + "x" +
                              std::to_string(lex.cols()) + " vs " + std::to_string(sem.rows()) +
                              "x" + std::to_string(sem.cols()));
  }
  if (lex.query_id() != sem.query_id() || lex.candidate_id() != sem.candidate_id()) {
    throw Error("fusion", "matrices belong to different case pairs");
  }

  const ScoreMatrix lex_n = config.lexical_normalization == LexicalNormalization::per_matrix_minmax
                                ? minmax_normalized(lex)
                                : lex;
  ScoreMatrix out(lex.query_id(), lex.candidate_id(), lex.rows(), lex.cols(), ScoreChannel::fused);
  const double a = config.alpha;
  for (std::size_t k = 0; k < out.values().size(); ++k) {
    out.values()[k] = a * sem.values()[k] + (1.0 - a) * lex_n.values()[k];
  }
  return out;
}

/// Mean over query paragraphs of their best-matching candidate paragraph.
inline double aggregate_case_score(const ScoreMatrix& m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double best = m.at(i, 0);
    for (std::size_t j = 1; j < m.cols(); ++j) best = std::max(best, m.at(i, j));
    total += best;
  }
  return total / static_cast<double>(m.rows());
}

// ---------------------------------------------------------------------------
// Retrieval pipeline

struct RetrieveConfig {
  std::size_t prune_k = 100;
  FusionConfig fusion;
  std::size_t top_n = 5;
  /// Keep only candidates scoring >= relative_threshold * best score;
  /// 0 disables the cut.
  double relative_threshold = 0.0;
  Bm25Params bm25;
  std::size_t jobs = 1;

  void validate() const {
    if (prune_k < 1) throw Error("fusion", "prune_k must be >= 1");
    if (top_n < 1) throw Error("fusion", "top_n must be >= 1");
    if (!(relative_threshold >= 0.0 && relative_threshold <= 1.0)) {
      throw Error("fusion", "relative threshold must be in [0, 1]");
    }
    fusion.validate();
    bm25.validate();
  }
};

/// Case-law retrieval over a fixed corpus: BM25 pruning on whole cases,
/// then paragraph-level lexical and semantic matrices fused and reduced to
/// one score per candidate.
///
/// Cases without kept paragraphs are not indexed. The query's own id, if it
/// is also in the corpus, is never returned.
class Retriever {
 public:
  explicit Retriever(const CorpusStore& corpus, TokenizerConfig tokenizer = {})
      : corpus_(&corpus), tokenizer_(tokenizer) {
    std::vector<InvertedIndex::Unit> cases;
    std::vector<InvertedIndex::Unit> paragraphs;
    for (const auto& doc : corpus) {
      if (doc.kept_count() == 0) continue;
      auto tokens = kept_paragraph_tokens(doc, tokenizer_);
      std::vector<std::string> whole;
      for (std::size_t j = 0; j < tokens.size(); ++j) {
        whole.insert(whole.end(), tokens[j].begin(), tokens[j].end());
        paragraphs.emplace_back(doc.id + "\x1f" + detail::paragraph_unit_id(j), tokens[j]);
      }
      cases.emplace_back(doc.id, std::move(whole));
      paragraph_tokens_.emplace(doc.id, std::move(tokens));
    }
    case_index_ = InvertedIndex::build(std::move(cases));
    paragraph_stats_ = std::make_shared<InvertedIndex>(InvertedIndex::build(std::move(paragraphs)));
  }

  /// Uses a previously built case-level index (e.g. loaded from a snapshot).
  Retriever(const CorpusStore& corpus, InvertedIndex case_index, TokenizerConfig tokenizer = {})
      : Retriever(corpus, tokenizer) {
    if (case_index.unit_ids() != case_index_.unit_ids()) {
      throw Error("fusion", "index snapshot does not match the corpus");
    }
    case_index_ = std::move(case_index);
  }

  const InvertedIndex& case_index() const { return case_index_; }
  std::shared_ptr<const InvertedIndex> paragraph_stats() const { return paragraph_stats_; }
  const TokenizerConfig& tokenizer() const { return tokenizer_; }

  /// tf-idf cosine scorer over paragraph-level corpus statistics.
  std::unique_ptr<SemanticScorer> baseline_scorer() const {
    return std::make_unique<TfidfCosineScorer>(paragraph_stats_, tokenizer_);
  }

  std::vector<ScoredId> prune(const CaseDocument& query, std::size_t k,
                              const Bm25Params& params = {}) const {
    std::vector<std::string> whole;
    for (const auto& t : kept_paragraph_tokens(query, tokenizer_)) whole.insert(whole.end(), t.begin(), t.end());
    return prune_candidates(case_index_, whole, k, params, &query.id);
  }

  /// Fused score of one candidate against the query.
  double case_score(const CaseDocument& query, const ParagraphTokens& query_tokens,
                    const CaseDocument& candidate, const RetrieveConfig& config,
                    SemanticScorer& scorer, std::mutex* scorer_mutex = nullptr) const {
    const auto& cand_tokens = paragraph_tokens_.at(candidate.id);
    const auto lex = lexical_matrix(query.id, query_tokens, candidate.id, cand_tokens, config.bm25);
    ScoreMatrix sem;
    if (scorer_mutex) {
      std::lock_guard lock(*scorer_mutex);
      sem = semantic_matrix(query, candidate, scorer);
    } else {
      sem = semantic_matrix(query, candidate, scorer);
    }
    return aggregate_case_score(fuse(lex, sem, config.fusion));
  }

  /// prune -> matrices -> fuse -> aggregate -> rank -> cut.
  std::vector<ScoredId> retrieve(const CaseDocument& query, const RetrieveConfig& config,
                                 SemanticScorer& scorer) const {
    config.validate();
    detail::require_kept(query);
    if (case_index_.unit_count() == 0) throw Error("fusion", "corpus has no indexable cases");

    const auto candidates = prune(query, config.prune_k, config.bm25);
    const auto query_tokens = kept_paragraph_tokens(query, tokenizer_);

    std::mutex scorer_mutex;
    std::mutex* guard = scorer.concurrent_safe() ? nullptr : &scorer_mutex;
    std::vector<ScoredId> ranked(candidates.size());
    parallel_for(candidates.size(), config.jobs, [&](std::size_t i) {
      const auto& cand = corpus_->at(candidates[i].id);
      ranked[i] = {cand.id, case_score(query, query_tokens, cand, config, scorer, guard)};
    });

    std::sort(ranked.begin(), ranked.end(), [](const ScoredId& a, const ScoredId& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.id < b.id;
    });
    if (ranked.size() > config.top_n) ranked.resize(config.top_n);
    if (config.relative_threshold > 0.0 && !ranked.empty()) {
      const double cut = config.relative_threshold * ranked.front().score;
      std::erase_if(ranked, [&](const ScoredId& s) { return s.score < cut; });
    }
    return ranked;
  }

 private:
  const CorpusStore* corpus_;
  TokenizerConfig tokenizer_;
  InvertedIndex case_index_;
  std::shared_ptr<InvertedIndex> paragraph_stats_;
  std::unordered_map<std::string, ParagraphTokens> paragraph_tokens_;
};

}  // namespace legalir
