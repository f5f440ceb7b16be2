#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "legalir/error.hpp"
#include "legalir/tokenizer.hpp"

namespace legalir {

/// Okapi BM25 parameters. Defaults follow the rank-bm25 package.
struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;

  void validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) throw Error("lexical", "BM25 k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw Error("lexical", "BM25 b must be in [0, 1]");
  }
};

struct Posting {
  std::uint32_t unit;  // ordinal into InvertedIndex::unit_ids()
  std::uint32_t tf;
};

/// Term -> postings index over a set of units (documents or paragraphs).
///
/// Units are stored in ascending id order, so ordinals sort the same way as
/// ids and every postings list is sorted by unit id.
class InvertedIndex {
 public:
  using Unit = std::pair<std::string, std::vector<std::string>>;

  InvertedIndex() = default;

  static InvertedIndex build(std::vector<Unit> units) {
    std::sort(units.begin(), units.end(),
              [](const Unit& a, const Unit& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < units.size(); ++i) {
      if (units[i].first == units[i - 1].first) {
        throw Error("lexical", "duplicate unit id '" + units[i].first + "'");
      }
    }

    InvertedIndex index;
    index.ids_.reserve(units.size());
    index.lengths_.reserve(units.size());
    double total = 0.0;
    std::unordered_map<std::string, std::uint32_t> counts;
    for (std::size_t u = 0; u < units.size(); ++u) {
      auto& [id, tokens] = units[u];
      index.by_id_.emplace(id, u);
      index.ids_.push_back(std::move(id));
      index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
      total += static_cast<double>(tokens.size());

      counts.clear();
      for (const auto& t : tokens) ++counts[t];
      for (const auto& [term, tf] : counts) {
        index.postings_[term].push_back({static_cast<std::uint32_t>(u), tf});
      }
    }
    index.avg_length_ = units.empty() ? 0.0 : total / static_cast<double>(units.size());
    return index;
  }

  std::size_t unit_count() const { return ids_.size(); }
  double avg_length() const { return avg_length_; }
  const std::vector<std::string>& unit_ids() const { return ids_; }
  std::uint32_t length(std::size_t ordinal) const { return lengths_[ordinal]; }
  std::size_t vocabulary_size() const { return postings_.size(); }

  std::optional<std::size_t> ordinal(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  /// Postings for `term`, or nullptr if the term never occurs.
  const std::vector<Posting>* postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
  }

  std::size_t document_frequency(const std::string& term) const {
    const auto* p = postings(term);
    return p ? p->size() : 0;
  }

  std::uint32_t term_frequency(const std::string& term, std::size_t ordinal) const {
    const auto* p = postings(term);
    if (!p) return 0;
    auto it = std::lower_bound(p->begin(), p->end(), ordinal,
                               [](const Posting& x, std::size_t u) { return x.unit < u; });
    return (it != p->end() && it->unit == ordinal) ? it->tf : 0;
  }

  const std::unordered_map<std::string, std::vector<Posting>>& all_postings() const {
    return postings_;
  }

  /// Snapshot format (version 1):
  ///   {"format":"legalir-inverted-index","version":1,
  ///    "units":[{"id":..,"length":..},...],            // ascending id
  ///    "postings":{"<term>":[[ordinal,tf],...],...}}   // terms sorted
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json units = nlohmann::ordered_json::array();
    for (std::size_t u = 0; u < ids_.size(); ++u) {
      units.push_back({{"id", ids_[u]}, {"length", lengths_[u]}});
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [t, _] : postings_) terms.push_back(&t);
    std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
    nlohmann::ordered_json postings = nlohmann::ordered_json::object();
    for (const auto* t : terms) {
      nlohmann::ordered_json list = nlohmann::ordered_json::array();
      for (const auto& p : postings_.at(*t)) list.push_back({p.unit, p.tf});
      postings[*t] = std::move(list);
    }
    return {{"format", kSnapshotFormat},
            {"version", kSnapshotVersion},
            {"units", std::move(units)},
            {"postings", std::move(postings)}};
  }

  static InvertedIndex from_json(const nlohmann::json& j) {
    auto bad = [](const std::string& what) -> Error {
      return Error("lexical", "invalid index snapshot: " + what);
    };
    if (!j.is_object() || j.value("format", "") != kSnapshotFormat) throw bad("wrong format tag");
    if (j.value("version", 0) != kSnapshotVersion) throw bad("unsupported version");

    InvertedIndex index;
    double total = 0.0;
    for (const auto& u : j.at("units")) {
      auto id = u.at("id").get<std::string>();
      if (!index.ids_.empty() && !(index.ids_.back() < id)) throw bad("units not strictly sorted");
      const auto len = u.at("length").get<std::uint32_t>();
      index.by_id_.emplace(id, index.ids_.size());
      index.ids_.push_back(std::move(id));
      index.lengths_.push_back(len);
      total += len;
    }
    for (const auto& [term, list] : j.at("postings").items()) {
      auto& out = index.postings_[term];
      for (const auto& entry : list) {
        const auto unit = entry.at(0).get<std::uint32_t>();
        const auto tf = entry.at(1).get<std::uint32_t>();
        if (unit >= index.ids_.size()) throw bad("posting references unknown unit");
        if (tf == 0) throw bad("zero term frequency");
        if (!out.empty() && out.back().unit >= unit) throw bad("postings not sorted");
        out.push_back({unit, tf});
      }
    }
    index.avg_length_ = index.ids_.empty() ? 0.0 : total / static_cast<double>(index.ids_.size());
    return index;
  }

  static constexpr const char* kSnapshotFormat = "legalir-inverted-index";
  static constexpr int kSnapshotVersion = 1;

 private:
  std::vector<std::string> ids_;
  std::vector<std::uint32_t> lengths_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  double avg_length_ = 0.0;
};

inline InvertedIndex build_index(std::vector<InvertedIndex::Unit> units) {
  return InvertedIndex::build(std::move(units));
}

// ---------------------------------------------------------------------------
// BM25

/// idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1). Never negative.
inline double bm25_idf(std::size_t n_units, std::size_t df) {
  const auto n = static_cast<double>(n_units);
  const auto d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

inline double bm25_term_weight(double idf, double tf, double length, double avg_length,
                               const Bm25Params& params) {
  const double rel = avg_length > 0.0 ? length / avg_length : 0.0;
  return idf * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * rel));
}

namespace detail {
inline void require_nonempty(const InvertedIndex& index) {
  if (index.unit_count() == 0) throw Error("lexical", "cannot score against an empty index");
}
}  // namespace detail

/// BM25 of one unit. Repeated query tokens contribute once per occurrence.
inline double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query,
                         const std::string& unit_id, const Bm25Params& params = {}) {
  detail::require_nonempty(index);
  const auto ordinal = index.ordinal(unit_id);
  if (!ordinal) throw Error("lexical", "unknown unit id '" + unit_id + "'");
  const double len = index.length(*ordinal);
  double score = 0.0;
  for (const auto& term : query) {
    const auto tf = index.term_frequency(term, *ordinal);
    if (tf == 0) continue;
    const double idf = bm25_idf(index.unit_count(), index.document_frequency(term));
    score += bm25_term_weight(idf, tf, len, index.avg_length(), params);
  }
  return score;
}

/// BM25 of every unit, indexed by ordinal. Same arithmetic and summation
/// order as `bm25_score`, traversed term-at-a-time.
inline std::vector<double> bm25_scores(const InvertedIndex& index,
                                       const std::vector<std::string>& query,
                                       const Bm25Params& params = {}) {
  detail::require_nonempty(index);
  std::vector<double> scores(index.unit_count(), 0.0);
  for (const auto& term : query) {
    const auto* postings = index.postings(term);
    if (!postings) continue;
    const double idf = bm25_idf(index.unit_count(), postings->size());
    for (const auto& p : *postings) {
      scores[p.unit] += bm25_term_weight(idf, p.tf, index.length(p.unit), index.avg_length(),
                                         params);
    }
  }
  return scores;
}

struct ScoredId {
  std::string id;
  double score = 0.0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// Top-K units by BM25, descending, ties by ascending id. `exclude_id`
/// removes one unit (typically the query itself) from the candidate pool.
inline std::vector<ScoredId> prune_candidates(const InvertedIndex& index,
                                              const std::vector<std::string>& query,
                                              std::size_t k, const Bm25Params& params = {},
                                              const std::string* exclude_id = nullptr) {
  if (k < 1) throw Error("lexical", "prune K must be >= 1");
  const auto scores = bm25_scores(index, query, params);

  std::vector<std::size_t> order;
  order.reserve(scores.size());
  const auto excluded = exclude_id ? index.ordinal(*exclude_id) : std::nullopt;
  for (std::size_t u = 0; u < scores.size(); ++u) {
    if (excluded && *excluded == u) continue;
    order.push_back(u);
  }
  const auto by_rank = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // ordinal order is id order
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    by_rank);

  std::vector<ScoredId> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({index.unit_ids()[order[i]], scores[order[i]]});
  return out;
}

// ---------------------------------------------------------------------------
// tf-idf

/// Sparse tf-idf vector sorted by term.
struct TfidfVector {
  std::vector<std::pair<std::string, double>> weights;
  double norm = 0.0;
};

/// idf(t) = ln(N / (1 + df)) + 1 over the statistics of `stats`.
inline double tfidf_idf(std::size_t n_units, std::size_t df) {
  return std::log(static_cast<double>(n_units) / (1.0 + static_cast<double>(df))) + 1.0;
}

inline TfidfVector tfidf_vector(const std::vector<std::string>& tokens,
                                const InvertedIndex& stats) {
  std::vector<std::string> sorted = tokens;
  std::sort(sorted.begin(), sorted.end());
  TfidfVector v;
  double sq = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double w = static_cast<double>(j - i) *
                     tfidf_idf(stats.unit_count(), stats.document_frequency(sorted[i]));
    v.weights.emplace_back(std::move(sorted[i]), w);
    sq += w * w;
    i = j;
  }
  v.norm = std::sqrt(sq);
  return v;
}

/// Cosine of two tf-idf vectors, clamped to [0, 1]; 0 if either is zero.
inline double cosine(const TfidfVector& a, const TfidfVector& b) {
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  double dot = 0.0;
  auto ia = a.weights.begin();
  auto ib = b.weights.begin();
  while (ia != a.weights.end() && ib != b.weights.end()) {
    const int c = ia->first.compare(ib->first);
    if (c == 0) {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    } else if (c < 0) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return std::clamp(dot / (a.norm * b.norm), 0.0, 1.0);
}

inline double tfidf_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b,
                           const InvertedIndex& corpus_stats) {
  if (corpus_stats.unit_count() == 0) {
    throw Error("lexical", "tf-idf statistics need at least one unit");
  }
  return cosine(tfidf_vector(a, corpus_stats), tfidf_vector(b, corpus_stats));
}

/// Ranks `candidates` (precomputed vectors keyed by id) by cosine to
/// `query`, descending with ascending-id ties.
inline std::vector<ScoredId> rank_by_cosine(
    const TfidfVector& query, const std::vector<std::pair<std::string, TfidfVector>>& candidates) {
  std::vector<ScoredId> out;
  out.reserve(candidates.size());
  for (const auto& [id, vec] : candidates) out.push_back({id, cosine(query, vec)});
  std::sort(out.begin(), out.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return out;
}

}  // namespace legalir
