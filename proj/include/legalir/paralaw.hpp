#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "legalir/corpus.hpp"
#include "legalir/error.hpp"
#include "legalir/parallel.hpp"
#include "legalir/rng.hpp"

namespace legalir {

/// Cross-lingual sentence-pair example.
///
/// nmsp: 1 = second follows first, 2 = second precedes first, 0 = unrelated.
/// nfsp is defined only for cross-lingual pairs that are either a forward
/// neighbour (1) or random (0).
struct PretrainExample {
  std::string first;
  std::string second;
  std::string lang_first;
  std::string lang_second;
  std::optional<int> nfsp;
  int nmsp = 0;

  friend bool operator==(const PretrainExample&, const PretrainExample&) = default;
};

inline nlohmann::ordered_json to_json(const PretrainExample& e) {
  nlohmann::ordered_json j = {{"first", e.first},
                              {"second", e.second},
                              {"lang_first", e.lang_first},
                              {"lang_second", e.lang_second}};
  j["nfsp"] = e.nfsp ? nlohmann::ordered_json(*e.nfsp) : nlohmann::ordered_json(nullptr);
  j["nmsp"] = e.nmsp;
  return j;
}

/// Random-sentence pools keyed by language code.
using SentencePools = std::map<std::string, std::vector<std::string>>;

struct ParalawOptions {
  std::uint64_t seed = 0;
  std::size_t passes = 1;  // repeats of the 12-example block per index
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline const std::vector<std::string>& pool_for(const SentencePools& pools, const std::string& lang) {
  auto it = pools.find(lang);
  if (it == pools.end() || it->second.empty()) {
    throw Error("paralaw", "random pool for language '" + lang + "' is empty");
  }
  return it->second;
}

}  // namespace detail

/// Emits, for every consecutive index i and every pass, twelve examples in
/// this order (a/b are the bitext languages, r a random pool sentence):
///
///   reversed  (a[i+1], a[i]) (b[i+1], b[i]) (b[i+1], a[i]) (a[i+1], b[i])  nmsp 2
///   forward   (b[i], b[i+1]) (a[i], a[i+1]) (a[i], b[i+1]) (b[i], a[i+1])  nmsp 1
///   random    (a[i], r_b)    (b[i], r_a)    (a[i], r_a)    (b[i], r_b)     nmsp 0
///
/// Indices where a pair would match a sentence with itself are skipped.
inline std::vector<PretrainExample> generate_examples(const AlignedBitext& bitext,
                                                      const SentencePools& pools,
                                                      const ParalawOptions& options) {
  if (bitext.pairs.size() < 2) {
    throw Error("paralaw", "bitext '" + bitext.doc_id + "' needs at least 2 aligned pairs");
  }
  if (bitext.lang_a == bitext.lang_b) throw Error("paralaw", "bitext languages must differ");
  const auto& pool_a = detail::pool_for(pools, bitext.lang_a);
  const auto& pool_b = detail::pool_for(pools, bitext.lang_b);

  std::unordered_set<std::string_view> in_bitext;
  for (const auto& [a, b] : bitext.pairs) {
    in_bitext.insert(a);
    in_bitext.insert(b);
  }
  for (const auto* pool : {&pool_a, &pool_b}) {
    for (const auto& s : *pool) {
      if (in_bitext.contains(s)) {
        throw Error("paralaw", "random sentence occurs in bitext '" + bitext.doc_id + "': " + s);
      }
    }
  }

  const auto& la = bitext.lang_a;
  const auto& lb = bitext.lang_b;
  Rng rng(options.seed);
  auto draw = [&](const std::vector<std::string>& pool) -> const std::string& {
    return pool[static_cast<std::size_t>(rng.uniform_index(pool.size()))];
  };

  std::vector<PretrainExample> out;
  for (std::size_t pass = 0; pass < options.passes; ++pass) {
    for (std::size_t i = 0; i + 1 < bitext.pairs.size(); ++i) {
      const auto& [a0, b0] = bitext.pairs[i];
      const auto& [a1, b1] = bitext.pairs[i + 1];
      if (a0 == a1 || b0 == b1 || a0 == b1 || b0 == a1) continue;

      out.push_back({a1, a0, la, la, std::nullopt, 2});
      out.push_back({b1, b0, lb, lb, std::nullopt, 2});
      out.push_back({b1, a0, lb, la, std::nullopt, 2});
      out.push_back({a1, b0, la, lb, std::nullopt, 2});

      out.push_back({b0, b1, lb, lb, std::nullopt, 1});
      out.push_back({a0, a1, la, la, std::nullopt, 1});
      out.push_back({a0, b1, la, lb, 1, 1});
      out.push_back({b0, a1, lb, la, 1, 1});

      out.push_back({a0, draw(pool_b), la, lb, 0, 0});
      out.push_back({b0, draw(pool_a), lb, la, 0, 0});
      out.push_back({a0, draw(pool_a), la, la, std::nullopt, 0});
      out.push_back({b0, draw(pool_b), lb, lb, std::nullopt, 0});
    }
  }
  return out;
}

/// Generates every document with its own seed derived from `options.seed`
/// and the document position, then concatenates in document order.
inline std::vector<PretrainExample> generate_examples(const std::vector<AlignedBitext>& docs,
                                                      const SentencePools& pools,
                                                      const ParalawOptions& options,
                                                      std::size_t jobs = 1) {
  std::vector<std::vector<PretrainExample>> parts(docs.size());
  parallel_for(docs.size(), jobs, [&](std::size_t d) {
    ParalawOptions local = options;
    local.seed = detail::splitmix64(options.seed ^ detail::splitmix64(d));
    parts[d] = generate_examples(docs[d], pools, local);
  });
  std::vector<PretrainExample> out;
  for (auto& p : parts) {
    out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return out;
}

/// Seeded shuffle, then the first round(ratio * n) items go to training.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_dataset(std::vector<T> items, double ratio_train,
                                                        std::uint64_t seed) {
  if (!(ratio_train > 0.0 && ratio_train < 1.0)) {
    throw Error("paralaw", "train ratio must be in (0, 1)");
  }
  Rng rng(seed);
  rng.shuffle(items);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio_train * static_cast<double>(items.size())));
  std::vector<T> validation(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(n_train)),
                            std::make_move_iterator(items.end()));
  items.resize(n_train);
  return {std::move(items), std::move(validation)};
}

}  // namespace legalir
