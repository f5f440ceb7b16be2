#pragma once

// Test-only reference implementations. These recompute everything from raw
// token lists and share no code path with the library they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Unit = std::pair<std::string, std::vector<std::string>>;

inline double bm25(const std::vector<Unit>& units, const std::vector<std::string>& query,
                   const std::string& id, double k1 = 1.5, double b = 0.75) {
  const double n = static_cast<double>(units.size());
  double total_len = 0;
  for (const auto& u : units) total_len += static_cast<double>(u.second.size());
  const double avg = total_len / n;
  const Unit* target = nullptr;
  for (const auto& u : units)
    if (u.first == id) target = &u;
  double score = 0;
  for (const auto& term : query) {
    double df = 0;
    for (const auto& u : units)
      if (std::find(u.second.begin(), u.second.end(), term) != u.second.end()) df += 1;
    const double tf = static_cast<double>(std::count(target->second.begin(), target->second.end(), term));
    if (tf == 0) continue;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double len = static_cast<double>(target->second.size());
    score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
  }
  return score;
}

inline double tfidf_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b,
                           const std::vector<Unit>& units) {
  const double n = static_cast<double>(units.size());
  auto idf = [&](const std::string& t) {
    double df = 0;
    for (const auto& u : units)
      if (std::find(u.second.begin(), u.second.end(), t) != u.second.end()) df += 1;
    return std::log(n / (1 + df)) + 1;
  };
  std::map<std::string, double> va, vb;
  for (const auto& t : a) va[t] += 1;
  for (const auto& t : b) vb[t] += 1;
  for (auto& [t, v] : va) v *= idf(t);
  for (auto& [t, v] : vb) v *= idf(t);
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, v] : va) {
    na += v * v;
    if (vb.count(t)) dot += v * vb[t];
  }
  for (const auto& [t, v] : vb) nb += v * v;
  if (na == 0 || nb == 0) return 0;
  return dot / std::sqrt(na) / std::sqrt(nb);
}

/// Window starts by direct simulation: slide until a window reaches or
/// passes the end, then snap the last one to the end.
inline std::vector<std::size_t> window_starts(std::size_t len, std::size_t window, std::size_t stride) {
  std::vector<std::size_t> out;
  if (len == 0) return out;
  std::size_t s = 0;
  while (true) {
    if (s + window >= len) {
      const std::size_t snapped = len > window ? len - window : 0;
      if (out.empty() || out.back() != snapped) out.push_back(snapped);
      break;
    }
    out.push_back(s);
    s += stride;
  }
  return out;
}

inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len,
                                              std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len_d(0, max_len);
  std::uniform_int_distribution<std::size_t> tok_d(0, vocab - 1);
  std::vector<std::string> out(len_d(rng));
  for (auto& t : out) t = "t" + std::to_string(tok_d(rng));
  return out;
}

}  // namespace oracle
