#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "legalir/error.hpp"
#include "legalir/metrics.hpp"
#include "legalir/parallel.hpp"
#include "legalir/utf8.hpp"

namespace legalir {

using ScoreMap = std::map<std::string, double>;

struct ModelOutputs {
  std::string model_id;
  ScoreMap scores;  // candidate id -> raw score
};

struct EnsembleWeights {
  std::map<std::string, double> weights;

  void validate() const {
    if (weights.empty()) throw Error("ensemble", "no weights");
    double sum = 0.0;
    for (const auto& [m, w] : weights) {
      if (!std::isfinite(w) || w < 0.0) throw Error("ensemble", "weight of '" + m + "' must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("ensemble", "weights must sum to 1");
  }
};

/// (v - min) / (max - min); a constant map becomes all zeros.
inline ScoreMap minmax_normalize(const ScoreMap& scores) {
  if (scores.empty()) throw Error("ensemble", "cannot normalize an empty score map");
  double lo = scores.begin()->second;
  double hi = lo;
  for (const auto& [_, v] : scores) {
    if (!std::isfinite(v)) throw Error("ensemble", "non-finite model score");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  ScoreMap out;
  const double range = hi - lo;
  for (const auto& [k, v] : scores) out.emplace_hint(out.end(), k, range > 0.0 ? (v - lo) / range : 0.0);
  return out;
}

/// Weighted sum of min-max normalized model scores. Every weighted model
/// must be present and all models must score the same candidates; models
/// without a weight contribute nothing.
inline ScoreMap combine(const std::vector<ModelOutputs>& outputs, const EnsembleWeights& weights) {
  weights.validate();
  if (outputs.empty()) throw Error("ensemble", "no model outputs");
  for (const auto& [m, _] : weights.weights) {
    const bool present = std::any_of(outputs.begin(), outputs.end(),
                                     [&](const ModelOutputs& o) { return o.model_id == m; });
    if (!present) throw Error("ensemble", "weighted model '" + m + "' has no outputs");
  }
  const auto& reference = outputs.front().scores;
  ScoreMap combined;
  for (const auto& [k, _] : reference) combined.emplace_hint(combined.end(), k, 0.0);

  for (const auto& o : outputs) {
    if (o.scores.size() != reference.size() ||
        !std::equal(o.scores.begin(), o.scores.end(), reference.begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
      throw Error("ensemble", "model '" + o.model_id + "' scores a different candidate set than '" +
                                  outputs.front().model_id + "'");
    }
    auto w = weights.weights.find(o.model_id);
    if (w == weights.weights.end() || w->second == 0.0) continue;
    const auto normalized = minmax_normalize(o.scores);
    auto out = combined.begin();
    for (const auto& [_, v] : normalized) (out++)->second += w->second * v;
  }
  for (auto& [_, v] : combined) v = std::clamp(v, 0.0, 1.0);
  return combined;
}

// ---------------------------------------------------------------------------
// Multi-query outputs and weight fitting

/// model id -> query id -> candidate id -> score
using ModelRuns = std::map<std::string, std::map<std::string, ScoreMap>>;

inline std::map<std::string, ScoreMap> combine_runs(const ModelRuns& runs,
                                                    const EnsembleWeights& weights) {
  if (runs.empty()) throw Error("ensemble", "no model outputs");
  std::set<std::string> queries;
  for (const auto& [_, per_query] : runs)
    for (const auto& [q, __] : per_query) queries.insert(q);

  std::map<std::string, ScoreMap> out;
  for (const auto& q : queries) {
    std::vector<ModelOutputs> outputs;
    for (const auto& [model, per_query] : runs) {
      auto it = per_query.find(q);
      if (it == per_query.end()) throw Error("ensemble", "model '" + model + "' has no scores for query '" + q + "'");
      outputs.push_back({model, it->second});
    }
    out[q] = combine(outputs, weights);
  }
  return out;
}

/// Turns combined scores into a predicted set: candidates with score >=
/// min_score, best first, at most top_n of them (0 = no limit).
struct SelectionRule {
  std::size_t top_n = 0;
  double min_score = 0.5;
};

inline std::set<std::string> select_candidates(const ScoreMap& scores, const SelectionRule& rule) {
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> out;
  for (const auto& [id, v] : ranked) {
    if (v < rule.min_score) break;
    if (rule.top_n > 0 && out.size() >= rule.top_n) break;
    out.insert(id);
  }
  return out;
}

/// All weight vectors with components in multiples of `step` summing to 1,
/// in lexicographic order of their integer numerators (first model varies
/// slowest). For two models and step 0.5: (0,1), (0.5,0.5), (1,0).
inline std::vector<std::vector<double>> weight_grid(std::size_t models, double step) {
  if (models == 0) throw Error("ensemble", "weight grid needs at least one model");
  if (!(step > 0.0 && step <= 1.0)) throw Error("ensemble", "grid step must be in (0, 1]");
  const auto units = static_cast<long>(std::llround(1.0 / step));
  if (std::abs(static_cast<double>(units) * step - 1.0) > 1e-9) {
    throw Error("ensemble", "grid step must divide 1");
  }
  std::vector<std::vector<double>> grid;
  std::vector<long> parts(models, 0);
  auto recurse = [&](auto&& self, std::size_t pos, long left) -> void {
    if (pos + 1 == models) {
      parts[pos] = left;
      std::vector<double> w(models);
      for (std::size_t i = 0; i < models; ++i) w[i] = static_cast<double>(parts[i]) / static_cast<double>(units);
      grid.push_back(std::move(w));
      return;
    }
    for (long k = 0; k <= left; ++k) {
      parts[pos] = k;
      self(self, pos + 1, left - k);
    }
  };
  recurse(recurse, 0, units);
  return grid;
}

struct FitOptions {
  double grid_step = 0.1;
  SelectionRule selection;
  std::size_t jobs = 1;
};

struct FitResult {
  EnsembleWeights weights;
  double objective = 0.0;  // macro F2 on the dev set
};

/// Exhaustive grid search over the weight simplex maximizing macro F2 on the
/// dev set. Models are ordered by id; ties keep the first grid point.
inline FitResult fit_weights(const ModelRuns& dev, const RelevanceSets& gold,
                             const FitOptions& options = {}) {
  if (dev.empty()) throw Error("ensemble", "fit_weights needs at least one model");
  if (gold.empty()) throw Error("ensemble", "fit_weights needs gold labels");
  std::vector<std::string> models;
  for (const auto& [m, _] : dev) models.push_back(m);

  const auto grid = weight_grid(models.size(), options.grid_step);
  std::vector<double> objective(grid.size(), 0.0);
  parallel_for(grid.size(), options.jobs, [&](std::size_t g) {
    EnsembleWeights w;
    for (std::size_t i = 0; i < models.size(); ++i) w.weights[models[i]] = grid[g][i];
    RelevanceSets predicted;
    for (const auto& [q, scores] : combine_runs(dev, w)) {
      predicted[q] = select_candidates(scores, options.selection);
    }
    objective[g] = evaluate_retrieval(predicted, gold).f2;
  });

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (objective[g] > objective[best]) best = g;
  }
  FitResult result;
  for (std::size_t i = 0; i < models.size(); ++i) result.weights.weights[models[i]] = grid[best][i];
  result.objective = objective[best];
  return result;
}

// ---------------------------------------------------------------------------
// Files

/// Reads model-output JSONL: {"model_id","query_id","candidate_id","score"}.
inline ModelRuns read_model_outputs(std::istream& in) {
  ModelRuns runs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (utf8::trim(line).empty()) continue;
    const auto where = "model output line " + std::to_string(lineno) + ": ";
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto model = rec.at("model_id").get<std::string>();
      const auto query = rec.at("query_id").get<std::string>();
      const auto cand = rec.at("candidate_id").get<std::string>();
      const auto score = rec.at("score").get<double>();
      if (!std::isfinite(score)) throw Error("ensemble", where + "non-finite score");
      if (!runs[model][query].emplace(cand, score).second) {
        throw Error("ensemble", where + "duplicate (model, query, candidate)");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error("ensemble", where + e.what());
    }
  }
  return runs;
}

inline ModelRuns read_model_outputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ensemble", "cannot open '" + path + "'");
  return read_model_outputs(in);
}

inline EnsembleWeights weights_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("ensemble", "weights file must be a JSON object");
  EnsembleWeights w;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw Error("ensemble", "weight of '" + k + "' is not a number");
    w.weights[k] = v.get<double>();
  }
  w.validate();
  return w;
}

inline nlohmann::ordered_json to_json(const EnsembleWeights& w) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : w.weights) j[k] = v;
  return j;
}

}  // namespace legalir
