#pragma once

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "legalir/error.hpp"
#include "legalir/gold.hpp"

namespace legalir {

using RelevanceSets = std::map<std::string, std::set<std::string>>;

inline RelevanceSets to_sets(const GoldLabels& gold) {
  RelevanceSets out;
  for (const auto& [q, ids] : gold) out[q] = std::set<std::string>(ids.begin(), ids.end());
  return out;
}

struct QueryScores {
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  std::size_t return_count = 0;     // total predicted ids
  std::size_t retrieved_count = 0;  // total correct predicted ids
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double f2 = 0.0;
  std::map<std::string, QueryScores> per_query;
};

/// F2 of macro-averaged precision and recall: 5PR / (4P + R), 0 when the
/// denominator vanishes.
inline double f2_from_macro(double precision, double recall) {
  const double denom = 4.0 * precision + recall;
  return denom > 0.0 ? 5.0 * precision * recall / denom : 0.0;
}

/// Per-query precision/recall averaged over every gold query. A gold query
/// with no prediction counts as an empty prediction (P = R = 0).
inline EvalReport evaluate_retrieval(const RelevanceSets& predictions, const RelevanceSets& gold) {
  for (const auto& [q, _] : predictions) {
    if (!gold.contains(q)) throw Error("metrics", "prediction for unknown query '" + q + "'");
  }
  if (gold.empty()) throw Error("metrics", "gold labels are empty");

  EvalReport report;
  double p_sum = 0.0;
  double r_sum = 0.0;
  static const std::set<std::string> kNone;
  for (const auto& [q, relevant] : gold) {
    if (relevant.empty()) throw Error("metrics", "gold entry for '" + q + "' is empty");
    auto it = predictions.find(q);
    const auto& pred = it == predictions.end() ? kNone : it->second;

    std::size_t hits = 0;
    for (const auto& id : pred) hits += relevant.contains(id) ? 1 : 0;
    QueryScores s;
    s.precision = pred.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred.size());
    s.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
    report.per_query[q] = s;
    report.return_count += pred.size();
    report.retrieved_count += hits;
    p_sum += s.precision;
    r_sum += s.recall;
  }
  const auto n = static_cast<double>(gold.size());
  report.macro_precision = p_sum / n;
  report.macro_recall = r_sum / n;
  report.f2 = f2_from_macro(report.macro_precision, report.macro_recall);
  return report;
}

inline double evaluate_accuracy(const std::map<std::string, bool>& predictions,
                                const std::map<std::string, bool>& gold) {
  if (predictions.size() != gold.size()) throw Error("metrics", "prediction and gold key sets differ");
  if (gold.empty()) throw Error("metrics", "no labels to score");
  std::size_t correct = 0;
  for (const auto& [id, label] : gold) {
    auto it = predictions.find(id);
    if (it == predictions.end()) throw Error("metrics", "no prediction for '" + id + "'");
    correct += it->second == label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [q, s] : r.per_query) per[q] = {{"precision", s.precision}, {"recall", s.recall}};
  return {{"return", r.return_count},
          {"retrieved", r.retrieved_count},
          {"precision", r.macro_precision},
          {"recall", r.macro_recall},
          {"f2", r.f2},
          {"per_query", std::move(per)}};
}

/// One-row text table: Return / Retrieved / P / R / F2, rates in percent.
inline std::string format_report_table(const EvalReport& r, const std::string& label = "run") {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %8s %10s %8s %8s %8s\n", "Setting", "Return", "Retrieved",
                "P", "R", "F2");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %8zu %10zu %8.2f %8.2f %8.2f\n", label.c_str(),
                r.return_count, r.retrieved_count, 100.0 * r.macro_precision,
                100.0 * r.macro_recall, 100.0 * r.f2);
  out += buf;
  return out;
}

}  // namespace legalir
