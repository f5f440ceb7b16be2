#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "legalir/error.hpp"
#include "legalir/utf8.hpp"

namespace legalir {

/// query id -> relevant ids, in file order without duplicates.
using GoldLabels = std::map<std::string, std::vector<std::string>>;

/// Reads gold JSONL: {"query_id": string, "relevant_ids": [string, ...]}.
inline GoldLabels read_gold(std::istream& in) {
  GoldLabels gold;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (utf8::trim(line).empty()) continue;
    const auto where = "gold line " + std::to_string(lineno) + ": ";
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("metrics", where + "malformed JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("query_id") || !rec["query_id"].is_string()) {
      throw Error("metrics", where + "missing string \"query_id\"");
    }
    if (!rec.contains("relevant_ids") || !rec["relevant_ids"].is_array()) {
      throw Error("metrics", where + "missing array \"relevant_ids\"");
    }
    const auto qid = rec["query_id"].get<std::string>();
    if (gold.contains(qid)) throw Error("metrics", where + "duplicate query '" + qid + "'");
    auto& ids = gold[qid];
    for (const auto& r : rec["relevant_ids"]) {
      if (!r.is_string()) throw Error("metrics", where + "relevant ids must be strings");
      auto id = r.get<std::string>();
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(std::move(id));
    }
  }
  return gold;
}

inline GoldLabels read_gold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("metrics", "cannot open '" + path + "'");
  return read_gold(in);
}

}  // namespace legalir
