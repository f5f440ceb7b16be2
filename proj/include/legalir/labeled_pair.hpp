#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "legalir/error.hpp"

namespace legalir {

enum class Label { positive, negative };

enum class PairOrigin { gold, derived_chunk, silver, self_flipped };

inline std::string_view to_string(Label l) { return l == Label::positive ? "pos" : "neg"; }

inline std::string_view to_string(PairOrigin o) {
  switch (o) {
    case PairOrigin::gold: return "gold";
    case PairOrigin::derived_chunk: return "derived_chunk";
    case PairOrigin::silver: return "silver";
    case PairOrigin::self_flipped: return "self_flipped";
  }
  return "gold";
}

inline Label parse_label(std::string_view s) {
  if (s == "pos") return Label::positive;
  if (s == "neg") return Label::negative;
  throw Error("trainpairs", "unknown label '" + std::string(s) + "'");
}

inline PairOrigin parse_origin(std::string_view s) {
  if (s == "gold") return PairOrigin::gold;
  if (s == "derived_chunk") return PairOrigin::derived_chunk;
  if (s == "silver") return PairOrigin::silver;
  if (s == "self_flipped") return PairOrigin::self_flipped;
  throw Error("trainpairs", "unknown origin '" + std::string(s) + "'");
}

struct LabeledPair {
  std::string query_id;
  std::string passage_id;
  std::string query_text;
  std::string passage_text;
  Label label = Label::negative;
  PairOrigin origin = PairOrigin::gold;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// Pair dataset record; field order is fixed.
inline nlohmann::ordered_json to_json(const LabeledPair& p) {
  return {{"query_id", p.query_id},     {"passage_id", p.passage_id},
          {"query", p.query_text},      {"passage", p.passage_text},
          {"label", to_string(p.label)}, {"origin", to_string(p.origin)}};
}

inline LabeledPair labeled_pair_from_json(const nlohmann::json& j) {
  try {
    LabeledPair p;
    p.query_id = j.at("query_id").get<std::string>();
    p.passage_id = j.at("passage_id").get<std::string>();
    p.query_text = j.at("query").get<std::string>();
    p.passage_text = j.at("passage").get<std::string>();
    p.label = parse_label(j.at("label").get<std::string>());
    p.origin = parse_origin(j.at("origin").get<std::string>());
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error("trainpairs", std::string("invalid pair record: ") + e.what());
  }
}

}  // namespace legalir
