#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "legalir/error.hpp"
#include "legalir/stopwords_data.hpp"
#include "legalir/tokenizer.hpp"
#include "legalir/utf8.hpp"

namespace legalir {

enum class SourceKind { case_law, statute_article, bar_question };

inline std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::case_law: return "case_law";
    case SourceKind::statute_article: return "statute_article";
    case SourceKind::bar_question: return "bar_question";
  }
  return "case_law";
}

inline std::optional<SourceKind> parse_source_kind(std::string_view s) {
  if (s == "case_law") return SourceKind::case_law;
  if (s == "statute_article") return SourceKind::statute_article;
  if (s == "bar_question") return SourceKind::bar_question;
  return std::nullopt;
}

struct Paragraph {
  std::size_t index = 0;
  std::string text;
  std::vector<std::string> sentences;
  bool kept = true;  // false when dropped by the language filter
};

struct CaseDocument {
  std::string id;
  std::vector<Paragraph> paragraphs;
  SourceKind source_kind = SourceKind::case_law;

  std::size_t kept_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) n += p.kept ? 1 : 0;
    return n;
  }

  std::vector<const Paragraph*> kept_paragraphs() const {
    std::vector<const Paragraph*> out;
    for (const auto& p : paragraphs)
      if (p.kept) out.push_back(&p);
    return out;
  }

  /// Kept paragraphs joined by newlines; the whole-document view used for
  /// pruning and for article-level tf-idf.
  std::string kept_text() const {
    std::string out;
    for (const auto& p : paragraphs) {
      if (!p.kept) continue;
      if (!out.empty()) out.push_back('\n');
      out += p.text;
    }
    return out;
  }
};

struct AlignedBitext {
  std::string doc_id;
  std::string lang_a;
  std::string lang_b;
  std::vector<std::pair<std::string, std::string>> pairs;
};

// ---------------------------------------------------------------------------
// Paragraph segmentation

namespace detail {

/// True if `line` starts with a `[<digits>]` marker after leading blanks.
inline bool starts_with_paragraph_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= line.size() || line[i] != '[') return false;
  ++i;
  const std::size_t digits_begin = i;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  return i > digits_begin && i < line.size() && line[i] == ']';
}

inline bool is_blank(std::string_view line) {
  return utf8::trim(line).empty();
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace detail

/// Splits raw document text into paragraphs.
///
/// Lines starting with a bracketed number (`[12] ...`) open a new paragraph
/// and the marker stays in the paragraph text; any text before the first
/// marker becomes its own paragraph. Texts without markers are split on
/// runs of blank lines. Paragraph texts are trimmed and empty ones dropped.
/// Sentences are left empty; see `segment_document`.
inline std::vector<Paragraph> segment_paragraphs(std::string_view raw_text) {
  if (utf8::trim(raw_text).empty()) {
    throw Error("corpus", "cannot segment empty text");
  }
  const auto lines = detail::split_lines(raw_text);
  bool has_markers = false;
  for (auto line : lines) {
    if (detail::starts_with_paragraph_marker(line)) {
      has_markers = true;
      break;
    }
  }

  std::vector<Paragraph> out;
  std::string current;
  auto flush = [&] {
    auto t = utf8::trim(current);
    if (!t.empty()) {
      Paragraph p;
      p.index = out.size();
      p.text = std::string(t);
      out.push_back(std::move(p));
    }
    current.clear();
  };

  for (auto line : lines) {
    const bool boundary = has_markers
                              ? detail::starts_with_paragraph_marker(line)
                              : detail::is_blank(line);
    if (boundary) {
      flush();
      if (has_markers) current.append(line);
      continue;
    }
    if (!current.empty()) current.push_back('\n');
    current.append(line);
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

class SentenceSplitter {
 public:
  virtual ~SentenceSplitter() = default;
  virtual std::vector<std::string> split(std::string_view text) const = 0;
};

/// Rule-based splitter: breaks after `.`, `?` or `!` when followed by
/// whitespace and an uppercase letter, or by the end of the text. A fixed
/// abbreviation list ("No.", "v.", "Mr.", "art.", ...) suppresses breaks.
/// Fullwidth terminators (。？！) always end a sentence.
class RuleSentenceSplitter final : public SentenceSplitter {
 public:
  RuleSentenceSplitter()
      : abbreviations_{"No",  "no",   "Nos",  "v",    "vs",  "Mr",   "Mrs",
                       "Ms",  "Dr",   "Prof", "art",  "Art", "arts", "Arts",
                       "s",   "ss",   "para", "paras", "p",  "pp",   "e.g",
                       "i.e", "cf",   "St",   "J",    "JJ",  "CJ",   "Inc",
                       "Ltd", "Co",   "Corp", "Fig",  "fig", "Sec",  "sec",
                       "Vol", "vol",  "ch",   "Ch",   "ibid", "Reg", "Cst",
                       "al",  "Hon",  "approx"} {}

  explicit RuleSentenceSplitter(std::unordered_set<std::string> abbreviations)
      : abbreviations_(std::move(abbreviations)) {}

  std::vector<std::string> split(std::string_view text) const override {
    std::vector<std::string> out;
    std::size_t sentence_begin = 0;

    auto emit = [&](std::size_t end) {
      auto s = utf8::trim(text.substr(sentence_begin, end - sentence_begin));
      if (!s.empty()) out.emplace_back(s);
      sentence_begin = end;
    };

    for (std::size_t i = 0; i < text.size();) {
      const auto d = utf8::decode(text, i);
      const std::size_t after = i + d.length;

      if (d.cp == 0x3002 || d.cp == 0xFF1F || d.cp == 0xFF01) {
        const bool run_continues =
            after < text.size() && is_terminator(utf8::decode(text, after).cp);
        if (!run_continues) emit(after);
      } else if (d.cp == '.' || d.cp == '?' || d.cp == '!') {
        if (breaks_after(text, i, after)) emit(after);
      }
      i = after;
    }
    emit(text.size());
    return out;
  }

 private:
  static bool is_terminator(char32_t cp) {
    return cp == '.' || cp == '?' || cp == '!' || cp == 0x3002 ||
           cp == 0xFF1F || cp == 0xFF01;
  }

  bool breaks_after(std::string_view text, std::size_t term,
                    std::size_t after) const {
    std::size_t j = after;
    bool saw_space = false;
    while (j < text.size()) {
      const auto d = utf8::decode(text, j);
      if (!utf8::is_space(d.cp)) break;
      saw_space = true;
      j += d.length;
    }
    if (j < text.size()) {
      if (!saw_space) return false;
      if (!utf8::is_upper(utf8::decode(text, j).cp)) return false;
    }
    return text[term] != '.' || !is_abbreviation(text, term);
  }

  bool is_abbreviation(std::string_view text, std::size_t dot) const {
    std::size_t b = dot;
    while (b > 0) {
      const char c = text[b - 1];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') break;
      --b;
    }
    auto word = text.substr(b, dot - b);
    while (!word.empty() && (word.front() == '(' || word.front() == '"' ||
                             word.front() == '\'' || word.front() == '[')) {
      word.remove_prefix(1);
    }
    return !word.empty() && abbreviations_.contains(std::string(word));
  }

  std::unordered_set<std::string> abbreviations_;
};

inline std::vector<std::string> segment_sentences(std::string_view paragraph_text) {
  static const RuleSentenceSplitter splitter;
  return splitter.split(paragraph_text);
}

// ---------------------------------------------------------------------------
// Language filter

class Stoplist {
 public:
  Stoplist() = default;

  /// One word per line; blank lines and `#` comments ignored.
  static Stoplist parse(std::string_view data) {
    Stoplist s;
    for (auto line : detail::split_lines(data)) {
      auto w = utf8::trim(line);
      if (w.empty() || w.front() == '#') continue;
      s.words_.insert(std::string(w));
    }
    return s;
  }

  static Stoplist load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("corpus", "cannot open stoplist '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(in)), {});
    return parse(data);
  }

  bool contains(const std::string& token) const { return words_.contains(token); }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

inline const Stoplist& english_stoplist() {
  static const Stoplist s = Stoplist::parse(detail::kEnglishStopwords);
  return s;
}

inline const Stoplist& french_stoplist() {
  static const Stoplist s = Stoplist::parse(detail::kFrenchStopwords);
  return s;
}

struct LangFilterConfig {
  double min_ratio = 0.05;
};

struct StopwordRatios {
  double english = 0.0;
  double french = 0.0;
};

inline StopwordRatios stopword_ratios(std::string_view text,
                                      const Stoplist& english = english_stoplist(),
                                      const Stoplist& french = french_stoplist()) {
  const auto tokens = tokenize(text, TokenizerConfig{});
  if (tokens.empty()) return {};
  std::size_t en = 0;
  std::size_t fr = 0;
  for (const auto& t : tokens) {
    en += english.contains(t) ? 1 : 0;
    fr += french.contains(t) ? 1 : 0;
  }
  const auto n = static_cast<double>(tokens.size());
  return {static_cast<double>(en) / n, static_cast<double>(fr) / n};
}

/// Marks a paragraph as dropped when French stopwords outnumber English ones
/// and reach `config.min_ratio` of its tokens.
inline Paragraph filter_language(Paragraph paragraph, const LangFilterConfig& config = {}) {
  const auto r = stopword_ratios(paragraph.text);
  paragraph.kept = !(r.french > r.english && r.french >= config.min_ratio);
  return paragraph;
}

// ---------------------------------------------------------------------------
// Documents and the store

struct IngestOptions {
  LangFilterConfig lang_filter;
  bool apply_language_filter = true;
};

/// Segments paragraphs (unless given), splits sentences and applies the
/// language filter.
inline CaseDocument make_document(std::string id, SourceKind kind,
                                  std::vector<Paragraph> paragraphs,
                                  const IngestOptions& options = {}) {
  CaseDocument doc;
  doc.id = std::move(id);
  doc.source_kind = kind;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    auto& p = paragraphs[i];
    p.index = i;
    p.sentences = segment_sentences(p.text);
    if (options.apply_language_filter) p = filter_language(std::move(p), options.lang_filter);
  }
  doc.paragraphs = std::move(paragraphs);
  return doc;
}

inline CaseDocument make_document(std::string id, SourceKind kind, std::string_view raw_text,
                                  const IngestOptions& options = {}) {
  return make_document(std::move(id), kind, segment_paragraphs(raw_text), options);
}

/// Immutable-after-build document collection with id lookup. Iteration
/// order is insertion order.
class CorpusStore {
 public:
  CorpusStore() = default;
  explicit CorpusStore(std::vector<CaseDocument> docs) {
    for (auto& d : docs) add(std::move(d));
  }

  void add(CaseDocument doc) {
    if (by_id_.contains(doc.id)) throw Error("corpus", "duplicate document id '" + doc.id + "'");
    by_id_.emplace(doc.id, docs_.size());
    docs_.push_back(std::move(doc));
  }

  const CaseDocument* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &docs_[it->second];
  }

  const CaseDocument& at(const std::string& id) const {
    if (const auto* d = find(id)) return *d;
    throw Error("corpus", "unknown document id '" + id + "'");
  }

  bool contains(const std::string& id) const { return by_id_.contains(id); }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<CaseDocument>& documents() const { return docs_; }
  auto begin() const { return docs_.begin(); }
  auto end() const { return docs_.end(); }

 private:
  std::vector<CaseDocument> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// ---------------------------------------------------------------------------
// JSONL ingestion

namespace detail {

[[noreturn]] inline void fail_at(std::size_t line, const std::string& what) {
  throw Error("corpus", "line " + std::to_string(line) + ": " + what);
}

inline const std::string& require_string(const nlohmann::json& rec, const char* key,
                                         std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) fail_at(line, std::string("missing \"") + key + "\"");
  if (!it->is_string()) fail_at(line, std::string("\"") + key + "\" must be a string");
  return it->get_ref<const std::string&>();
}

}  // namespace detail

/// Reads corpus JSONL: {"id","kind","text"} or the pre-segmented form
/// {"id","kind","paragraphs":[...]} whose entries are strings or objects
/// with a "text" field. Records without "kind" take `default_kind`; when
/// `default_kind` is set, a record of a different kind is an error. Blank
/// lines are skipped.
inline std::vector<CaseDocument> ingest(std::istream& in,
                                        std::optional<SourceKind> default_kind = std::nullopt,
                                        const IngestOptions& options = {}) {
  std::vector<CaseDocument> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (utf8::trim(line).empty()) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      detail::fail_at(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) detail::fail_at(lineno, "record is not an object");

    const std::string& id = detail::require_string(rec, "id", lineno);
    if (id.empty()) detail::fail_at(lineno, "empty \"id\"");
    if (!seen.insert(id).second) detail::fail_at(lineno, "duplicate id '" + id + "'");

    std::optional<SourceKind> kind;
    if (auto it = rec.find("kind"); it != rec.end()) {
      if (!it->is_string()) detail::fail_at(lineno, "\"kind\" must be a string");
      kind = parse_source_kind(it->get_ref<const std::string&>());
      if (!kind) detail::fail_at(lineno, "unknown kind '" + it->get<std::string>() + "'");
      if (default_kind && *kind != *default_kind) {
        detail::fail_at(lineno, "kind '" + std::string(to_string(*kind)) + "' but expected '" +
                                    std::string(to_string(*default_kind)) + "'");
      }
    } else if (default_kind) {
      kind = default_kind;
    } else {
      detail::fail_at(lineno, "missing \"kind\"");
    }

    std::vector<Paragraph> paragraphs;
    if (auto it = rec.find("paragraphs"); it != rec.end()) {
      if (!it->is_array()) detail::fail_at(lineno, "\"paragraphs\" must be an array");
      for (const auto& entry : *it) {
        const nlohmann::json* text = &entry;
        if (entry.is_object()) {
          auto t = entry.find("text");
          if (t == entry.end()) detail::fail_at(lineno, "paragraph object without \"text\"");
          text = &*t;
        }
        if (!text->is_string()) detail::fail_at(lineno, "paragraph text must be a string");
        auto trimmed = utf8::trim(text->get_ref<const std::string&>());
        if (trimmed.empty()) detail::fail_at(lineno, "empty paragraph");
        Paragraph p;
        p.text = std::string(trimmed);
        paragraphs.push_back(std::move(p));
      }
      if (paragraphs.empty()) detail::fail_at(lineno, "no paragraphs");
    } else {
      const std::string& text = detail::require_string(rec, "text", lineno);
      if (utf8::trim(text).empty()) detail::fail_at(lineno, "empty \"text\"");
      paragraphs = segment_paragraphs(text);
    }
    out.push_back(make_document(id, *kind, std::move(paragraphs), options));
  }
  return out;
}

inline std::vector<CaseDocument> ingest(const std::string& path,
                                        std::optional<SourceKind> default_kind = std::nullopt,
                                        const IngestOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error("corpus", "cannot open '" + path + "'");
  try {
    return ingest(in, default_kind, options);
  } catch (const Error& e) {
    throw Error("corpus", path + ": " + e.what());
  }
}

/// Normalized store record: paragraphs with sentences and the kept flag.
inline nlohmann::ordered_json to_json(const CaseDocument& doc) {
  nlohmann::ordered_json paragraphs = nlohmann::ordered_json::array();
  for (const auto& p : doc.paragraphs) {
    paragraphs.push_back({{"index", p.index},
                          {"text", p.text},
                          {"sentences", p.sentences},
                          {"kept", p.kept}});
  }
  return {{"id", doc.id}, {"kind", std::string(to_string(doc.source_kind))},
          {"paragraphs", std::move(paragraphs)}};
}

/// Reads bitext JSONL: {"doc_id","lang_a","lang_b","pairs":[[a,b],...]}.
inline std::vector<AlignedBitext> ingest_bitext(std::istream& in) {
  std::vector<AlignedBitext> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (utf8::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      detail::fail_at(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) detail::fail_at(lineno, "record is not an object");
    AlignedBitext b;
    b.doc_id = detail::require_string(rec, "doc_id", lineno);
    b.lang_a = detail::require_string(rec, "lang_a", lineno);
    b.lang_b = detail::require_string(rec, "lang_b", lineno);
    if (b.lang_a == b.lang_b) detail::fail_at(lineno, "lang_a equals lang_b");
    auto it = rec.find("pairs");
    if (it == rec.end() || !it->is_array()) detail::fail_at(lineno, "\"pairs\" must be an array");
    for (const auto& pair : *it) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        detail::fail_at(lineno, "each pair must be [string, string]");
      }
      std::string a(utf8::trim(pair[0].get_ref<const std::string&>()));
      std::string c(utf8::trim(pair[1].get_ref<const std::string&>()));
      if (a.empty() || c.empty()) detail::fail_at(lineno, "empty sentence in pair");
      b.pairs.emplace_back(std::move(a), std::move(c));
    }
    if (b.pairs.empty()) detail::fail_at(lineno, "no pairs");
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<AlignedBitext> ingest_bitext(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("corpus", "cannot open '" + path + "'");
  return ingest_bitext(in);
}

}  // namespace legalir
