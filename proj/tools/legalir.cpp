// Batch command-line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "legalir/legalir.hpp"

namespace {

using legalir::Error;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kFormats = R"(File formats (JSONL = one JSON object per line):
  corpus      {"id","kind":"case_law"|"statute_article"|"bar_question","text"}
              or {"id","kind","paragraphs":[string,...]}
  gold        {"query_id","relevant_ids":[string,...]}
  bitext      {"doc_id","lang_a","lang_b","pairs":[[string,string],...]}
  pool        {"lang","sentence"}        random sentences for paralaw
  run         {"query_id","candidate_id","rank","score"}   (retrieve output)
  chunks      {"article_id","start","text"}
  pairs       {"query_id","passage_id","query","passage","label":"pos"|"neg","origin"}
  paralaw     {"first","second","lang_first","lang_second","nfsp":0|1|null,"nmsp":0|1|2}
  outputs     {"model_id","query_id","candidate_id","score"}   (ensemble input)
  weights     JSON object {model_id: weight}
  labels      {"id","label":true|false}  (eval --accuracy)
  index       {"tokenizer":{...},"index":{"format","version","units","postings"}}
Any subcommand accepts --config FILE.json whose keys are long flag names
(e.g. {"alpha":0.7,"prune-k":100}); flags given on the command line win.
Scorer plugins (--scorer-command) read {"id","a","b"} lines on stdin and
write {"id","score"} lines on stdout; EOF on stdin means shut down.)";

// ---------------------------------------------------------------------------
// Output helpers

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error("cli", "cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void line(const ordered_json& j) { stream() << j.dump() << '\n'; }

 private:
  std::ofstream file_;
};

void write_json_file(const std::string& path, const ordered_json& j) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

std::string meta_path(const std::string& out) { return out + ".meta.json"; }

void log(const std::string& msg) { std::cerr << "legalir: " << msg << '\n'; }

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cli", "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("cli", path + ": " + e.what());
  }
}

template <typename Fn>
void for_each_jsonl(const std::string& path, const std::string& module, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(module, "cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (legalir::utf8::trim(line).empty()) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(module, path + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.module(), path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Shared option groups

struct Common {
  std::size_t jobs = 1;
  std::string tokenizer = "unicode_word";
  bool no_lowercase = false;

  legalir::TokenizerConfig tokenizer_config() const {
    return {legalir::parse_tokenizer_mode(tokenizer), !no_lowercase};
  }
};

void add_common(CLI::App* sub, Common& c, bool with_tokenizer = true) {
  sub->add_option("--jobs", c.jobs, "Worker threads; output is identical for any value")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  if (with_tokenizer) {
    sub->add_option("--tokenizer", c.tokenizer, "Token unit: unicode_word or character")
        ->capture_default_str()
        ->check(CLI::IsMember({"unicode_word", "character"}));
    sub->add_flag("--no-lowercase", c.no_lowercase, "Keep token case");
  }
}

std::unique_ptr<legalir::SemanticScorer> make_external_scorer(const std::string& command,
                                                              long timeout_ms) {
  legalir::SubprocessScorerOptions opts;
  opts.timeout = std::chrono::milliseconds(timeout_ms);
  return std::make_unique<legalir::SubprocessScorer>(command, opts);
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const char* command) {
  if (!seed) throw Error("cli", std::string(command) + " is stochastic and requires --seed");
  return *seed;
}

// ---------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
  Common common;
  std::string corpus, kind, out = "-";
  double min_ratio = 0.05;
  bool no_filter = false;
};

legalir::IngestOptions ingest_options(double min_ratio, bool no_filter) {
  legalir::IngestOptions o;
  o.lang_filter.min_ratio = min_ratio;
  o.apply_language_filter = !no_filter;
  return o;
}

std::optional<legalir::SourceKind> kind_arg(const std::string& kind) {
  if (kind.empty()) return std::nullopt;
  auto k = legalir::parse_source_kind(kind);
  if (!k) throw Error("cli", "unknown kind '" + kind + "'");
  return k;
}

int run_ingest(const IngestArgs& a) {
  const auto docs = legalir::ingest(a.corpus, kind_arg(a.kind), ingest_options(a.min_ratio, a.no_filter));
  Output out(a.out);
  std::size_t paragraphs = 0, kept = 0;
  for (const auto& d : docs) {
    out.line(legalir::to_json(d));
    paragraphs += d.paragraphs.size();
    kept += d.kept_count();
  }
  log("ingested " + std::to_string(docs.size()) + " documents, " + std::to_string(paragraphs) +
      " paragraphs (" + std::to_string(kept) + " kept)");
  return 0;
}

struct IndexArgs {
  Common common;
  std::string corpus, kind, out = "-";
};

ordered_json tokenizer_json(const legalir::TokenizerConfig& t) {
  return {{"mode", std::string(legalir::to_string(t.mode))}, {"lowercase", t.lowercase}};
}

int run_index(const IndexArgs& a) {
  const legalir::CorpusStore store(legalir::ingest(a.corpus, kind_arg(a.kind)));
  const legalir::Retriever retriever(store, a.common.tokenizer_config());
  write_json_file(a.out, {{"tokenizer", tokenizer_json(retriever.tokenizer())},
                          {"index", retriever.case_index().to_json()}});
  log("indexed " + std::to_string(retriever.case_index().unit_count()) + " cases");
  return 0;
}

struct RetrieveArgs {
  Common common;
  std::string corpus, queries, out = "-", index, scorer_command, lexical_norm = "per_matrix_minmax";
  double alpha = 0.7, threshold = 0.0, k1 = 1.5, b = 0.75;
  std::size_t prune_k = 100, top_n = 5;
  long scorer_timeout_ms = 30000;
};

int run_retrieve(const RetrieveArgs& a) {
  const auto tok = a.common.tokenizer_config();
  const legalir::CorpusStore corpus(legalir::ingest(a.corpus));
  const auto queries = legalir::ingest(a.queries);

  std::optional<legalir::Retriever> retriever;
  if (!a.index.empty()) {
    const auto snap = read_json_file(a.index);
    const auto& t = snap.at("tokenizer");
    if (t.at("mode").get<std::string>() != legalir::to_string(tok.mode) ||
        t.at("lowercase").get<bool>() != tok.lowercase) {
      throw Error("cli", "index snapshot was built with a different tokenizer");
    }
    retriever.emplace(corpus, legalir::InvertedIndex::from_json(snap.at("index")), tok);
  } else {
    retriever.emplace(corpus, tok);
  }

  legalir::RetrieveConfig cfg;
  cfg.prune_k = a.prune_k;
  cfg.top_n = a.top_n;
  cfg.relative_threshold = a.threshold;
  cfg.fusion.alpha = a.alpha;
  cfg.fusion.lexical_normalization = legalir::parse_lexical_normalization(a.lexical_norm);
  cfg.bm25 = {a.k1, a.b};
  cfg.jobs = a.common.jobs;
  cfg.validate();

  auto scorer = a.scorer_command.empty() ? retriever->baseline_scorer()
                                         : make_external_scorer(a.scorer_command, a.scorer_timeout_ms);
  Output out(a.out);
  for (const auto& q : queries) {
    const auto ranked = retriever->retrieve(q, cfg, *scorer);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      out.line({{"query_id", q.id}, {"candidate_id", ranked[r].id}, {"rank", r + 1},
                {"score", ranked[r].score}});
    }
  }
  log("retrieved for " + std::to_string(queries.size()) + " queries");
  return 0;
}

struct ChunkArgs {
  Common common;
  std::string articles, out = "-";
  std::size_t window = 150, stride = 50;
};

int run_chunk(const ChunkArgs& a) {
  const legalir::ChunkConfig cfg{a.window, a.stride};
  cfg.validate();
  const auto docs = legalir::ingest(a.articles);
  const auto tok = a.common.tokenizer_config();

  std::vector<std::vector<legalir::Chunk>> chunks(docs.size());
  legalir::parallel_for(docs.size(), a.common.jobs, [&](std::size_t i) {
    chunks[i] = legalir::chunk_text(docs[i].kept_text(), docs[i].id, cfg, tok);
  });
  Output out(a.out);
  std::size_t n = 0;
  for (const auto& per_doc : chunks) {
    for (const auto& c : per_doc) {
      out.line({{"article_id", c.article_id}, {"start", c.start}, {"text", c.text}});
      ++n;
    }
  }
  log("wrote " + std::to_string(n) + " chunks (" + std::to_string(a.window) + "/" +
      std::to_string(a.stride) + ")");
  return 0;
}

struct GenPairsArgs {
  Common common;
  std::string mode = "retrieval", questions, gold, articles, corpus, out = "-";
  std::size_t neg_cap = 150, n_augment = 0, window = 0, stride = 0, ratio_neg = 1;
  std::optional<std::uint64_t> seed;
};

int run_gen_pairs(const GenPairsArgs& a) {
  std::vector<legalir::LabeledPair> pairs;
  if (a.mode == "silver") {
    if (a.corpus.empty()) throw Error("cli", "gen-pairs --mode silver requires --corpus");
    const legalir::CorpusStore corpus(legalir::ingest(a.corpus));
    legalir::SilverOptions opts{a.ratio_neg, require_seed(a.seed, "gen-pairs --mode silver")};
    pairs = legalir::generate_silver_supporting(corpus, opts);
    if (a.out != "-") write_json_file(meta_path(a.out), legalir::silver_metadata(opts));
  } else {
    if (a.questions.empty() || a.gold.empty() || a.articles.empty()) {
      throw Error("cli", "gen-pairs --mode retrieval requires --questions, --gold and --articles");
    }
    const auto tok = a.common.tokenizer_config();
    const legalir::CorpusStore questions_store(legalir::ingest(a.questions));
    const legalir::CorpusStore articles(legalir::ingest(a.articles));
    auto gold = legalir::read_gold(a.gold);
    const auto questions = legalir::questions_from(questions_store);

    if (a.n_augment > 0) {
      const legalir::ArticleTfidf tfidf(articles, tok);
      for (const auto& q : questions) {
        auto it = gold.find(q.id);
        if (it == gold.end()) continue;
        it->second = legalir::augment_articles(q.text, it->second, tfidf, a.n_augment);
      }
    }
    legalir::RetrievalPairOptions opts;
    opts.neg_cap = a.neg_cap;
    opts.tokenizer = tok;
    if (a.window > 0) opts.chunking = legalir::ChunkConfig{a.window, a.stride == 0 ? a.window : a.stride};
    pairs = legalir::generate_retrieval_pairs(questions, gold, articles, opts);
  }
  legalir::require_unique_keys(pairs);
  Output out(a.out);
  std::size_t pos = 0;
  for (const auto& p : pairs) {
    out.line(legalir::to_json(p));
    pos += p.label == legalir::Label::positive ? 1 : 0;
  }
  log("wrote " + std::to_string(pairs.size()) + " pairs (" + std::to_string(pos) + " positive)");
  return 0;
}

struct SelfLabelArgs {
  Common common;
  std::string pairs, out = "-", scorer_command;
  double threshold = 0.5;
  std::size_t iterations = 1, e1 = 2, e2 = 3;
  long scorer_timeout_ms = 30000;
};

int run_self_label(const SelfLabelArgs& a) {
  std::vector<legalir::LabeledPair> data;
  for_each_jsonl(a.pairs, "trainpairs",
                 [&](const nlohmann::json& j) { data.push_back(legalir::labeled_pair_from_json(j)); });
  legalir::require_unique_keys(data);

  std::unique_ptr<legalir::SemanticScorer> predictor;
  if (a.scorer_command.empty()) {
    // Baseline predictor: tf-idf cosine over the distinct passages.
    std::map<std::string, std::vector<std::string>> passages;
    for (const auto& p : data) {
      passages.try_emplace(p.passage_id, legalir::tokenize(p.passage_text, a.common.tokenizer_config()));
    }
    std::vector<legalir::InvertedIndex::Unit> units(passages.begin(), passages.end());
    if (units.empty()) throw Error("cli", "pair dataset is empty");
    predictor = std::make_unique<legalir::TfidfCosineScorer>(
        std::make_shared<legalir::InvertedIndex>(legalir::InvertedIndex::build(std::move(units))),
        a.common.tokenizer_config());
  } else {
    predictor = make_external_scorer(a.scorer_command, a.scorer_timeout_ms);
  }

  legalir::SelfLabelConfig cfg{a.e1, a.e2, a.threshold, a.iterations};
  const auto result = legalir::self_label_refine(std::move(data), *predictor, cfg, a.common.jobs);
  Output out(a.out);
  for (const auto& p : result.pairs) out.line(legalir::to_json(p));
  if (a.out != "-") {
    write_json_file(meta_path(a.out), {{"e1", cfg.e1}, {"e2", cfg.e2}, {"threshold", cfg.threshold},
                                       {"iterations", cfg.iterations},
                                       {"flips_per_iteration", result.flips_per_iteration},
                                       {"positives_after_iteration", result.positives_after_iteration}});
  }
  std::size_t flips = 0;
  for (auto f : result.flips_per_iteration) flips += f;
  log("flipped " + std::to_string(flips) + " positive pairs to negative");
  return 0;
}

struct ParalawArgs {
  Common common;
  std::string bitext, pool, out = "-", train_out, valid_out;
  std::optional<std::uint64_t> seed;
  std::size_t passes = 1;
  double split_ratio = 0.9;
};

int run_paralaw(const ParalawArgs& a) {
  const auto seed = require_seed(a.seed, "paralaw");
  const auto docs = legalir::ingest_bitext(a.bitext);
  legalir::SentencePools pools;
  for_each_jsonl(a.pool, "paralaw", [&](const nlohmann::json& j) {
    pools[j.at("lang").get<std::string>()].push_back(j.at("sentence").get<std::string>());
  });

  legalir::ParalawOptions opts{seed, a.passes};
  auto examples = legalir::generate_examples(docs, pools, opts, a.common.jobs);
  {
    Output out(a.out);
    for (const auto& e : examples) out.line(legalir::to_json(e));
  }
  if (!a.train_out.empty() || !a.valid_out.empty()) {
    if (a.train_out.empty() || a.valid_out.empty()) {
      throw Error("cli", "--train-out and --valid-out must be given together");
    }
    const auto n = examples.size();
    auto [train, valid] = legalir::split_dataset(std::move(examples), a.split_ratio, seed);
    Output t(a.train_out);
    for (const auto& e : train) t.line(legalir::to_json(e));
    Output v(a.valid_out);
    for (const auto& e : valid) v.line(legalir::to_json(e));
    log("split " + std::to_string(n) + " examples into " + std::to_string(train.size()) + "/" +
        std::to_string(valid.size()));
  }
  return 0;
}

struct EnsembleArgs {
  Common common;
  std::string outputs, weights, gold, weights_out, out = "-";
  bool fit = false;
  double grid_step = 0.1, min_score = 0.5;
  std::size_t top_n = 0;
};

int run_ensemble(const EnsembleArgs& a) {
  const auto runs = legalir::read_model_outputs(a.outputs);
  legalir::EnsembleWeights weights;
  if (a.fit) {
    if (a.gold.empty()) throw Error("cli", "ensemble --fit requires --gold");
    legalir::FitOptions opts;
    opts.grid_step = a.grid_step;
    opts.selection = {a.top_n, a.min_score};
    opts.jobs = a.common.jobs;
    const auto fit = legalir::fit_weights(runs, legalir::to_sets(legalir::read_gold(a.gold)), opts);
    weights = fit.weights;
    log("fitted weights, dev F2 = " + std::to_string(fit.objective));
  } else {
    if (a.weights.empty()) throw Error("cli", "ensemble needs --weights or --fit");
    weights = legalir::weights_from_json(read_json_file(a.weights));
  }
  if (!a.weights_out.empty()) write_json_file(a.weights_out, legalir::to_json(weights));

  Output out(a.out);
  for (const auto& [q, scores] : legalir::combine_runs(runs, weights)) {
    for (const auto& [cand, v] : scores) {
      out.line({{"query_id", q}, {"candidate_id", cand}, {"score", v}});
    }
  }
  return 0;
}

struct EvalArgs {
  Common common;
  std::string predictions, gold, out, label = "run";
  bool accuracy = false, table = false;
};

int run_eval(const EvalArgs& a) {
  if (a.accuracy) {
    auto read_labels = [](const std::string& path) {
      std::map<std::string, bool> m;
      for_each_jsonl(path, "metrics", [&](const nlohmann::json& j) {
        if (!m.emplace(j.at("id").get<std::string>(), j.at("label").get<bool>()).second) {
          throw Error("metrics", "duplicate id");
        }
      });
      return m;
    };
    const auto pred = read_labels(a.predictions);
    const auto gold = read_labels(a.gold);
    const double acc = legalir::evaluate_accuracy(pred, gold);
    std::size_t correct = 0;
    for (const auto& [id, v] : gold) correct += pred.at(id) == v ? 1 : 0;
    const ordered_json report = {{"correct", correct}, {"total", gold.size()}, {"accuracy", acc}};
    if (!a.out.empty()) write_json_file(a.out, report);
    std::cout << report.dump() << '\n';
    return 0;
  }

  legalir::RelevanceSets predicted;
  for_each_jsonl(a.predictions, "metrics", [&](const nlohmann::json& j) {
    auto& set = predicted[j.at("query_id").get<std::string>()];
    if (j.contains("candidate_id")) set.insert(j["candidate_id"].get<std::string>());
    if (j.contains("relevant_ids")) {
      for (const auto& id : j["relevant_ids"]) set.insert(id.get<std::string>());
    }
  });
  const auto report = legalir::evaluate_retrieval(predicted, legalir::to_sets(legalir::read_gold(a.gold)));
  if (!a.out.empty()) write_json_file(a.out, legalir::to_json(report));
  if (a.table || a.out.empty()) std::cout << legalir::format_report_table(report, a.label);
  return 0;
}

// ---------------------------------------------------------------------------
// --config expansion

/// Rewrites argv so that values from `--config FILE` come right after the
/// subcommand; with take-last semantics, explicit flags later on win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty() || args.size() < 2) return args;

  const auto cfg = read_json_file(config_path);
  if (!cfg.is_object()) throw Error("cli", "config file must be a JSON object");
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      injected.push_back(flag);
      injected.push_back(value.dump());
    } else {
      throw Error("cli", "config key '" + key + "' must be a string, number or boolean");
    }
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void print_error(const std::string& module, const std::string& message) {
  const ordered_json j = {{"error", {{"module", module}, {"message", message}}}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"legalir: legal document retrieval and training-data pipeline"};
  app.footer(kFormats);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Segment a corpus and write the normalized store");
  s_ingest->add_option("--corpus", ingest.corpus, "Corpus JSONL")->required();
  s_ingest->add_option("--kind", ingest.kind, "Expected record kind (default: per record)");
  s_ingest->add_option("--out", ingest.out, "Output JSONL ('-' = stdout)")->capture_default_str();
  s_ingest->add_option("--min-french-ratio", ingest.min_ratio, "Language filter minimum ratio")
      ->capture_default_str();
  s_ingest->add_flag("--no-lang-filter", ingest.no_filter, "Keep every paragraph");
  add_common(s_ingest, ingest.common, false);

  IndexArgs index;
  auto* s_index = app.add_subcommand("index", "Build and snapshot the case-level inverted index");
  s_index->add_option("--corpus", index.corpus, "Corpus JSONL")->required();
  s_index->add_option("--kind", index.kind, "Expected record kind");
  s_index->add_option("--out", index.out, "Snapshot JSON ('-' = stdout)")->capture_default_str();
  add_common(s_index, index.common);

  RetrieveArgs retrieve;
  auto* s_retrieve = app.add_subcommand("retrieve", "Rank candidate cases for each query case");
  s_retrieve->add_option("--corpus", retrieve.corpus, "Candidate corpus JSONL")->required();
  s_retrieve->add_option("--queries", retrieve.queries, "Query cases JSONL")->required();
  s_retrieve->add_option("--out", retrieve.out, "Run JSONL ('-' = stdout)")->capture_default_str();
  s_retrieve->add_option("--index", retrieve.index, "Reuse an index snapshot for pruning");
  s_retrieve->add_option("--alpha", retrieve.alpha, "Semantic weight in the fused score")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  s_retrieve->add_option("--prune-k", retrieve.prune_k, "BM25 candidates kept before paragraph matching")
      ->capture_default_str();
  s_retrieve->add_option("--top-n", retrieve.top_n, "Answers per query")->capture_default_str();
  s_retrieve->add_option("--threshold", retrieve.threshold, "Keep answers >= threshold * best score (0 = off)")
      ->capture_default_str();
  s_retrieve->add_option("--k1", retrieve.k1, "BM25 k1")->capture_default_str();
  s_retrieve->add_option("--b", retrieve.b, "BM25 b")->capture_default_str();
  s_retrieve->add_option("--lexical-norm", retrieve.lexical_norm, "per_matrix_minmax or none")
      ->capture_default_str();
  s_retrieve->add_option("--scorer-command", retrieve.scorer_command,
                         "External semantic scorer (default: tf-idf cosine)");
  s_retrieve->add_option("--scorer-timeout-ms", retrieve.scorer_timeout_ms, "Scorer reply timeout")
      ->capture_default_str();
  add_common(s_retrieve, retrieve.common);

  ChunkArgs chunk;
  auto* s_chunk = app.add_subcommand("chunk", "Split articles into sliding-window chunks");
  s_chunk->add_option("--articles", chunk.articles, "Article corpus JSONL")->required();
  s_chunk->add_option("--window", chunk.window, "Window size in tokens")->capture_default_str();
  s_chunk->add_option("--stride", chunk.stride, "Stride in tokens")->capture_default_str();
  s_chunk->add_option("--out", chunk.out, "Chunks JSONL ('-' = stdout)")->capture_default_str();
  add_common(s_chunk, chunk.common);

  GenPairsArgs gen;
  auto* s_gen = app.add_subcommand("gen-pairs", "Generate labeled training pairs");
  s_gen->add_option("--mode", gen.mode, "retrieval or silver")
      ->capture_default_str()
      ->check(CLI::IsMember({"retrieval", "silver"}));
  s_gen->add_option("--questions", gen.questions, "Questions JSONL (retrieval mode)");
  s_gen->add_option("--gold", gen.gold, "Gold JSONL (retrieval mode)");
  s_gen->add_option("--articles", gen.articles, "Articles JSONL (retrieval mode)");
  s_gen->add_option("--corpus", gen.corpus, "Case corpus JSONL (silver mode)");
  s_gen->add_option("--neg-cap", gen.neg_cap, "Maximum negatives per question")->capture_default_str();
  s_gen->add_option("--n-augment", gen.n_augment, "Extra tf-idf articles per question (tf-idf<n>)")
      ->capture_default_str();
  s_gen->add_option("--window", gen.window, "Chunk window in tokens (0 = no chunking)")->capture_default_str();
  s_gen->add_option("--stride", gen.stride, "Chunk stride in tokens (0 = window)")->capture_default_str();
  s_gen->add_option("--ratio-neg", gen.ratio_neg, "Negatives per positive (silver mode)")->capture_default_str();
  s_gen->add_option("--seed", gen.seed, "Random seed (required for silver mode)");
  s_gen->add_option("--out", gen.out, "Pairs JSONL ('-' = stdout)")->capture_default_str();
  add_common(s_gen, gen.common);

  SelfLabelArgs self;
  auto* s_self = app.add_subcommand("self-label", "Flip low-scoring positive pairs to negative");
  s_self->add_option("--pairs", self.pairs, "Pairs JSONL")->required();
  s_self->add_option("--out", self.out, "Refined pairs JSONL ('-' = stdout)")->capture_default_str();
  s_self->add_option("--threshold", self.threshold, "Flip positives scoring below this")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  s_self->add_option("--iterations", self.iterations, "Refinement passes")->capture_default_str();
  s_self->add_option("--e1", self.e1, "Epochs before refinement (metadata)")->capture_default_str();
  s_self->add_option("--e2", self.e2, "Epochs after refinement (metadata)")->capture_default_str();
  s_self->add_option("--scorer-command", self.scorer_command, "External predictor (default: tf-idf cosine)");
  s_self->add_option("--scorer-timeout-ms", self.scorer_timeout_ms, "Scorer reply timeout")
      ->capture_default_str();
  add_common(s_self, self.common);

  ParalawArgs para;
  auto* s_para = app.add_subcommand("paralaw", "Generate NFSP/NMSP sentence-pair examples");
  s_para->add_option("--bitext", para.bitext, "Bitext JSONL")->required();
  s_para->add_option("--pool", para.pool, "Random sentence pool JSONL")->required();
  s_para->add_option("--seed", para.seed, "Random seed (required)");
  s_para->add_option("--passes", para.passes, "Repeat the example block per index")->capture_default_str();
  s_para->add_option("--out", para.out, "Examples JSONL ('-' = stdout)")->capture_default_str();
  s_para->add_option("--split-ratio", para.split_ratio, "Training share for --train-out/--valid-out")
      ->capture_default_str();
  s_para->add_option("--train-out", para.train_out, "Training split JSONL");
  s_para->add_option("--valid-out", para.valid_out, "Validation split JSONL");
  add_common(s_para, para.common, false);

  EnsembleArgs ens;
  auto* s_ens = app.add_subcommand("ensemble", "Combine model scores with min-max normalization");
  s_ens->add_option("--outputs", ens.outputs, "Model outputs JSONL")->required();
  s_ens->add_option("--weights", ens.weights, "Weights JSON");
  s_ens->add_flag("--fit", ens.fit, "Fit weights on a dev set by grid search");
  s_ens->add_option("--gold", ens.gold, "Dev gold JSONL (with --fit)");
  s_ens->add_option("--grid-step", ens.grid_step, "Weight grid step")->capture_default_str();
  s_ens->add_option("--min-score", ens.min_score, "Selection threshold used by --fit")->capture_default_str();
  s_ens->add_option("--top-n", ens.top_n, "Selection size limit used by --fit (0 = none)")->capture_default_str();
  s_ens->add_option("--weights-out", ens.weights_out, "Write the weights used");
  s_ens->add_option("--out", ens.out, "Combined scores JSONL ('-' = stdout)")->capture_default_str();
  add_common(s_ens, ens.common, false);

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "Macro precision/recall/F2 or accuracy");
  s_eval->add_option("--predictions", eval.predictions, "Run JSONL or {query_id, relevant_ids} JSONL")
      ->required();
  s_eval->add_option("--gold", eval.gold, "Gold JSONL")->required();
  s_eval->add_option("--out", eval.out, "Report JSON");
  s_eval->add_option("--label", eval.label, "Row label in the text table")->capture_default_str();
  s_eval->add_flag("--table", eval.table, "Print the text table");
  s_eval->add_flag("--accuracy", eval.accuracy, "Score {id,label} files by accuracy");
  add_common(s_eval, eval.common, false);

  try {
    auto args = expand_config(argc, argv);
    std::vector<char*> cargs;
    for (auto& s : args) cargs.push_back(s.data());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      print_error("cli", e.what());
      return 2;
    }

    if (s_ingest->parsed()) return run_ingest(ingest);
    if (s_index->parsed()) return run_index(index);
    if (s_retrieve->parsed()) return run_retrieve(retrieve);
    if (s_chunk->parsed()) return run_chunk(chunk);
    if (s_gen->parsed()) return run_gen_pairs(gen);
    if (s_self->parsed()) return run_self_label(self);
    if (s_para->parsed()) return run_paralaw(para);
    if (s_ens->parsed()) return run_ensemble(ens);
    if (s_eval->parsed()) return run_eval(eval);
  } catch (const Error& e) {
    print_error(e.module(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("cli", e.what());
    return 1;
  }
  return 1;
}
