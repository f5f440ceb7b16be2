// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "legalir/legalir.hpp"
#include "oracles.hpp"

using namespace legalir;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------
Check f2_reproduction() {
  struct Row {
    double p, r, f2;
  };
  const Row rows[] = {
      {68.24, 72.52, 71.62}, {61.20, 67.87, 66.42}, {64.77, 66.67, 66.28}, {68.09, 70.72, 70.18},
      {67.12, 71.17, 70.32}, {69.74, 73.42, 72.66}, {67.12, 72.97, 71.72}, {65.39, 67.57, 67.12},
      {69.74, 73.42, 72.66}, {68.02, 67.57, 67.66}, {66.89, 72.52, 71.32}, {68.77, 72.97, 72.09},
      {64.55, 72.52, 70.77}, {64.55, 72.52, 70.77}, {62.39, 76.13, 72.91}, {63.32, 68.92, 67.72},
      {64.37, 71.17, 69.70}, {60.02, 65.77, 64.53},
  };
  Check c;
  std::size_t i = 0;
  for (const auto& row : rows) {
    const double f2 = f2_from_macro(row.p / 100, row.r / 100);
    c.expect(std::abs(f2 - row.f2 / 100) <= 5e-4, "row " + std::to_string(i) + " gives " + std::to_string(f2));
    ++i;
  }
  c.detail = c.ok ? "18/18 rows within 5e-4" : c.detail;
  return c;
}

// 2 -------------------------------------------------------------------------
Check fusion_formula() {
  Check c;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double alphas[] = {0.0, 0.3, 0.7, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 8;
    ScoreMatrix lex("q", "c", n, m, ScoreChannel::lexical);
    ScoreMatrix sem("q", "c", n, m, ScoreChannel::semantic);
    for (auto& v : lex.values()) v = u(rng) * 20.0;
    for (auto& v : sem.values()) v = u(rng);
    double lo = lex.values()[0], hi = lo;
    for (double v : lex.values()) lo = std::min(lo, v), hi = std::max(hi, v);
    const double alpha = alphas[trial % 4];
    const auto fused = fuse(lex, sem, {alpha});
    for (std::size_t k = 0; k < n * m; ++k) {
      const double norm = hi > lo ? (lex.values()[k] - lo) / (hi - lo) : 0.0;
      const double expected = alpha * sem.values()[k] + (1 - alpha) * norm;
      c.expect(std::abs(fused.values()[k] - expected) <= 1e-12, "trial " + std::to_string(trial));
    }
  }
  if (c.ok) c.detail = "1000 random matrices";
  return c;
}

// 3 -------------------------------------------------------------------------
Check bm25_oracle() {
  Check c;
  std::mt19937_64 rng(202);
  std::size_t comparisons = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t docs = 1 + rng() % 50;
    std::vector<oracle::Unit> units;
    for (std::size_t d = 0; d < docs; ++d) {
      auto toks = oracle::random_tokens(rng, 30, 25);
      if (toks.empty()) toks.push_back("t0");
      units.emplace_back("d" + std::to_string(d), toks);
    }
    const auto index = build_index(units);
    for (int q = 0; q < 5; ++q) {
      const auto query = oracle::random_tokens(rng, 6, 30);
      for (const auto& [id, _] : units) {
        const double got = bm25_score(index, query, id);
        const double want = oracle::bm25(units, query, id);
        c.expect(std::abs(got - want) <= 1e-9, "trial " + std::to_string(trial) + " doc " + id);
        ++comparisons;
      }
    }
  }
  if (c.ok) c.detail = "200 trials, " + std::to_string(comparisons) + " pairs";
  return c;
}

// 4 -------------------------------------------------------------------------
Check chunker() {
  Check c;
  std::mt19937_64 rng(303);
  const std::pair<std::size_t, std::size_t> settings[] = {{110, 20}, {150, 10}, {150, 20}, {150, 40},
                                                          {150, 50}, {200, 50}, {300, 50}};
  for (const auto& [w, s] : settings) {
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t len = 1 + rng() % 1200;
      std::vector<std::string> tokens(len);
      for (std::size_t i = 0; i < len; ++i) tokens[i] = "t" + std::to_string(i);
      const auto chunks = chunk_article(tokens, {w, s}, "a");
      const auto tag = std::to_string(w) + "/" + std::to_string(s) + " len " + std::to_string(len);

      std::vector<bool> covered(len, false);
      for (const auto& ch : chunks) {
        for (std::size_t k = 0; k < ch.tokens.size(); ++k) {
          c.expect(ch.tokens[k] == tokens[ch.start + k], tag + ": chunk text mismatch");
          covered[ch.start + k] = true;
        }
      }
      c.expect(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }), tag + ": gap");
      if (len <= w) {
        c.expect(chunks.size() == 1 && chunks[0].tokens.size() == len, tag + ": single chunk");
      } else {
        for (const auto& ch : chunks) c.expect(ch.tokens.size() == w, tag + ": window size");
        for (std::size_t i = 0; i + 2 < chunks.size(); ++i) {
          const std::size_t overlap = chunks[i].start + w - chunks[i + 1].start;
          c.expect(overlap == w - s, tag + ": overlap");
        }
        c.expect(chunks.back().start + w == len, tag + ": last chunk end");
      }
      std::vector<std::size_t> starts;
      for (const auto& ch : chunks) starts.push_back(ch.start);
      c.expect(starts == oracle::window_starts(len, w, s), tag + ": starts differ from simulation");
    }
  }
  if (c.ok) c.detail = "7 settings x 500 lengths";
  return c;
}

// 5 -------------------------------------------------------------------------
Check weather_examples_golden() {
  Check c;
  const AlignedBitext bitext{"weather", "en", "ja",
                             {{"The weather is nice.", "いい天気ね。"}, {"Shall we go out?", "お出掛けしよ？"}}};
  const SentencePools pools = {{"en", {"Random Sentence."}}, {"ja", {"ランダム文。"}}};
  const auto examples = generate_examples(bitext, pools, {0});
  std::ifstream golden(std::string(LEGALIR_TEST_DATA_DIR) + "/weather_examples_golden.jsonl", std::ios::binary);
  c.expect(static_cast<bool>(golden), "golden file missing");
  std::string produced;
  for (const auto& e : examples) produced += to_json(e).dump() + "\n";
  std::stringstream expected;
  expected << golden.rdbuf();
  c.expect(examples.size() == 12, std::to_string(examples.size()) + " rows");
  c.expect(produced == expected.str(), "output differs from golden file");
  if (c.ok) c.detail = "12 rows byte-exact";
  return c;
}

// 6 -------------------------------------------------------------------------
Check self_label() {
  Check c;
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledPair> data;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = std::to_string(i);
      data.push_back({"q" + std::to_string(i % 5), "p" + id, "query " + id, "passage " + id,
                      rng() % 3 ? Label::positive : Label::negative, PairOrigin::gold});
    }
    const std::uint64_t salt = rng();
    std::atomic<std::uint64_t> calls{0};
    const bool drifting = trial % 2 == 0;
    FunctionScorer predictor(
        [&](std::string_view, std::string_view b) {
          std::uint64_t h = std::hash<std::string_view>{}(b) ^ salt;
          if (drifting) h = detail::splitmix64(h + calls++);
          return static_cast<double>(detail::splitmix64(h) % 1001) / 1000.0;
        },
        !drifting);
    SelfLabelConfig cfg;
    cfg.iterations = 1 + rng() % 5;
    cfg.threshold = static_cast<double>(rng() % 101) / 100.0;

    const auto r = self_label_refine(data, predictor, cfg);
    const auto tag = "trial " + std::to_string(trial);
    c.expect(r.pairs.size() == data.size(), tag + ": size changed");
    std::size_t prev = 0;
    for (const auto& p : data) prev += p.label == Label::positive;
    for (auto pos : r.positives_after_iteration) {
      c.expect(pos <= prev, tag + ": positives increased");
      prev = pos;
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].label == Label::negative) c.expect(r.pairs[i].label == Label::negative, tag + ": neg->pos flip");
    }
    if (!drifting) {
      const auto again = self_label_refine(r.pairs, predictor, cfg);
      c.expect(again.pairs == r.pairs, tag + ": not a fixed point");
    }
  }
  if (c.ok) c.detail = "100 random datasets";
  return c;
}

// 7 -------------------------------------------------------------------------
Check caps_and_augmentation() {
  Check c;
  std::mt19937_64 rng(505);
  for (std::size_t corpus_size : {3u, 40u, 151u, 152u, 400u}) {
    CorpusStore articles;
    for (std::size_t i = 0; i < corpus_size; ++i) {
      std::string text = "Article " + std::to_string(i) + ".";
      for (int w = 0; w < 12; ++w) text += " t" + std::to_string(rng() % 300);
      articles.add(make_document("a" + std::to_string(i), SourceKind::statute_article, std::string_view(text)));
    }
    std::vector<Question> qs;
    GoldLabels gold;
    for (int q = 0; q < 3; ++q) {
      const auto id = "Q" + std::to_string(q);
      qs.push_back({id, "t" + std::to_string(q) + " t" + std::to_string(q + 7)});
      gold[id] = {"a0"};
      if (corpus_size > 2) gold[id].push_back("a" + std::to_string(1 + q % (corpus_size - 1)));
    }
    const auto pairs = generate_retrieval_pairs(qs, gold, articles);
    for (const auto& q : qs) {
      std::size_t neg = 0;
      for (const auto& p : pairs) {
        if (p.query_id != q.id || p.label != Label::negative) continue;
        ++neg;
        const auto& g = gold[q.id];
        c.expect(std::find(g.begin(), g.end(), p.passage_id) == g.end(), "gold used as negative");
      }
      const std::size_t expected = std::min<std::size_t>(150, corpus_size - gold[q.id].size());
      c.expect(neg == expected, "corpus " + std::to_string(corpus_size) + ": " + std::to_string(neg) + " negatives");
    }
    const ArticleTfidf tfidf(articles);
    for (std::size_t n : {1u, 2u, 5u, 20u}) {
      const auto out = augment_articles(qs[0].text, {"a0"}, tfidf, n);
      const std::size_t expected = std::min<std::size_t>(1 + n, corpus_size);
      c.expect(out.size() == expected, "tf-idf" + std::to_string(n) + " size");
      c.expect(std::set<std::string>(out.begin(), out.end()).size() == out.size(), "duplicate article");
      c.expect(out.front() == "a0", "given article not first");
    }
  }
  if (c.ok) c.detail = "cap 150 and tf-idf{1,2,5,20}";
  return c;
}

// 8 -------------------------------------------------------------------------
Check planted_retrieval() {
  Check c;
  std::mt19937_64 rng(606);
  // Zipf-like vocabulary draw so cases share common words.
  std::vector<double> weights(4000);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  auto paragraph = [&] {
    std::string p = "The court";
    const std::size_t len = 25 + rng() % 30;
    for (std::size_t w = 0; w < len; ++w) p += " w" + std::to_string(word(rng));
    return p + ".";
  };

  CorpusStore corpus;
  for (int i = 0; i < 500; ++i) {
    std::vector<Paragraph> ps;
    const std::size_t n = 4 + rng() % 6;
    for (std::size_t k = 0; k < n; ++k) ps.push_back({0, paragraph(), {}, true});
    char id[16];
    std::snprintf(id, sizeof id, "case%03d", i);
    corpus.add(make_document(id, SourceKind::case_law, std::move(ps)));
  }

  // Each query copies at least half of its gold case's paragraphs.
  std::vector<std::pair<CaseDocument, std::string>> queries;
  for (int q = 0; q < 10; ++q) {
    const auto& gold = corpus.documents()[static_cast<std::size_t>(q * 47 + 3)];
    std::vector<Paragraph> ps;
    const std::size_t copy = (gold.paragraphs.size() + 1) / 2;
    for (std::size_t k = 0; k < copy; ++k) ps.push_back({0, gold.paragraphs[k * 2 % gold.paragraphs.size()].text, {}, true});
    for (std::size_t k = 0; k < copy; ++k) ps.push_back({0, paragraph(), {}, true});
    queries.emplace_back(make_document("query" + std::to_string(q), SourceKind::case_law, std::move(ps)), gold.id);
  }

  const auto t0 = std::chrono::steady_clock::now();
  Retriever retriever(corpus);
  auto scorer = retriever.baseline_scorer();
  RetrieveConfig cfg;
  cfg.prune_k = 100;
  cfg.fusion.alpha = 0.7;
  cfg.top_n = 5;
  cfg.jobs = 1;
  int hits = 0;
  for (const auto& [query, gold] : queries) {
    for (const auto& r : retriever.retrieve(query, cfg, *scorer)) hits += r.id == gold;
  }
  const double elapsed = seconds_since(t0);
  c.expect(hits >= 9, std::to_string(hits) + "/10 gold in top 5");
  c.expect(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  if (c.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d/10 gold in top 5, %.2f s single-threaded", hits, elapsed);
    c.detail = buf;
  }
  return c;
}

// 9 -------------------------------------------------------------------------
Check ensemble() {
  Check c;
  const ScoreMap unit = {{"a", 0.0}, {"b", 0.3}, {"c", 1.0}};
  c.expect(minmax_normalize(unit) == unit, "[0,1] input is not a fixed point");
  c.expect(minmax_normalize({{"a", 3}, {"b", 3}}) == ScoreMap({{"a", 0}, {"b", 0}}), "constant rule");

  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(0, 1);
  ModelRuns dev;
  RelevanceSets gold;
  for (int q = 0; q < 20; ++q) {
    const auto qid = "q" + std::to_string(q);
    for (int k = 0; k < 12; ++k) {
      const auto cid = "c" + std::to_string(k);
      const bool rel = (k * 5 + q) % 6 == 0;
      if (rel) gold[qid].insert(cid);
      dev["perfect"][qid][cid] = rel ? 1.0 : 0.0;
      dev["random"][qid][cid] = u(rng);
    }
  }
  const auto fit = fit_weights(dev, gold);
  c.expect(fit.weights.weights.at("perfect") >= 0.5, "perfect model weight below 0.5");

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ModelOutputs> raw(3), scaled(3);
    for (int m = 0; m < 3; ++m) {
      raw[m].model_id = scaled[m].model_id = "m" + std::to_string(m);
      const double a = 0.01 + u(rng) * 100, b = (u(rng) - 0.5) * 1000;
      for (int k = 0; k < 10; ++k) {
        const double v = (u(rng) - 0.5) * 10;
        raw[m].scores["c" + std::to_string(k)] = v;
        scaled[m].scores["c" + std::to_string(k)] = a * v + b;
      }
    }
    const EnsembleWeights w{{{"m0", 0.2}, {"m1", 0.5}, {"m2", 0.3}}};
    const auto x = combine(raw, w), y = combine(scaled, w);
    for (const auto& [k, v] : x) c.expect(std::abs(v - y.at(k)) <= 1e-9, "affine rescaling changed output");
  }
  if (c.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "perfect-model weight %.1f, affine invariant", fit.weights.weights.at("perfect"));
    c.detail = buf;
  }
  return c;
}

// 10 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Check determinism() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / ("legalir_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };

  std::mt19937_64 rng(808);
  {
    std::ofstream corpus(p("corpus.jsonl")), queries(p("queries.jsonl")), articles(p("articles.jsonl")),
        questions(p("questions.jsonl")), gold(p("gold.jsonl")), outputs(p("outputs.jsonl")),
        bitext(p("bitext.jsonl")), pool(p("pool.jsonl"));
    for (int i = 0; i < 60; ++i) {
      nlohmann::json paras = nlohmann::json::array();
      for (int k = 0; k < 3; ++k) {
        std::string t = "The judge said";
        for (int w = 0; w < 12; ++w) t += " w" + std::to_string(rng() % 150);
        paras.push_back(t + ". The parties agreed.");
      }
      nlohmann::json rec = {{"id", "case" + std::to_string(i)}, {"kind", "case_law"}, {"paragraphs", paras}};
      corpus << rec.dump() << '\n';
      if (i % 12 == 0) {
        rec["id"] = "query" + std::to_string(i);
        queries << rec.dump() << '\n';
      }
    }
    for (int i = 0; i < 30; ++i) {
      std::string t = "Article " + std::to_string(i) + ".";
      for (int w = 0; w < 40; ++w) t += " a" + std::to_string(rng() % 80);
      articles << nlohmann::json{{"id", "art" + std::to_string(i)}, {"kind", "statute_article"}, {"text", t}}.dump() << '\n';
    }
    for (int q = 0; q < 4; ++q) {
      std::string t = "Question";
      for (int w = 0; w < 10; ++w) t += " a" + std::to_string(rng() % 80);
      questions << nlohmann::json{{"id", "Q" + std::to_string(q)}, {"kind", "bar_question"}, {"text", t + "?"}}.dump() << '\n';
      gold << nlohmann::json{{"query_id", "Q" + std::to_string(q)}, {"relevant_ids", {"art" + std::to_string(q)}}}.dump() << '\n';
      for (int k = 0; k < 6; ++k) {
        for (const char* m : {"m1", "m2"}) {
          outputs << nlohmann::json{{"model_id", m}, {"query_id", "Q" + std::to_string(q)},
                                    {"candidate_id", "art" + std::to_string(k)}, {"score", static_cast<double>(rng() % 100)}}
                         .dump()
                  << '\n';
        }
      }
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (int i = 0; i < 8; ++i) pairs.push_back({"Sentence " + std::to_string(i) + ".", "Phrase " + std::to_string(i) + "."});
    bitext << nlohmann::json{{"doc_id", "d1"}, {"lang_a", "en"}, {"lang_b", "fr"}, {"pairs", pairs}}.dump() << '\n';
    for (int i = 0; i < 5; ++i) {
      pool << nlohmann::json{{"lang", "en"}, {"sentence", "Random " + std::to_string(i) + "."}}.dump() << '\n';
      pool << nlohmann::json{{"lang", "fr"}, {"sentence", "Aléatoire " + std::to_string(i) + "."}}.dump() << '\n';
    }
  }

  const std::string cli = LEGALIR_CLI;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "ingest --corpus " + p("corpus.jsonl")},
      {"index", "index --corpus " + p("corpus.jsonl")},
      {"retrieve", "retrieve --corpus " + p("corpus.jsonl") + " --queries " + p("queries.jsonl")},
      {"chunk", "chunk --articles " + p("articles.jsonl") + " --window 10 --stride 4"},
      {"gen-pairs", "gen-pairs --questions " + p("questions.jsonl") + " --gold " + p("gold.jsonl") + " --articles " +
                        p("articles.jsonl") + " --n-augment 2 --window 10 --stride 5"},
      {"gen-pairs-silver", "gen-pairs --mode silver --seed 4 --corpus " + p("corpus.jsonl")},
      {"paralaw", "paralaw --seed 9 --bitext " + p("bitext.jsonl") + " --pool " + p("pool.jsonl")},
      {"ensemble", "ensemble --fit --outputs " + p("outputs.jsonl") + " --gold " + p("gold.jsonl")},
  };
  std::size_t runs = 0;
  for (const auto& [name, args] : commands) {
    std::string first;
    for (const auto& [tag, jobs] : std::vector<std::pair<std::string, std::string>>{{"a", "1"}, {"b", "1"}, {"c", "4"}}) {
      const auto out = p(name + "." + tag + ".out");
      const std::string cmd = cli + " " + args + " --jobs " + jobs + " --out " + out + " 2>/dev/null";
      const int status = std::system(cmd.c_str());
      c.expect(status == 0, name + " exited with " + std::to_string(status));
      const auto bytes = slurp(out);
      c.expect(!bytes.empty(), name + " wrote nothing");
      if (tag == "a") first = bytes;
      else c.expect(bytes == first, name + " output differs (run " + tag + ", jobs " + jobs + ")");
      ++runs;
    }
  }
  // self-label and eval read files produced above.
  for (const auto& [name, args] : std::vector<std::pair<std::string, std::string>>{
           {"self-label", "self-label --pairs " + p("gen-pairs.a.out")},
           {"eval", "eval --predictions " + p("retrieve.a.out") + " --gold " + p("gold_cases.jsonl")}}) {
    if (name == "eval") {
      std::ofstream g(p("gold_cases.jsonl"));
      for (int i = 0; i < 60; i += 12)
        g << nlohmann::json{{"query_id", "query" + std::to_string(i)}, {"relevant_ids", {"case" + std::to_string(i)}}}.dump() << '\n';
    }
    std::string first;
    for (const auto& jobs : {"1", "1", "4"}) {
      const auto out = p(name + ".out");
      const std::string cmd = cli + " " + args + " --jobs " + jobs + " --out " + out + " 2>/dev/null";
      c.expect(std::system(cmd.c_str()) == 0, name + " failed");
      const auto bytes = slurp(out);
      if (first.empty()) first = bytes;
      else c.expect(bytes == first, name + " output differs");
      ++runs;
    }
  }
  fs::remove_all(dir);
  if (c.ok) c.detail = "10 subcommands x 3 runs (" + std::to_string(runs) + " invocations)";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"F2 reproduction", f2_reproduction},
      {"fusion formula", fusion_formula},
      {"BM25 oracle equivalence", bm25_oracle},
      {"chunker invariants", chunker},
      {"pretraining example golden", weather_examples_golden},
      {"self-label monotonicity", self_label},
      {"negative cap and augmentation", caps_and_augmentation},
      {"end-to-end planted retrieval", planted_retrieval},
      {"ensemble", ensemble},
      {"determinism", determinism},
  };
  int failed = 0;
  int n = 1;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %2d %s: %s\n", c.ok ? "PASS" : "FAIL", n++, name.c_str(), c.detail.c_str());
    failed += !c.ok;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
