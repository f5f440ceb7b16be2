#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "legalir/corpus.hpp"

using namespace legalir;

namespace {

std::vector<std::string> texts(const std::vector<Paragraph>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.text);
  return out;
}

}  // namespace

TEST(SegmentParagraphs, BracketMarkersWithLeadingText) {
  const auto ps = segment_paragraphs("intro\n[10] A.\n[11] B.");
  EXPECT_EQ(texts(ps), (std::vector<std::string>{"intro", "[10] A.", "[11] B."}));
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps[i].index, i);
}

TEST(SegmentParagraphs, MarkerContinuationLinesStayInParagraph) {
  const auto ps = segment_paragraphs("[1] First line\ncontinues here.\n\n[2] Second.");
  EXPECT_EQ(texts(ps), (std::vector<std::string>{"[1] First line\ncontinues here.", "[2] Second."}));
}

TEST(SegmentParagraphs, NoMarkersNoBlankLinesIsOneParagraph) {
  const auto ps = segment_paragraphs("one line\nanother line");
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].text, "one line\nanother line");
}

TEST(SegmentParagraphs, BlankLineFallback) {
  EXPECT_EQ(texts(segment_paragraphs("p1\n\np2")), (std::vector<std::string>{"p1", "p2"}));
  EXPECT_EQ(texts(segment_paragraphs("p1\n  \n\n\t\np2\n")), (std::vector<std::string>{"p1", "p2"}));
}

TEST(SegmentParagraphs, BracketedWordIsNotAMarker) {
  EXPECT_EQ(segment_paragraphs("[a] x\n[] y").size(), 1u);
}

TEST(SegmentParagraphs, EmptyTextViolatesPrecondition) {
  EXPECT_THROW(segment_paragraphs(""), Error);
  EXPECT_THROW(segment_paragraphs("  \n "), Error);
}

TEST(SegmentParagraphs, ReconstructsTextModuloWhitespace) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"word", " ", "\n", "\n\n", "[12]", "[3] ", "x.", "\t"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string raw = "start";
    const auto n = rng() % 30;
    for (std::size_t k = 0; k < n; ++k) raw += pieces[rng() % pieces.size()];
    std::string joined;
    for (const auto& p : segment_paragraphs(raw)) {
      EXPECT_FALSE(utf8::trim(p.text).empty());
      joined += p.text;
    }
    EXPECT_EQ(utf8::strip_all_space(joined), utf8::strip_all_space(raw)) << raw;
  }
}

TEST(SegmentSentences, TwoSimpleSentences) {
  EXPECT_EQ(segment_sentences("A is B. C is D."), (std::vector<std::string>{"A is B.", "C is D."}));
}

TEST(SegmentSentences, AbbreviationGuard) {
  EXPECT_EQ(segment_sentences("See No. 5 of the act.").size(), 1u);
  EXPECT_EQ(segment_sentences("Smith v. Jones was decided. It stands.").size(), 2u);
  EXPECT_EQ(segment_sentences("Mr. Smith appealed.").size(), 1u);
  EXPECT_EQ(segment_sentences("Under art. Seven of the code it applies.").size(), 1u);
}

TEST(SegmentSentences, LowercaseContinuationDoesNotSplit) {
  EXPECT_EQ(segment_sentences("It was 5.3 percent. and then more").size(), 1u);
}

TEST(SegmentSentences, QuestionAndExclamation) {
  EXPECT_EQ(segment_sentences("Is it so? Yes! It is."),
            (std::vector<std::string>{"Is it so?", "Yes!", "It is."}));
}

TEST(SegmentSentences, FullwidthTerminators) {
  EXPECT_EQ(segment_sentences("いい天気ね。お出掛けしよ？"),
            (std::vector<std::string>{"いい天気ね。", "お出掛けしよ？"}));
}

TEST(SegmentSentences, ConcatenationEqualsTextModuloWhitespace) {
  const std::string text = "The court held. No. 4 was cited! Is that right? Mr. X said no.  End";
  std::string joined;
  for (const auto& s : segment_sentences(text)) joined += s;
  EXPECT_EQ(utf8::strip_all_space(joined), utf8::strip_all_space(text));
}

TEST(LanguageFilter, ShippedStoplistsAreLargeEnough) {
  EXPECT_GE(english_stoplist().size(), 100u);
  EXPECT_GE(french_stoplist().size(), 100u);
}

TEST(LanguageFilter, EnglishParagraphKept) {
  // english: the, that, the = 3/6; french: 0/6
  const auto r = stopword_ratios("the court finds that the applicant");
  EXPECT_DOUBLE_EQ(r.english, 0.5);
  EXPECT_DOUBLE_EQ(r.french, 0.0);
  EXPECT_TRUE(filter_language(Paragraph{0, "the court finds that the applicant", {}, true}).kept);
}

TEST(LanguageFilter, FrenchParagraphDropped) {
  // french: le, que, le = 3/6; english: 0/6
  const auto r = stopword_ratios("le tribunal conclut que le demandeur");
  EXPECT_DOUBLE_EQ(r.french, 0.5);
  EXPECT_DOUBLE_EQ(r.english, 0.0);
  EXPECT_FALSE(filter_language(Paragraph{0, "le tribunal conclut que le demandeur", {}, true}).kept);
}

TEST(LanguageFilter, NoStopwordsTieKeeps) {
  EXPECT_TRUE(filter_language(Paragraph{0, "tribunal", {}, true}).kept);
}

TEST(LanguageFilter, MinRatioGate) {
  // one french stopword in 25 tokens: 0.04 < 0.05
  std::string text = "le";
  for (int i = 0; i < 24; ++i) text += " zzz";
  EXPECT_TRUE(filter_language(Paragraph{0, text, {}, true}).kept);
  EXPECT_FALSE(filter_language(Paragraph{0, text, {}, true}, LangFilterConfig{0.04}).kept);
}

TEST(LanguageFilter, Idempotent) {
  for (const char* t : {"le tribunal conclut que le demandeur", "the court", "mixed le the que"}) {
    const auto once = filter_language(Paragraph{0, t, {}, true});
    const auto twice = filter_language(once);
    EXPECT_EQ(once.kept, twice.kept);
  }
}

TEST(Ingest, TwoRecordsInFileOrder) {
  std::istringstream in(
      R"({"id":"b","kind":"case_law","text":"[1] Second doc."})"
      "\n"
      R"({"id":"a","kind":"case_law","text":"First para.\n\nSecond para."})"
      "\n");
  const auto docs = ingest(in);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "b");
  EXPECT_EQ(docs[1].id, "a");
  EXPECT_EQ(docs[1].paragraphs.size(), 2u);
  EXPECT_EQ(docs[1].paragraphs[0].sentences, std::vector<std::string>{"First para."});
}

TEST(Ingest, MissingIdNamesLine) {
  std::istringstream in(R"({"id":"a","kind":"case_law","text":"x"})"
                        "\n"
                        R"({"kind":"case_law","text":"y"})"
                        "\n");
  try {
    ingest(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    EXPECT_EQ(e.module(), "corpus");
  }
}

TEST(Ingest, DuplicateIdIsError) {
  std::istringstream in(R"({"id":"a","kind":"case_law","text":"x"})"
                        "\n"
                        R"({"id":"a","kind":"case_law","text":"y"})");
  EXPECT_THROW(ingest(in), Error);
}

TEST(Ingest, MalformedJsonIsError) {
  std::istringstream in("{\"id\": \"a\", \n");
  EXPECT_THROW(ingest(in), Error);
}

TEST(Ingest, KindHandling) {
  std::istringstream no_kind(R"({"id":"a","text":"x"})");
  EXPECT_EQ(ingest(no_kind, SourceKind::statute_article)[0].source_kind, SourceKind::statute_article);

  std::istringstream mismatched(R"({"id":"a","kind":"case_law","text":"x"})");
  EXPECT_THROW(ingest(mismatched, SourceKind::bar_question), Error);

  std::istringstream unknown(R"({"id":"a","kind":"novel","text":"x"})");
  EXPECT_THROW(ingest(unknown), Error);
}

TEST(Ingest, PreSegmentedParagraphsBypassSegmentation) {
  std::istringstream in(R"({"id":"a","kind":"case_law","paragraphs":["[1] one\n\ntwo","le juge que le"]})");
  const auto docs = ingest(in);
  ASSERT_EQ(docs[0].paragraphs.size(), 2u);
  EXPECT_EQ(docs[0].paragraphs[0].text, "[1] one\n\ntwo");
  EXPECT_FALSE(docs[0].paragraphs[1].kept);
  EXPECT_EQ(docs[0].kept_text(), "[1] one\n\ntwo");
}

TEST(Ingest, SyntheticCorpusAtFullScale) {
  // 4415 cases with 1..77 paragraphs each (mean ~39, the paragraph/case
  // ratio of the reference corpus). Expected counts come from the generator.
  const auto path = std::filesystem::temp_directory_path() / "legalir_4415.jsonl";
  std::mt19937_64 rng(4415);
  std::size_t expected_paragraphs = 0;
  {
    std::ofstream out(path);
    for (int c = 0; c < 4415; ++c) {
      const auto n = 1 + rng() % 77;
      expected_paragraphs += n;
      std::string text = "Heading of case " + std::to_string(c) + ".";
      for (std::size_t p = 1; p < n; ++p) text += "\n[" + std::to_string(p) + "] Court text " + std::to_string(p) + ".";
      nlohmann::json rec = {{"id", "case" + std::to_string(c)}, {"kind", "case_law"}, {"text", text}};
      out << rec.dump() << '\n';
    }
  }
  const auto docs = ingest(path.string(), SourceKind::case_law);
  std::filesystem::remove(path);
  ASSERT_EQ(docs.size(), 4415u);
  std::size_t paragraphs = 0;
  for (const auto& d : docs) paragraphs += d.paragraphs.size();
  EXPECT_EQ(paragraphs, expected_paragraphs);
}

TEST(CorpusStore, LookupAndDuplicates) {
  CorpusStore store;
  store.add(make_document("x", SourceKind::case_law, std::string_view("text")));
  EXPECT_TRUE(store.contains("x"));
  EXPECT_EQ(store.at("x").paragraphs.size(), 1u);
  EXPECT_THROW(store.at("y"), Error);
  EXPECT_THROW(store.add(make_document("x", SourceKind::case_law, std::string_view("t"))), Error);
}

TEST(Bitext, ParsesAndValidates) {
  std::istringstream in(R"({"doc_id":"d","lang_a":"en","lang_b":"ja","pairs":[["A.","あ。"],["B.","い。"]]})");
  const auto b = ingest_bitext(in);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].pairs.size(), 2u);

  std::istringstream empty_side(R"({"doc_id":"d","lang_a":"en","lang_b":"ja","pairs":[["A.",""]]})");
  EXPECT_THROW(ingest_bitext(empty_side), Error);
  std::istringstream no_pairs(R"({"doc_id":"d","lang_a":"en","lang_b":"ja","pairs":[]})");
  EXPECT_THROW(ingest_bitext(no_pairs), Error);
}
