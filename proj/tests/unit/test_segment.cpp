#include <regex>

#include <gtest/gtest.h>

#include "selfstate/errors.hpp"
#include "selfstate/segment.hpp"
#include "selfstate/utf8.hpp"

using namespace selfstate;

namespace {

std::vector<Sentence> numbered(std::size_t n) {
  std::vector<Sentence> out;
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    if (!text.empty()) text += " ";
    const std::string s = "S" + std::to_string(i) + ".";
    out.push_back({s, text.size(), text.size() + s.size(), i});
    text += s;
  }
  return out;
}

std::string joined(std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += (i ? " S" : "S") + std::to_string(i) + ".";
  return text;
}

std::string strip_ws(std::string_view s) {
  std::string out;
  for (char32_t c : utf8::decode(s)) {
    if (!utf8::is_space(c)) out += utf8::encode(c);
  }
  return out;
}

}  // namespace

TEST(SplitSentences, TwoSentenceOffsets) {
  const auto s = split_sentences("I am sad. I want help.");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].start, 0u);
  EXPECT_EQ(s[0].end, 9u);
  EXPECT_EQ(s[1].start, 10u);
  EXPECT_EQ(s[1].end, 22u);
  EXPECT_EQ(s[1].index, 1u);
}

TEST(SplitSentences, AbbreviationSuppressesSplit) {
  EXPECT_EQ(split_sentences("I saw Dr. Smith today.").size(), 1u);
  EXPECT_EQ(split_sentences("We talked, e.g. About work. Then left.").size(), 2u);
}

TEST(SplitSentences, RequiresUppercaseDigitOrQuoteAfterTerminal) {
  EXPECT_EQ(split_sentences("It was 3 p.m. and late.").size(), 1u);
  EXPECT_EQ(split_sentences("Wait... what happened.").size(), 1u);
  EXPECT_EQ(split_sentences("I left. 2 days later I came back.").size(), 2u);
  EXPECT_EQ(split_sentences("She said hi. \"Hello,\" I said.").size(), 2u);
}

TEST(SplitSentences, ClosingQuoteStaysWithSentence) {
  const auto s = split_sentences("He said \"stop.\" Then he left!");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "He said \"stop.\"");
  EXPECT_EQ(s[1].text, "Then he left!");
}

TEST(SplitSentences, BlankLineSplitsSingleNewlineDoesNot) {
  EXPECT_EQ(split_sentences("first part\nstill going").size(), 1u);
  const auto s = split_sentences("a heading without stop\n\nnext paragraph here");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "a heading without stop");
  EXPECT_EQ(s[1].text, "next paragraph here");
}

TEST(SplitSentences, UnicodeEllipsisAndOffsets) {
  const std::string text = "Caf\xC3\xA9 closed\xE2\x80\xA6 We went home.";
  const auto s = split_sentences(text);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].end, 12u);
  EXPECT_EQ(s[1].start, 13u);
  for (const auto& x : s) EXPECT_EQ(utf8::slice(text, x.start, x.end), x.text);
}

TEST(SplitSentences, EmptyTextThrows) {
  EXPECT_THROW(split_sentences(""), EmptyText);
  EXPECT_THROW(split_sentences(" \n\t "), EmptyText);
}

TEST(SplitSentences, OffsetsReproduceTextOnFixturePosts) {
  std::size_t posts = 0;
  for (const auto& t : generate_fixture(1234, 100, 10)) {
    for (const auto& p : t.posts) {
      ++posts;
      const auto sents = split_sentences(p.text);
      std::string concat;
      std::size_t prev_end = 0;
      for (std::size_t i = 0; i < sents.size(); ++i) {
        const auto& s = sents[i];
        EXPECT_EQ(utf8::slice(p.text, s.start, s.end), s.text);
        EXPECT_EQ(s.index, i);
        EXPECT_GE(s.start, prev_end);
        prev_end = s.end;
        concat += s.text;
      }
      EXPECT_EQ(strip_ws(concat), strip_ws(p.text));
    }
  }
  EXPECT_EQ(posts, 1000u);
}

TEST(SplitSentences, PureFunction) {
  const std::string text = "One. Two! Three? Four\n\nFive.";
  EXPECT_EQ(split_sentences(text), split_sentences(text));
}

TEST(Segmenter, CustomAbbreviations) {
  RuleBasedSegmenter seg({"st."});
  EXPECT_EQ(seg.split("We met on Main St. Near the park.").size(), 1u);
  EXPECT_EQ(seg.split("I saw Dr. Smith today.").size(), 2u);
}

// chunking -------------------------------------------------------------------

TEST(ChunkSentences, DisjointPartition) {
  const auto c = chunk_sentences(numbered(5), 2, ChunkMode::Disjoint, joined(5));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].text, "S0. S1.");
  EXPECT_EQ(c[1].text, "S2. S3.");
  EXPECT_EQ(c[2].text, "S4.");
  EXPECT_EQ(c[2].index, 2u);
}

TEST(ChunkSentences, SlidingWindowEqualsInput) {
  const auto c = chunk_sentences(numbered(3), 3, ChunkMode::Sliding, joined(3));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].sentences.size(), 3u);
}

TEST(ChunkSentences, SlidingCountAndMembership) {
  for (std::size_t n = 1; n <= 9; ++n) {
    for (std::size_t size = 1; size <= 4; ++size) {
      const auto c = chunk_sentences(numbered(n), size, ChunkMode::Sliding, joined(n));
      const std::size_t expected = n >= size ? n - size + 1 : 1;
      EXPECT_EQ(c.size(), expected) << n << "/" << size;
      std::vector<std::size_t> seen(n, 0);
      for (const auto& ch : c) {
        EXPECT_LE(ch.sentences.size(), size);
        for (std::size_t k = 1; k < ch.sentences.size(); ++k) {
          EXPECT_EQ(ch.sentences[k].index, ch.sentences[k - 1].index + 1);
        }
        for (const auto& s : ch.sentences) ++seen[s.index];
      }
      for (auto count : seen) {
        EXPECT_GE(count, 1u);
        EXPECT_LE(count, size);
      }
    }
  }
}

TEST(ChunkSentences, DisjointEverySentenceExactlyOnce) {
  const auto c = chunk_sentences(numbered(7), 2, ChunkMode::Disjoint, joined(7));
  std::vector<int> seen(7, 0);
  for (const auto& ch : c) {
    for (const auto& s : ch.sentences) ++seen[s.index];
  }
  for (int v : seen) EXPECT_EQ(v, 1);
}

TEST(ChunkSentences, EmptyInputAndZeroSize) {
  EXPECT_TRUE(chunk_sentences({}, 2, ChunkMode::Disjoint, "").empty());
  EXPECT_THROW(chunk_sentences(numbered(2), 0, ChunkMode::Disjoint, joined(2)),
               std::invalid_argument);
}

// sentence shape -------------------------------------------------------------------

TEST(SentenceShape, Examples) {
  EXPECT_TRUE(is_sentence_shaped("Nobody can be perfect."));
  EXPECT_FALSE(is_sentence_shaped(", and doctors can't help"));
  EXPECT_FALSE(is_sentence_shaped(""));
  EXPECT_TRUE(is_sentence_shaped("  Why me?\"  "));
  EXPECT_FALSE(is_sentence_shaped("\"Why me?\""));
  EXPECT_TRUE(is_sentence_shaped("I waited\xE2\x80\xA6"));
}

TEST(SentenceShape, AgreesWithRegexOracle) {
  // ASCII-only oracle: uppercase first non-space, terminal last non-space.
  const std::regex oracle(R"(^\s*[A-Z][\s\S]*[.!?"']\s*$)");
  const std::vector<std::string> firsts = {"A", "z", "3", ",", " Q", "\"", "(", "M"};
  const std::vector<std::string> middles = {"", "bc", " some words ", "x, y"};
  const std::vector<std::string> lasts = {".", "!", "?", "\"", "'", ",", "a", ";", ". ", ")"};
  std::size_t cases = 0;
  for (const auto& f : firsts) {
    for (const auto& m : middles) {
      for (const auto& l : lasts) {
        const std::string s = f + m + l;
        EXPECT_EQ(is_sentence_shaped(s), std::regex_match(s, oracle)) << "[" << s << "]";
        ++cases;
      }
    }
  }
  EXPECT_GE(cases, 200u);
}

// statistics -------------------------------------------------------------------

namespace {

std::vector<Timeline> corpus_with(std::vector<std::string> adaptive,
                                  std::vector<std::string> maladaptive) {
  Post p;
  p.post_id = "p";
  for (const auto& s : adaptive) p.text += s + " ";
  for (const auto& s : maladaptive) p.text += s + " ";
  p.adaptive_evidence = std::move(adaptive);
  p.maladaptive_evidence = std::move(maladaptive);
  return {Timeline{"t", "", {p}}};
}

}  // namespace

TEST(SpanStatistics, PlantedSevenOfTen) {
  std::vector<std::string> a;
  for (int i = 0; i < 7; ++i) a.push_back("walked to the store " + std::to_string(i));
  for (int i = 0; i < 3; ++i) a.push_back("I rested well " + std::to_string(i) + ".");
  const auto s = span_statistics(corpus_with(a, {"Everything hurts."}));
  EXPECT_EQ(s.adaptive.total, 10u);
  EXPECT_EQ(s.adaptive.non_sentence, 7u);
  EXPECT_DOUBLE_EQ(s.frac_non_sentence_adaptive, 0.7);
}

TEST(SpanStatistics, AllSentenceShaped) {
  const auto s = span_statistics(corpus_with({"Today I rested."}, {"Today I rested."}));
  EXPECT_EQ(s.frac_non_sentence_adaptive, 0.0);
  EXPECT_EQ(s.frac_non_sentence_maladaptive, 0.0);
}

TEST(SpanStatistics, ShortSpan) {
  const auto s = span_statistics(corpus_with({}, {"no"}));
  EXPECT_EQ(s.frac_short_maladaptive, 1.0);
  EXPECT_EQ(s.adaptive.total, 0u);
  EXPECT_EQ(s.frac_short_adaptive, 0.0);
}

TEST(SpanStatistics, NoEvidenceThrows) {
  EXPECT_THROW(span_statistics(corpus_with({}, {})), NoGoldSpans);
}

TEST(SpanStatistics, JsonAndTableAgreeWithCounts) {
  const auto s = span_statistics(corpus_with({"a b c", "Whole one."}, {"x"}));
  const auto j = to_json(s);
  EXPECT_DOUBLE_EQ(j["frac_non_sentence_adaptive"].get<double>(), 0.5);
  EXPECT_NE(format_table(s).find("adaptive"), std::string::npos);
}

TEST(WordCount, WhitespaceTokens) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("  one   two\nthree\t"), 3u);
}
