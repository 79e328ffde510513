#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/corpus.hpp"

namespace selfstate {

/// A sentence of a post. Offsets are character offsets into the post text,
/// end exclusive, and `text` is the verbatim slice.
struct Sentence {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t index = 0;

  bool operator==(const Sentence&) const = default;
};

struct Chunk {
  std::vector<Sentence> sentences;
  /// Verbatim slice from the first sentence start to the last sentence end.
  std::string text;
  std::size_t index = 0;
};

enum class ChunkMode { Disjoint, Sliding };

std::string_view to_string(ChunkMode mode) noexcept;
std::optional<ChunkMode> chunk_mode_from_string(std::string_view name) noexcept;

/// Sentence splitting contract. Implementations must be pure: identical text
/// produces identical sentences.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<Sentence> split(std::string_view text) const = 0;
  virtual std::string id() const = 0;
};

/// Rule-based splitter. A boundary follows a run of `.`, `!`, `?` or `…`
/// (plus closing quotes/brackets) when whitespace and then an uppercase
/// letter, digit or opening quote come next. A blank line always ends a
/// sentence; a single newline never does. Tokens in the abbreviation list
/// suppress a split after their final period.
class RuleBasedSegmenter final : public Segmenter {
 public:
  RuleBasedSegmenter();
  explicit RuleBasedSegmenter(std::vector<std::string> abbreviations);

  std::vector<Sentence> split(std::string_view text) const override;
  std::string id() const override { return "rule-based-v1"; }

  const std::vector<std::string>& abbreviations() const noexcept { return abbreviations_; }

 private:
  std::vector<std::string> abbreviations_;  // lowercase, with trailing '.'
};

/// Splits with the default RuleBasedSegmenter. Throws EmptyText.
std::vector<Sentence> split_sentences(std::string_view text);

/// Disjoint mode partitions in order (last chunk may be short). Sliding mode
/// yields windows advancing by one; when there are fewer sentences than
/// `size` the whole input forms a single window. `size` must be >= 1.
std::vector<Chunk> chunk_sentences(const std::vector<Sentence>& sentences, std::size_t size,
                                   ChunkMode mode, std::string_view post_text);

/// Starts with an uppercase letter and ends with `. ! ? …` or a closing quote,
/// ignoring surrounding whitespace.
bool is_sentence_shaped(std::string_view span_text);

/// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);

struct LabelSpanCounts {
  std::size_t total = 0;
  std::size_t non_sentence = 0;
  std::size_t short_spans = 0;
};

struct SpanStats {
  double frac_non_sentence_adaptive = 0.0;
  double frac_non_sentence_maladaptive = 0.0;
  double frac_short_adaptive = 0.0;
  double frac_short_maladaptive = 0.0;
  LabelSpanCounts adaptive;
  LabelSpanCounts maladaptive;
  std::size_t short_threshold = 7;
};

/// Per-label fraction of gold spans that are not sentence shaped and that
/// have fewer than `short_threshold` words. Throws NoGoldSpans when the corpus
/// has no evidence at all; a label without spans reports zero ratios.
SpanStats span_statistics(const std::vector<Timeline>& timelines,
                          std::size_t short_threshold = 7);

nlohmann::json to_json(const SpanStats& stats);
std::string format_table(const SpanStats& stats);

}  // namespace selfstate
