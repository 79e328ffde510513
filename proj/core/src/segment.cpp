#include "selfstate/segment.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "selfstate/errors.hpp"
#include "selfstate/utf8.hpp"

namespace selfstate {

std::string_view to_string(ChunkMode mode) noexcept {
  return mode == ChunkMode::Disjoint ? "disjoint" : "sliding";
}

std::optional<ChunkMode> chunk_mode_from_string(std::string_view name) noexcept {
  if (name == "disjoint") return ChunkMode::Disjoint;
  if (name == "sliding") return ChunkMode::Sliding;
  return std::nullopt;
}

namespace {

bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'…'; }

bool is_closing(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'”' || c == U'’' || c == U')' ||
         c == U']' || c == U'»';
}

bool is_opening_quote(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'“' || c == U'‘' || c == U'«';
}

bool starts_sentence(char32_t c) {
  return utf8::is_upper(c) || utf8::is_digit(c) || is_opening_quote(c);
}

bool is_inline_space(char32_t c) { return c != U'\n' && utf8::is_space(c); }

std::size_t skip_space(const std::u32string& t, std::size_t i) {
  while (i < t.size() && utf8::is_space(t[i])) ++i;
  return i;
}

// End of the non-whitespace content that precedes `i`, not before `floor`.
std::size_t trim_back(const std::u32string& t, std::size_t floor, std::size_t i) {
  while (i > floor && utf8::is_space(t[i - 1])) --i;
  return i;
}

}  // namespace

RuleBasedSegmenter::RuleBasedSegmenter()
    : RuleBasedSegmenter({"dr.", "mr.", "mrs.", "ms.", "e.g.", "i.e.", "etc.", "vs.", "approx."}) {}

RuleBasedSegmenter::RuleBasedSegmenter(std::vector<std::string> abbreviations)
    : abbreviations_(std::move(abbreviations)) {
  for (auto& a : abbreviations_) {
    a = utf8::encode(utf8::to_lower(utf8::decode(a)));
  }
}

std::vector<Sentence> RuleBasedSegmenter::split(std::string_view text) const {
  const std::u32string t = utf8::decode(text);
  const std::size_t n = t.size();
  std::size_t start = skip_space(t, 0);
  if (start == n) throw EmptyText();

  std::vector<Sentence> out;
  auto emit = [&](std::size_t s, std::size_t e) {
    if (e <= s) return;
    out.push_back({utf8::encode(std::u32string_view(t).substr(s, e - s)), s, e, out.size()});
  };

  auto is_abbreviation = [&](std::size_t period) {
    std::size_t b = period;
    while (b > start && !utf8::is_space(t[b - 1])) --b;
    while (b < period && (is_opening_quote(t[b]) || t[b] == U'(' || t[b] == U'[')) ++b;
    const std::string token =
        utf8::encode(utf8::to_lower(std::u32string_view(t).substr(b, period + 1 - b)));
    return std::find(abbreviations_.begin(), abbreviations_.end(), token) != abbreviations_.end();
  };

  std::size_t i = start;
  while (i < n) {
    const char32_t c = t[i];
    if (c == U'\n') {
      std::size_t j = i + 1;
      while (j < n && is_inline_space(t[j])) ++j;
      if (j < n && t[j] == U'\n') {
        emit(start, trim_back(t, start, i));
        start = skip_space(t, j);
        i = start;
        continue;
      }
      ++i;
      continue;
    }
    if (is_terminal(c)) {
      std::size_t j = i;
      while (j < n && is_terminal(t[j])) ++j;
      const bool single_period = (j - i == 1) && c == U'.';
      while (j < n && is_closing(t[j])) ++j;
      if (j < n && utf8::is_space(t[j])) {
        const std::size_t k = skip_space(t, j);
        if (k < n && starts_sentence(t[k]) && !(single_period && is_abbreviation(i))) {
          emit(start, j);
          start = k;
          i = k;
          continue;
        }
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(start, trim_back(t, start, n));
  return out;
}

std::vector<Sentence> split_sentences(std::string_view text) {
  static const RuleBasedSegmenter segmenter;
  return segmenter.split(text);
}

std::vector<Chunk> chunk_sentences(const std::vector<Sentence>& sentences, std::size_t size,
                                   ChunkMode mode, std::string_view post_text) {
  if (size == 0) throw std::invalid_argument("chunk size must be >= 1");
  std::vector<Chunk> out;
  if (sentences.empty()) return out;

  auto make = [&](std::size_t first, std::size_t last) {
    Chunk c;
    c.sentences.assign(sentences.begin() + static_cast<std::ptrdiff_t>(first),
                       sentences.begin() + static_cast<std::ptrdiff_t>(last));
    c.text = utf8::slice(post_text, c.sentences.front().start, c.sentences.back().end);
    c.index = out.size();
    out.push_back(std::move(c));
  };

  const std::size_t n = sentences.size();
  if (mode == ChunkMode::Disjoint) {
    for (std::size_t first = 0; first < n; first += size) make(first, std::min(n, first + size));
  } else if (n <= size) {
    make(0, n);
  } else {
    for (std::size_t first = 0; first + size <= n; ++first) make(first, first + size);
  }
  return out;
}

bool is_sentence_shaped(std::string_view span_text) {
  if (!utf8::is_valid(span_text)) return false;
  const std::u32string t = utf8::decode(span_text);
  const auto first = std::find_if_not(t.begin(), t.end(), utf8::is_space);
  if (first == t.end()) return false;
  const auto last = std::find_if_not(t.rbegin(), t.rend(), utf8::is_space);
  const char32_t tail = *last;
  const bool closes = is_terminal(tail) || tail == U'"' || tail == U'\'' ||
                      tail == U'”' || tail == U'’';
  return utf8::is_upper(*first) && closes;
}

std::size_t word_count(std::string_view text) {
  const std::u32string t = utf8::is_valid(text) ? utf8::decode(text) : std::u32string{};
  std::size_t n = 0;
  bool in_word = false;
  for (char32_t c : t) {
    const bool space = utf8::is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

SpanStats span_statistics(const std::vector<Timeline>& timelines, std::size_t short_threshold) {
  SpanStats stats;
  stats.short_threshold = short_threshold;
  for (const auto& timeline : timelines) {
    for (const auto& post : timeline.posts) {
      for (Label label : kLabels) {
        LabelSpanCounts& counts =
            label == Label::Adaptive ? stats.adaptive : stats.maladaptive;
        for (const auto& span : post.evidence(label)) {
          ++counts.total;
          if (!is_sentence_shaped(span)) ++counts.non_sentence;
          if (word_count(span) < short_threshold) ++counts.short_spans;
        }
      }
    }
  }
  if (stats.adaptive.total + stats.maladaptive.total == 0) throw NoGoldSpans();

  auto ratio = [](std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
  };
  stats.frac_non_sentence_adaptive = ratio(stats.adaptive.non_sentence, stats.adaptive.total);
  stats.frac_non_sentence_maladaptive =
      ratio(stats.maladaptive.non_sentence, stats.maladaptive.total);
  stats.frac_short_adaptive = ratio(stats.adaptive.short_spans, stats.adaptive.total);
  stats.frac_short_maladaptive = ratio(stats.maladaptive.short_spans, stats.maladaptive.total);
  return stats;
}

nlohmann::json to_json(const SpanStats& stats) {
  auto counts = [](const LabelSpanCounts& c) {
    return nlohmann::json{{"total", c.total}, {"non_sentence", c.non_sentence}, {"short", c.short_spans}};
  };
  return {
      {"frac_non_sentence_adaptive", stats.frac_non_sentence_adaptive},
      {"frac_non_sentence_maladaptive", stats.frac_non_sentence_maladaptive},
      {"frac_short_adaptive", stats.frac_short_adaptive},
      {"frac_short_maladaptive", stats.frac_short_maladaptive},
      {"short_threshold", stats.short_threshold},
      {"counts", {{"adaptive", counts(stats.adaptive)}, {"maladaptive", counts(stats.maladaptive)}}},
  };
}

std::string format_table(const SpanStats& stats) {
  std::string out;
  out += fmt::format("{:<12} {:>6} {:>14} {:>16}\n", "label", "spans", "non-sentence",
                     fmt::format("< {} words", stats.short_threshold));
  auto row = [&](std::string_view name, const LabelSpanCounts& c, double ns, double sh) {
    out += fmt::format("{:<12} {:>6} {:>7} ({:5.1f}%) {:>7} ({:5.1f}%)\n", name, c.total,
                       c.non_sentence, 100.0 * ns, c.short_spans, 100.0 * sh);
  };
  row("adaptive", stats.adaptive, stats.frac_non_sentence_adaptive, stats.frac_short_adaptive);
  row("maladaptive", stats.maladaptive, stats.frac_non_sentence_maladaptive,
      stats.frac_short_maladaptive);
  return out;
}

}  // namespace selfstate
