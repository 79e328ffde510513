#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/diagnostics.hpp"

namespace selfstate {

enum class Label { Adaptive, Maladaptive };

inline constexpr Label kLabels[] = {Label::Adaptive, Label::Maladaptive};

/// "adaptive" / "maladaptive".
std::string_view to_string(Label label) noexcept;
/// Exact lowercase names only; anything else yields nullopt.
std::optional<Label> label_from_string(std::string_view name) noexcept;

struct Post {
  std::string post_id;
  std::string text;
  std::vector<std::string> adaptive_evidence;
  std::vector<std::string> maladaptive_evidence;
  std::string summary;
  std::optional<std::int64_t> wellbeing_score;

  const std::vector<std::string>& evidence(Label label) const {
    return label == Label::Adaptive ? adaptive_evidence : maladaptive_evidence;
  }

  bool operator==(const Post&) const = default;
};

struct Timeline {
  std::string timeline_id;
  std::string summary;
  std::vector<Post> posts;

  bool operator==(const Timeline&) const = default;
};

/// Gold evidence resolved to character (scalar value) offsets, end exclusive.
struct EvidenceSpan {
  std::string post_id;
  Label label = Label::Adaptive;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const EvidenceSpan&) const = default;
};

// JSON mapping for the one-file-per-timeline schema. Parsing validates field
// types and the Timeline invariants; unknown keys are ignored.
nlohmann::json to_json(const Timeline& timeline);
Timeline timeline_from_json(const nlohmann::json& j, const std::string& source = "<memory>");

/// Loads every `*.json` file in `dir`, sorted by filename.
/// Throws EmptyDirectory, MalformedJson or SchemaViolation.
std::vector<Timeline> load_corpus(const std::filesystem::path& dir);

/// Writes one `<timeline_id>.json` per timeline (pretty printed, UTF-8).
void save_corpus(const std::vector<Timeline>& timelines, const std::filesystem::path& dir);
void save_timeline(const Timeline& timeline, const std::filesystem::path& file);

/// Resolves each evidence string to its leftmost exact occurrence. Strings
/// that do not occur verbatim are skipped and reported as EvidenceNotFound.
/// Output is ordered by (start, end).
std::vector<EvidenceSpan> locate_evidence(const Post& post,
                                          Diagnostics* diagnostics = nullptr);

/// Content hash over file names and bytes of every timeline file in `dir`.
std::string corpus_fingerprint(const std::filesystem::path& dir);
/// Content hash over the canonical JSON serialization of `timelines`.
std::string corpus_fingerprint(const std::vector<Timeline>& timelines);

// Synthetic corpora ---------------------------------------------------------

struct FixtureOptions {
  std::size_t adaptive_spans_per_post = 2;
  std::size_t maladaptive_spans_per_post = 2;
  std::size_t filler_sentences_min = 1;
  std::size_t filler_sentences_max = 3;
  /// Fraction of gold spans (per label, corpus-wide) that are planted as
  /// fragments rather than whole sentences. The planted count is
  /// round(fraction * total).
  double non_sentence_fraction_adaptive = 0.7;
  double non_sentence_fraction_maladaptive = 0.7;
};

/// Deterministic template-generated corpus. Identical arguments yield
/// identical timelines on every platform.
std::vector<Timeline> generate_fixture(std::uint64_t seed, std::size_t n_timelines,
                                       std::size_t posts_per_timeline,
                                       const FixtureOptions& options = {});

/// Exact number of fragment-shaped spans the generator plants for a label.
std::size_t planned_non_sentence_spans(std::size_t total_spans, double fraction);

}  // namespace selfstate
