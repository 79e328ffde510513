#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/corpus.hpp"
#include "selfstate/diagnostics.hpp"
#include "selfstate/errors.hpp"
#include "selfstate/llm_backend.hpp"
#include "selfstate/segment.hpp"
#include "selfstate/templates.hpp"

namespace selfstate {

/// Which extraction method to run and how to talk to the model.
struct StrategyConfig {
  /// Template driving the extraction step: baseline, context, span_id or
  /// span_id_boost. (`importance` is the filter's template, never a strategy.)
  TemplateId strategy = TemplateId::Baseline;
  bool use_context = false;
  bool use_importance_filter = false;
  std::size_t chunk_size = 2;
  ChunkMode chunk_mode = ChunkMode::Disjoint;

  std::string model = "gemma-2-9b-it";
  double temperature = 0.0;
  std::int64_t max_tokens = 512;
  std::optional<std::int64_t> seed = 0;
  std::size_t concurrency = 4;
};

/// Named method presets: baseline, context, context_importance
/// (also "context+importance"), baseline_importance, span_id, span_id_boost.
StrategyConfig strategy_preset(std::string_view name);
std::vector<std::string> strategy_preset_names();

/// Throws InvalidConfig for combinations outside the method matrix.
void validate(const StrategyConfig& config);

bool is_sentence_level(const StrategyConfig& config) noexcept;

/// Stable machine key, e.g. "context_importance".
std::string method_key(const StrategyConfig& config);
/// Human row label, e.g. "Baseline (Context + Importance)".
std::string method_label(const StrategyConfig& config);
std::string method_label(std::string_view method_key);

nlohmann::json to_json(const StrategyConfig& config);
/// Missing keys keep their defaults.
StrategyConfig strategy_config_from_json(const nlohmann::json& j);

struct PredictedSpan {
  std::string post_id;
  std::string text;
  Label label = Label::Adaptive;
  TemplateId strategy = TemplateId::Baseline;
  std::optional<std::size_t> chunk_index;

  bool operator==(const PredictedSpan&) const = default;
};

/// A backend failure annotated with where in the corpus it happened. Keeps
/// the original error code.
class StrategyCallError : public Error {
 public:
  StrategyCallError(const Error& cause, std::string post_id, std::size_t unit_index)
      : Error(cause.code(), "post " + post_id + " unit " + std::to_string(unit_index) + ": " +
                                cause.what()),
        post_id_(std::move(post_id)),
        unit_index_(unit_index) {}
  const std::string& post_id() const noexcept { return post_id_; }
  std::size_t unit_index() const noexcept { return unit_index_; }

 private:
  std::string post_id_;
  std::size_t unit_index_;
};

// Response parsing -----------------------------------------------------------

/// Case-insensitive, word-bounded. "maladaptive" takes precedence over
/// "adaptive" anywhere in the response; explicit declines ("cannot
/// determine", "neither adaptive nor maladaptive") and responses without
/// either word yield nullopt.
std::optional<Label> parse_label(std::string_view response);

/// Leading "yes"/"important" -> true, leading "no"/"not"/"unimportant" ->
/// false, anything else -> true (fail-open).
bool parse_importance(std::string_view response);

/// Extracts the first JSON array of {"text", "label"} objects and keeps items
/// whose text is a substring of the chunk (exact, then case-insensitive with
/// the chunk's casing restored). Throws MalformedSpanResponse when no array
/// can be parsed.
std::vector<PredictedSpan> parse_span_response(std::string_view response, const Chunk& chunk,
                                               std::string_view post_id, TemplateId strategy,
                                               Diagnostics* diagnostics = nullptr);

// Request construction ---------------------------------------------------------

/// Sentences 0..i-1 joined by single spaces ("" for the first sentence).
std::string build_context(const std::vector<Sentence>& sentences, std::size_t i);

ChatRequest make_request(const StrategyConfig& config, const RenderedPrompt& prompt);

ChatRequest build_classify_request(const Sentence& sentence, std::string_view context,
                                   const StrategyConfig& config, const TemplateSet& templates);
ChatRequest build_importance_request(const Sentence& sentence, const StrategyConfig& config,
                                     const TemplateSet& templates);
ChatRequest build_span_request(const Chunk& chunk, const StrategyConfig& config,
                               const TemplateSet& templates);

// Single-unit operations -------------------------------------------------------

/// Classifies one sentence (with context when the config asks for it).
/// Backend errors are rethrown as StrategyCallError.
std::optional<PredictedSpan> classify_sentence(const Sentence& sentence, std::string_view context,
                                               std::string_view post_id,
                                               const StrategyConfig& config,
                                               const TemplateSet& templates,
                                               const ChatClient& client);

/// Context-free importance check for one sentence.
bool importance_filter(const Sentence& sentence, const StrategyConfig& config,
                       const TemplateSet& templates, const ChatClient& client);

/// Span identification over one chunk. A response without a parseable array
/// yields no spans and a MalformedSpanResponse diagnostic.
std::vector<PredictedSpan> span_identify(const Chunk& chunk, std::string_view post_id,
                                         const StrategyConfig& config,
                                         const TemplateSet& templates, const ChatClient& client,
                                         Diagnostics* diagnostics = nullptr);

// Whole-timeline orchestration ---------------------------------------------------

struct PostError {
  std::string post_id;
  std::string code;
  std::string message;
};

struct StrategyRun {
  std::vector<PredictedSpan> predictions;
  std::vector<PostError> post_errors;
  Diagnostics diagnostics;
  std::size_t sentences = 0;
  std::size_t sentences_after_filter = 0;
  std::size_t importance_calls = 0;
  std::size_t classify_calls = 0;
  std::size_t chunk_calls = 0;

  void merge(StrategyRun other);
};

/// Segments every post, optionally importance-filters, then classifies
/// sentences or identifies spans per chunk. Calls within a stage run through
/// run_batch with `config.concurrency` workers; output is ordered by post and
/// position. A post whose calls fail is skipped and listed in post_errors.
StrategyRun run_strategy(const Timeline& timeline, const StrategyConfig& config,
                         const TemplateSet& templates, const ChatClient& client,
                         const Segmenter& segmenter = RuleBasedSegmenter());

StrategyRun run_strategy(const std::vector<Timeline>& timelines, const StrategyConfig& config,
                         const TemplateSet& templates, const ChatClient& client,
                         const Segmenter& segmenter = RuleBasedSegmenter());

}  // namespace selfstate
