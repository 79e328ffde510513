#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfstate/corpus.hpp"
#include "selfstate/llm_backend.hpp"
#include "selfstate/metrics.hpp"
#include "selfstate/predictions.hpp"
#include "selfstate/report.hpp"
#include "selfstate/segment.hpp"
#include "selfstate/strategies.hpp"

// Library-level implementations of the CLI subcommands. The command line tool
// only parses arguments and maps outcomes to exit codes.
namespace selfstate {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

/// Settings shared by every command that talks to a chat backend.
struct BackendSettings {
  std::string backend = "mock";
  std::optional<std::filesystem::path> cache;
  std::optional<std::filesystem::path> template_dir;
  RetryPolicy retry;
};

struct RunOptions {
  std::filesystem::path input;
  std::filesystem::path out;
  StrategyConfig config;
  BackendSettings backend;
  /// Use only the first N timelines (by filename order) when set.
  std::optional<std::size_t> sample;
};

struct RunOutcome {
  PredictionFile predictions;
  RunManifest manifest;
  StrategyRun run;
  int exit_code = kExitSuccess;
};

/// Runs one strategy over the corpus and writes `out` plus
/// `out.manifest.json`. Exit code is 0 iff no post failed.
RunOutcome cmd_run(const RunOptions& options);

/// Same, against an already-open client and corpus (used by the pipeline so
/// all stages share one cache).
RunOutcome run_with_client(const std::vector<Timeline>& corpus, const std::string& corpus_fp,
                           const StrategyConfig& config, const TemplateSet& templates,
                           const ChatClient& client, const std::filesystem::path& out);

struct EvalCmdOptions {
  std::filesystem::path predictions;
  std::filesystem::path gold;
  std::string embedder = "mock";
  EvalOptions eval;
  std::optional<std::size_t> sample;
  std::optional<std::filesystem::path> out;
};

EvaluationReport cmd_eval(const EvalCmdOptions& options);

SpanStats cmd_stats(const std::filesystem::path& input, std::size_t short_threshold = 7);

struct CompareOutcome {
  ComparisonTable table;
  std::string markdown;
  nlohmann::json json;
};

/// Loads reports, builds the table, and writes `<out>.md` / `<out>.json` when
/// `out` is set.
CompareOutcome cmd_compare(const std::vector<std::filesystem::path>& reports, bool force = false,
                           const std::optional<std::filesystem::path>& out = std::nullopt);

struct PipelineOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  std::vector<std::string> strategies;
  /// Applied on top of each preset: model, temperature, max_tokens, seed,
  /// chunk_size, chunk_mode, concurrency.
  nlohmann::json overrides = nlohmann::json::object();
  std::size_t concurrency = 4;
  BackendSettings backend;
  std::string embedder = "mock";
  EvalOptions eval;
  std::optional<std::size_t> sample;
};

struct PipelineOutcome {
  std::vector<RunOutcome> runs;
  std::vector<EvaluationReport> reports;
  CompareOutcome comparison;
  RunManifest manifest;
  int exit_code = kExitSuccess;
};

/// run -> eval -> compare for each strategy, one shared cache. Writes
/// `<key>.predictions.json`, `<key>.report.json`, their manifests,
/// `comparison.md`, `comparison.json` and `pipeline.manifest.json` into
/// `out_dir`. Stage failures are rethrown with a "[stage:strategy]" prefix.
PipelineOutcome cmd_pipeline(const PipelineOptions& options);

/// Writes a synthetic corpus, one file per timeline.
std::vector<Timeline> cmd_fixture(std::uint64_t seed, std::size_t n_timelines,
                                  std::size_t posts_per_timeline,
                                  const std::filesystem::path& out_dir,
                                  const FixtureOptions& options = {});

/// Builds a strategy config from a preset name plus JSON overrides.
StrategyConfig resolve_strategy(const std::string& name, const nlohmann::json& overrides,
                                std::size_t concurrency);

/// First N timelines; N must be >= 1.
std::vector<Timeline> take_sample(std::vector<Timeline> corpus, std::optional<std::size_t> n);

}  // namespace selfstate
