// selfstate: command line front end for the extraction workbench.
//
// Exit codes: 0 success, 1 partial failure (some posts failed), 2 usage,
// configuration or input error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "selfstate/commands.hpp"
#include "selfstate/errors.hpp"
#include "selfstate/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfstate;

namespace {

struct GlobalFlags {
  std::optional<fs::path> config_file;
  std::optional<fs::path> cache;
  std::optional<std::size_t> concurrency;
  bool verbose = false;
};

// Values from --config; command-line flags take precedence.
struct ConfigDefaults {
  json raw = json::object();

  template <typename T>
  std::optional<T> get(const char* key) const {
    if (!raw.contains(key) || raw[key].is_null()) return std::nullopt;
    try {
      return raw[key].get<T>();
    } catch (const json::exception& e) {
      throw InvalidConfig(fmt::format("config key '{}': {}", key, e.what()));
    }
  }
};

ConfigDefaults load_config(const GlobalFlags& g) {
  ConfigDefaults c;
  if (!g.config_file) return c;
  try {
    c.raw = json::parse(read_text_file(*g.config_file));
  } catch (const json::parse_error& e) {
    throw MalformedJson(g.config_file->string(), e.what());
  }
  if (!c.raw.is_object()) throw InvalidConfig("--config must hold a JSON object");
  return c;
}

template <typename T>
T pick(const std::optional<T>& flag, const std::optional<T>& config, T fallback) {
  if (flag) return *flag;
  if (config) return *config;
  return fallback;
}

BackendSettings backend_settings(const GlobalFlags& g, const ConfigDefaults& c,
                                 const std::optional<std::string>& backend,
                                 const std::optional<fs::path>& templates) {
  BackendSettings s;
  s.backend = pick(backend, c.get<std::string>("backend"), std::string("mock"));
  if (g.cache) {
    s.cache = g.cache;
  } else if (auto p = c.get<std::string>("cache")) {
    s.cache = fs::path(*p);
  }
  if (templates) {
    s.template_dir = templates;
  } else if (auto p = c.get<std::string>("templates")) {
    s.template_dir = fs::path(*p);
  }
  if (auto r = c.get<int>("retries")) s.retry.attempts = *r;
  return s;
}

json strategy_overrides(const ConfigDefaults& c) {
  json o = json::object();
  for (const char* key :
       {"model", "temperature", "max_tokens", "seed", "chunk_size", "chunk_mode"}) {
    if (c.raw.contains(key)) o[key] = c.raw[key];
  }
  return o;
}

struct EvalFlags {
  std::optional<std::string> embedder;
  std::optional<std::string> direction;
  std::optional<std::string> pair_kernel;
  std::optional<double> rescale;
  bool idf = false;
  std::optional<std::string> token_count;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--embedder", f.embedder, "mock | http:<url>");
  cmd->add_option("--direction", f.direction, "pred | gold | both")
      ->check(CLI::IsMember({"pred", "gold", "both"}));
  cmd->add_option("--pair-kernel", f.pair_kernel, "f1 | p | r")
      ->check(CLI::IsMember({"f1", "p", "r"}));
  cmd->add_option("--rescale", f.rescale, "Rescale scores against this baseline value");
  cmd->add_flag("--idf", f.idf, "Weight tokens by inverse document frequency over gold spans");
  cmd->add_option("--token-count", f.token_count, "provider | whitespace")
      ->check(CLI::IsMember({"provider", "whitespace"}));
}

EvalOptions eval_options(const EvalFlags& f, const ConfigDefaults& c) {
  EvalOptions o;
  const auto dir = pick(f.direction, c.get<std::string>("direction"), std::string("pred"));
  if (dir == "both") {
    o.directions = {Direction::OverPred, Direction::OverGold};
  } else if (auto d = direction_from_string(dir)) {
    o.directions = {*d};
  } else {
    throw InvalidConfig("unknown direction '" + dir + "'");
  }
  const auto kernel = pick(f.pair_kernel, c.get<std::string>("pair_kernel"), std::string("f1"));
  auto k = pair_kernel_from_string(kernel);
  if (!k) throw InvalidConfig("unknown pair kernel '" + kernel + "'");
  o.kernel = *k;
  o.idf = f.idf || c.get<bool>("idf").value_or(false);
  o.rescale_baseline = f.rescale ? f.rescale : c.get<double>("rescale_baseline");
  if (o.rescale_baseline && *o.rescale_baseline >= 1.0) {
    throw InvalidConfig("rescale baseline must be < 1");
  }
  const auto tc = pick(f.token_count, c.get<std::string>("token_count"), std::string("provider"));
  o.token_counting = tc == "whitespace" ? TokenCounting::Whitespace : TokenCounting::Provider;
  return o;
}

void print_diagnostics(const Diagnostics& d, bool verbose) {
  if (!verbose) return;
  for (const auto& x : d) std::cerr << "warning: " << x.code << ": " << x.message << "\n";
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("n/a");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-state evidence extraction workbench"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_file, "JSON file with default settings");
  app.add_option("--cache", g.cache, "Response cache file (JSON lines); also SELFSTATE_CACHE");
  app.add_option("--concurrency", g.concurrency, "Parallel backend requests")
      ->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Print diagnostics to stderr");

  // run
  auto* run = app.add_subcommand("run", "Run one extraction strategy over a corpus");
  std::string run_strategy;
  fs::path run_input;
  fs::path run_out;
  std::optional<std::string> run_backend;
  std::optional<fs::path> run_templates;
  std::optional<std::size_t> run_sample;
  std::optional<std::size_t> run_chunk_size;
  std::optional<std::string> run_chunk_mode;
  run->add_option("--strategy", run_strategy, "Method preset")->required();
  run->add_option("--input", run_input, "Corpus directory")->required();
  run->add_option("--out", run_out, "Predictions file")->required();
  run->add_option("--backend", run_backend, "mock | mock:<script.json> | http:<base_url>");
  run->add_option("--templates", run_templates, "Prompt template directory");
  run->add_option("--sample", run_sample, "Use the first N timelines");
  run->add_option("--chunk-size", run_chunk_size, "Sentences per chunk for span strategies");
  run->add_option("--chunk-mode", run_chunk_mode, "disjoint | sliding")
      ->check(CLI::IsMember({"disjoint", "sliding"}));

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against gold evidence");
  fs::path eval_pred;
  fs::path eval_gold;
  std::optional<fs::path> eval_out;
  std::optional<std::size_t> eval_sample;
  EvalFlags eval_flags;
  eval->add_option("--pred", eval_pred, "Predictions file")->required();
  eval->add_option("--gold", eval_gold, "Corpus directory")->required();
  eval->add_option("--out", eval_out, "Report file (printed to stdout when omitted)");
  eval->add_option("--sample", eval_sample, "Use the first N timelines");
  add_eval_flags(eval, eval_flags);

  // stats
  auto* stats = app.add_subcommand("stats", "Gold span shape statistics");
  fs::path stats_input;
  std::size_t short_threshold = 7;
  bool stats_json = false;
  stats->add_option("--input", stats_input, "Corpus directory")->required();
  stats->add_option("--short-threshold", short_threshold, "Spans under this many words are short");
  stats->add_flag("--json", stats_json, "Print JSON instead of a table");

  // compare
  auto* compare = app.add_subcommand("compare", "Side-by-side table of evaluation reports");
  std::vector<fs::path> compare_reports_in;
  std::optional<fs::path> compare_out;
  bool compare_force = false;
  bool compare_json = false;
  compare->add_option("reports", compare_reports_in, "Report files")->required();
  compare->add_option("--out", compare_out, "Write <out>.md and <out>.json");
  compare->add_flag("--force", compare_force, "Compare reports with differing settings");
  compare->add_flag("--json", compare_json, "Print JSON instead of markdown");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "run, eval and compare several strategies");
  std::vector<std::string> pipe_strategies;
  fs::path pipe_input;
  fs::path pipe_out;
  std::optional<std::string> pipe_backend;
  std::optional<fs::path> pipe_templates;
  std::optional<std::size_t> pipe_sample;
  EvalFlags pipe_flags;
  pipeline->add_option("--strategies", pipe_strategies, "Comma-separated method presets")
      ->delimiter(',')
      ->required();
  pipeline->add_option("--input", pipe_input, "Corpus directory")->required();
  pipeline->add_option("--out-dir", pipe_out, "Output directory")->required();
  pipeline->add_option("--backend", pipe_backend, "mock | mock:<script.json> | http:<base_url>");
  pipeline->add_option("--templates", pipe_templates, "Prompt template directory");
  pipeline->add_option("--sample", pipe_sample, "Use the first N timelines");
  add_eval_flags(pipeline, pipe_flags);

  // fixture
  auto* fixture = app.add_subcommand("fixture", "Generate a synthetic corpus");
  std::uint64_t fx_seed = 7;
  std::size_t fx_timelines = 5;
  std::size_t fx_posts = 3;
  fs::path fx_out;
  FixtureOptions fx_options;
  fixture->add_option("--seed", fx_seed, "Generator seed");
  fixture->add_option("--timelines", fx_timelines, "Number of timelines");
  fixture->add_option("--posts", fx_posts, "Posts per timeline");
  fixture->add_option("--out", fx_out, "Output directory")->required();
  fixture->add_option("--non-sentence-adaptive", fx_options.non_sentence_fraction_adaptive,
                      "Fraction of adaptive spans planted as fragments")
      ->check(CLI::Range(0.0, 1.0));
  fixture->add_option("--non-sentence-maladaptive", fx_options.non_sentence_fraction_maladaptive,
                      "Fraction of maladaptive spans planted as fragments")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const ConfigDefaults cfg = load_config(g);
    const std::size_t concurrency =
        pick(g.concurrency, cfg.get<std::size_t>("concurrency"), std::size_t{4});

    if (*run) {
      json overrides = strategy_overrides(cfg);
      if (run_chunk_size) overrides["chunk_size"] = *run_chunk_size;
      if (run_chunk_mode) overrides["chunk_mode"] = *run_chunk_mode;
      RunOptions o;
      o.input = run_input;
      o.out = run_out;
      o.config = resolve_strategy(run_strategy, overrides, concurrency);
      o.backend = backend_settings(g, cfg, run_backend, run_templates);
      o.sample = run_sample;
      if (o.sample && *o.sample == 0) throw InvalidConfig("--sample must be >= 1");
      const auto outcome = cmd_run(o);
      print_diagnostics(outcome.run.diagnostics, g.verbose);
      for (const auto& e : outcome.run.post_errors) {
        std::cerr << "post error: " << e.post_id << ": " << e.code << ": " << e.message << "\n";
      }
      std::cerr << fmt::format("{}: {} predictions, {} post errors, cache {} hits / {} misses\n",
                               outcome.manifest.run_id, outcome.predictions.predictions.size(),
                               outcome.run.post_errors.size(), outcome.manifest.cache_hits,
                               outcome.manifest.cache_misses);
      return outcome.exit_code;
    }

    if (*eval) {
      EvalCmdOptions o;
      o.predictions = eval_pred;
      o.gold = eval_gold;
      o.embedder = pick(eval_flags.embedder, cfg.get<std::string>("embedder"), std::string("mock"));
      o.eval = eval_options(eval_flags, cfg);
      o.sample = eval_sample;
      if (o.sample && *o.sample == 0) throw InvalidConfig("--sample must be >= 1");
      o.out = eval_out;
      const auto report = cmd_eval(o);
      print_diagnostics(report.warnings, g.verbose);
      if (eval_out) {
        std::cerr << fmt::format("{}: overall {} (adaptive {}, maladaptive {}), weighted {}\n",
                                 report.method_label, fmt_opt(report.overall_recall()),
                                 fmt_opt(report.recall_adaptive()),
                                 fmt_opt(report.recall_maladaptive()),
                                 fmt_opt(report.weighted_overall()));
      } else {
        std::cout << to_json(report).dump(2) << "\n";
      }
      return kExitSuccess;
    }

    if (*stats) {
      const auto s = cmd_stats(stats_input, short_threshold);
      std::cout << (stats_json ? to_json(s).dump(2) + "\n" : format_table(s));
      return kExitSuccess;
    }

    if (*compare) {
      const auto outcome = cmd_compare(compare_reports_in, compare_force, compare_out);
      std::cout << (compare_json ? outcome.json.dump(2) + "\n" : outcome.markdown);
      return kExitSuccess;
    }

    if (*pipeline) {
      PipelineOptions o;
      o.input = pipe_input;
      o.out_dir = pipe_out;
      o.strategies = pipe_strategies;
      o.overrides = strategy_overrides(cfg);
      o.concurrency = concurrency;
      o.backend = backend_settings(g, cfg, pipe_backend, pipe_templates);
      o.embedder = pick(pipe_flags.embedder, cfg.get<std::string>("embedder"), std::string("mock"));
      o.eval = eval_options(pipe_flags, cfg);
      o.sample = pipe_sample;
      if (o.sample && *o.sample == 0) throw InvalidConfig("--sample must be >= 1");
      const auto outcome = cmd_pipeline(o);
      for (const auto& run_outcome : outcome.runs) {
        print_diagnostics(run_outcome.run.diagnostics, g.verbose);
      }
      for (const auto& e : outcome.manifest.errors) {
        std::cerr << "post error: " << e.post_id << ": " << e.code << ": " << e.message << "\n";
      }
      std::cout << outcome.comparison.markdown;
      return outcome.exit_code;
    }

    if (*fixture) {
      const auto corpus = cmd_fixture(fx_seed, fx_timelines, fx_posts, fx_out, fx_options);
      std::cerr << fmt::format("wrote {} timelines to {}\n", corpus.size(), fx_out.string());
      return kExitSuccess;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
