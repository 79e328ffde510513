#include "selfstate/commands.hpp"

#include <chrono>
#include <memory>

#include "selfstate/embedding.hpp"
#include "selfstate/errors.hpp"
#include "selfstate/io.hpp"
#include "selfstate/templates.hpp"

using nlohmann::json;

namespace selfstate {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::filesystem::path template_dir_of(const BackendSettings& s) {
  return s.template_dir ? *s.template_dir : default_template_dir();
}

std::unique_ptr<ResponseCache> open_cache(const BackendSettings& s) {
  std::optional<std::filesystem::path> path = s.cache;
  if (!path) path = cache_path_from_env();
  if (!path) return nullptr;
  return std::make_unique<ResponseCache>(*path);
}

// Rethrows a library error with a stage tag, keeping its code.
[[noreturn]] void rethrow_tagged(const std::string& tag) {
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), "[" + tag + "] " + e.what());
  } catch (const std::exception& e) {
    throw Error("Internal", "[" + tag + "] " + e.what());
  }
}

}  // namespace

std::vector<Timeline> take_sample(std::vector<Timeline> corpus, std::optional<std::size_t> n) {
  if (!n) return corpus;
  if (*n == 0) throw InvalidConfig("--sample must be >= 1");
  if (*n < corpus.size()) corpus.resize(*n);
  return corpus;
}

StrategyConfig resolve_strategy(const std::string& name, const json& overrides,
                                std::size_t concurrency) {
  json merged = to_json(strategy_preset(name));
  for (const char* key :
       {"model", "temperature", "max_tokens", "seed", "chunk_size", "chunk_mode"}) {
    if (overrides.contains(key)) merged[key] = overrides.at(key);
  }
  StrategyConfig config = strategy_config_from_json(merged);
  config.concurrency = concurrency;
  validate(config);
  return config;
}

RunOutcome run_with_client(const std::vector<Timeline>& corpus, const std::string& corpus_fp,
                           const StrategyConfig& config, const TemplateSet& templates,
                           const ChatClient& client, const std::filesystem::path& out) {
  const auto start = Clock::now();
  RunOutcome outcome;
  RunManifest& m = outcome.manifest;
  m.stage = "run";
  m.started_at = utc_timestamp();
  m.config = to_json(config);
  m.corpus_fingerprint = corpus_fp;
  m.backend_id = client.backend().id();
  const std::string method = method_key(config);
  m.run_id = make_run_id(method, m.config, corpus_fp, m.backend_id);

  const std::size_t hits0 = client.cache() ? client.cache()->hits() : 0;
  const std::size_t misses0 = client.cache() ? client.cache()->misses() : 0;

  outcome.run = run_strategy(corpus, config, templates, client);

  outcome.predictions.run_id = m.run_id;
  outcome.predictions.strategy = method;
  outcome.predictions.config = m.config;
  outcome.predictions.predictions = outcome.run.predictions;
  save_predictions(outcome.predictions, out);

  if (client.cache()) {
    m.cache_hits = client.cache()->hits() - hits0;
    m.cache_misses = client.cache()->misses() - misses0;
  }
  m.errors = outcome.run.post_errors;
  m.diagnostics = outcome.run.diagnostics;
  m.counters = {{"timelines", corpus.size()},
                {"sentences", outcome.run.sentences},
                {"sentences_after_filter", outcome.run.sentences_after_filter},
                {"importance_calls", outcome.run.importance_calls},
                {"classify_calls", outcome.run.classify_calls},
                {"chunk_calls", outcome.run.chunk_calls},
                {"predictions", outcome.run.predictions.size()}};
  m.outputs = {{"predictions", out.filename().string()}};
  m.finished_at = utc_timestamp();
  m.wall_time_s = seconds_since(start);
  save_manifest(m, manifest_path_for(out));
  outcome.exit_code = m.errors.empty() ? kExitSuccess : kExitPartial;
  return outcome;
}

RunOutcome cmd_run(const RunOptions& options) {
  validate(options.config);
  auto corpus = take_sample(load_corpus(options.input), options.sample);
  std::string fp = corpus_fingerprint(options.input);
  if (options.sample) fp += ":sample=" + std::to_string(*options.sample);
  const auto templates = TemplateSet::load(template_dir_of(options.backend));
  auto backend = make_backend(options.backend.backend, options.backend.retry);
  auto cache = open_cache(options.backend);
  ChatClient client(*backend, cache.get());
  return run_with_client(corpus, fp, options.config, templates, client, options.out);
}

EvaluationReport cmd_eval(const EvalCmdOptions& options) {
  const auto predictions = load_predictions(options.predictions);
  const auto corpus = take_sample(load_corpus(options.gold), options.sample);
  auto embedder = make_embedder(options.embedder);
  auto report = evaluate_run(predictions, corpus, *embedder, options.eval);
  if (options.out) save_report(report, *options.out);
  return report;
}

SpanStats cmd_stats(const std::filesystem::path& input, std::size_t short_threshold) {
  return span_statistics(load_corpus(input), short_threshold);
}

CompareOutcome cmd_compare(const std::vector<std::filesystem::path>& reports, bool force,
                           const std::optional<std::filesystem::path>& out) {
  std::vector<EvaluationReport> loaded;
  for (const auto& p : reports) loaded.push_back(load_report(p));
  CompareOutcome outcome;
  outcome.table = compare_reports(loaded, force);
  outcome.markdown = to_markdown(outcome.table);
  outcome.json = to_json(outcome.table);
  if (out) {
    auto md = *out;
    auto js = *out;
    md += ".md";
    js += ".json";
    write_file_atomic(md, outcome.markdown);
    write_file_atomic(js, outcome.json.dump(2) + "\n");
  }
  return outcome;
}

PipelineOutcome cmd_pipeline(const PipelineOptions& options) {
  if (options.strategies.empty()) throw InvalidConfig("pipeline needs at least one strategy");
  const auto start = Clock::now();
  PipelineOutcome outcome;
  RunManifest& m = outcome.manifest;
  m.stage = "pipeline";
  m.started_at = utc_timestamp();

  std::vector<StrategyConfig> configs;
  for (const auto& name : options.strategies) {
    configs.push_back(resolve_strategy(name, options.overrides, options.concurrency));
  }
  auto corpus = take_sample(load_corpus(options.input), options.sample);
  std::string fp = corpus_fingerprint(options.input);
  if (options.sample) fp += ":sample=" + std::to_string(*options.sample);
  const auto templates = TemplateSet::load(template_dir_of(options.backend));
  auto backend = make_backend(options.backend.backend, options.backend.retry);
  auto cache = open_cache(options.backend);
  ChatClient client(*backend, cache.get());
  auto embedder = make_embedder(options.embedder);

  std::filesystem::create_directories(options.out_dir);
  json chain = json::array();
  for (const auto& config : configs) {
    const std::string key = method_key(config);
    const auto pred_path = options.out_dir / (key + ".predictions.json");
    const auto report_path = options.out_dir / (key + ".report.json");

    RunOutcome run;
    try {
      run = run_with_client(corpus, fp, config, templates, client, pred_path);
    } catch (...) {
      rethrow_tagged("run:" + key);
    }

    EvaluationReport report;
    try {
      report = evaluate_run(run.predictions, corpus, *embedder, options.eval);
      save_report(report, report_path);
    } catch (...) {
      rethrow_tagged("eval:" + key);
    }

    RunManifest em;
    em.stage = "eval";
    em.run_id = report.run_id;
    em.config = {{"embedder", report.embedder_id},
                 {"direction", report.direction},
                 {"pair_kernel", report.pair_kernel},
                 {"idf", report.idf},
                 {"token_counting", report.token_counting}};
    em.corpus_fingerprint = fp;
    em.backend_id = report.embedder_id;
    em.diagnostics = report.warnings;
    em.outputs = {{"report", report_path.filename().string()}};
    em.started_at = em.finished_at = utc_timestamp();
    save_manifest(em, manifest_path_for(report_path));

    for (const auto& e : run.manifest.errors) m.errors.push_back(e);
    m.cache_hits += run.manifest.cache_hits;
    m.cache_misses += run.manifest.cache_misses;
    chain.push_back({{"strategy", key},
                     {"run_id", run.manifest.run_id},
                     {"predictions", pred_path.filename().string()},
                     {"report", report_path.filename().string()}});
    if (run.exit_code != kExitSuccess) outcome.exit_code = kExitPartial;
    outcome.runs.push_back(std::move(run));
    outcome.reports.push_back(std::move(report));
  }

  try {
    outcome.comparison.table = compare_reports(outcome.reports);
  } catch (...) {
    rethrow_tagged("compare");
  }
  outcome.comparison.markdown = to_markdown(outcome.comparison.table);
  outcome.comparison.json = to_json(outcome.comparison.table);
  write_file_atomic(options.out_dir / "comparison.md", outcome.comparison.markdown);
  write_file_atomic(options.out_dir / "comparison.json", outcome.comparison.json.dump(2) + "\n");

  json strategies = json::array();
  for (const auto& s : options.strategies) strategies.push_back(s);
  m.config = {{"strategies", std::move(strategies)},
              {"overrides", options.overrides},
              {"embedder", embedder->id()},
              {"direction", direction_setting(options.eval)},
              {"sample", options.sample ? json(*options.sample) : json(nullptr)}};
  m.corpus_fingerprint = fp;
  m.backend_id = backend->id();
  m.run_id = make_run_id("pipeline", m.config, fp, m.backend_id);
  m.outputs = {{"runs", std::move(chain)},
               {"comparison", {"comparison.md", "comparison.json"}}};
  m.finished_at = utc_timestamp();
  m.wall_time_s = seconds_since(start);
  save_manifest(m, options.out_dir / "pipeline.manifest.json");
  return outcome;
}

std::vector<Timeline> cmd_fixture(std::uint64_t seed, std::size_t n_timelines,
                                  std::size_t posts_per_timeline,
                                  const std::filesystem::path& out_dir,
                                  const FixtureOptions& options) {
  if (n_timelines == 0 || posts_per_timeline == 0) {
    throw InvalidConfig("fixture counts must be >= 1");
  }
  auto corpus = generate_fixture(seed, n_timelines, posts_per_timeline, options);
  save_corpus(corpus, out_dir);
  return corpus;
}

}  // namespace selfstate
