#include "selfstate/strategies.hpp"

#include <algorithm>
#include <array>

#include "selfstate/utf8.hpp"

using nlohmann::json;

namespace selfstate {

// Configuration ----------------------------------------------------------------

StrategyConfig strategy_preset(std::string_view name) {
  StrategyConfig c;
  if (name == "baseline") {
    c.strategy = TemplateId::Baseline;
  } else if (name == "baseline_importance" || name == "baseline+importance") {
    c.strategy = TemplateId::Baseline;
    c.use_importance_filter = true;
  } else if (name == "context") {
    c.strategy = TemplateId::Context;
    c.use_context = true;
  } else if (name == "context_importance" || name == "context+importance") {
    c.strategy = TemplateId::Context;
    c.use_context = true;
    c.use_importance_filter = true;
  } else if (name == "span_id") {
    c.strategy = TemplateId::SpanId;
  } else if (name == "span_id_boost") {
    c.strategy = TemplateId::SpanIdBoost;
  } else {
    throw InvalidConfig("unknown strategy '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> strategy_preset_names() {
  return {"baseline", "context", "context_importance", "baseline_importance", "span_id",
          "span_id_boost"};
}

bool is_sentence_level(const StrategyConfig& config) noexcept {
  return config.strategy == TemplateId::Baseline || config.strategy == TemplateId::Context;
}

void validate(const StrategyConfig& config) {
  if (config.strategy == TemplateId::Importance) {
    throw InvalidConfig("importance is a filter, not an extraction strategy");
  }
  if (config.use_importance_filter && !is_sentence_level(config)) {
    throw InvalidConfig("the importance filter only applies to sentence-level strategies");
  }
  if (config.use_context && config.strategy != TemplateId::Context) {
    throw InvalidConfig("use_context requires the context template");
  }
  if (config.strategy == TemplateId::Context && !config.use_context) {
    throw InvalidConfig("the context template needs use_context");
  }
  if (config.chunk_size == 0) throw InvalidConfig("chunk_size must be >= 1");
  if (config.concurrency == 0) throw InvalidConfig("concurrency must be >= 1");
  if (!(config.temperature >= 0.0)) throw InvalidConfig("temperature must be >= 0");
  if (config.max_tokens < 1) throw InvalidConfig("max_tokens must be >= 1");
}

std::string method_key(const StrategyConfig& config) {
  switch (config.strategy) {
    case TemplateId::Baseline:
      return config.use_importance_filter ? "baseline_importance" : "baseline";
    case TemplateId::Context:
      return config.use_importance_filter ? "context_importance" : "context";
    case TemplateId::SpanId: return "span_id";
    case TemplateId::SpanIdBoost: return "span_id_boost";
    case TemplateId::Importance: break;
  }
  return "importance";
}

std::string method_label(std::string_view key) {
  if (key == "baseline") return "Baseline";
  if (key == "baseline_importance") return "Baseline (Importance)";
  if (key == "context") return "Baseline (Context)";
  if (key == "context_importance") return "Baseline (Context + Importance)";
  if (key == "span_id") return "LLM Span ID";
  if (key == "span_id_boost") return "LLM Span ID (Adaptive Boost)";
  return std::string(key);
}

std::string method_label(const StrategyConfig& config) { return method_label(method_key(config)); }

json to_json(const StrategyConfig& c) {
  return {
      {"strategy", to_string(c.strategy)},
      {"use_context", c.use_context},
      {"use_importance_filter", c.use_importance_filter},
      {"chunk_size", c.chunk_size},
      {"chunk_mode", to_string(c.chunk_mode)},
      {"model", c.model},
      {"temperature", c.temperature},
      {"max_tokens", c.max_tokens},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
  };
}

StrategyConfig strategy_config_from_json(const json& j) {
  StrategyConfig c;
  try {
    if (j.contains("strategy")) {
      const auto name = j.at("strategy").get<std::string>();
      auto id = template_id_from_string(name);
      if (!id) throw InvalidConfig("unknown strategy template '" + name + "'");
      c.strategy = *id;
    }
    c.use_context = j.value("use_context", c.use_context);
    c.use_importance_filter = j.value("use_importance_filter", c.use_importance_filter);
    c.chunk_size = j.value("chunk_size", c.chunk_size);
    if (j.contains("chunk_mode")) {
      auto mode = chunk_mode_from_string(j.at("chunk_mode").get<std::string>());
      if (!mode) throw InvalidConfig("unknown chunk_mode");
      c.chunk_mode = *mode;
    }
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    if (j.contains("seed")) {
      c.seed = j["seed"].is_null() ? std::nullopt : std::optional(j["seed"].get<std::int64_t>());
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad strategy config: ") + e.what());
  }
  return c;
}

// Parsing ----------------------------------------------------------------------

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool contains_word(std::string_view haystack, std::string_view word) {
  for (auto pos = haystack.find(word); pos != std::string_view::npos;
       pos = haystack.find(word, pos + 1)) {
    const bool left = pos == 0 || !is_ascii_alpha(haystack[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right = end == haystack.size() || !is_ascii_alpha(haystack[end]);
    if (left && right) return true;
  }
  return false;
}

constexpr std::array<std::string_view, 9> kDeclines{
    "cannot determine", "can't determine", "cannot classify", "can't classify",
    "unable to determine", "unable to classify", "neither adaptive nor maladaptive",
    "neither maladaptive nor adaptive", "not enough information",
};

}  // namespace

std::optional<Label> parse_label(std::string_view response) {
  const std::string low = lower_ascii(response);
  for (auto phrase : kDeclines) {
    if (low.find(phrase) != std::string::npos) return std::nullopt;
  }
  if (contains_word(low, "maladaptive")) return Label::Maladaptive;
  if (contains_word(low, "adaptive")) return Label::Adaptive;
  return std::nullopt;
}

bool parse_importance(std::string_view response) {
  const std::string low = lower_ascii(response);
  std::size_t i = 0;
  while (i < low.size() && !is_ascii_alpha(low[i])) ++i;
  std::size_t j = i;
  while (j < low.size() && is_ascii_alpha(low[j])) ++j;
  const std::string_view first = std::string_view(low).substr(i, j - i);
  if (first == "yes" || first == "important") return true;
  if (first == "no" || first == "not" || first == "unimportant") return false;
  return true;
}

namespace {

// End (exclusive) of the bracketed array starting at `open`, honoring JSON
// string literals, or npos when unbalanced.
std::size_t matching_bracket(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_json_array(std::string_view s) {
  for (auto open = s.find('['); open != std::string_view::npos; open = s.find('[', open + 1)) {
    const auto close = matching_bracket(s, open);
    if (close == std::string_view::npos) continue;
    json j = json::parse(s.substr(open, close - open), nullptr, false);
    if (!j.is_discarded() && j.is_array()) return j;
  }
  return std::nullopt;
}

// Locates `needle` in `haystack`, exactly or ignoring case; returns the
// matching slice of `haystack` in its original casing.
std::optional<std::string> find_in_chunk(const std::string& haystack, const std::string& needle) {
  if (haystack.find(needle) != std::string::npos) return needle;
  if (!utf8::is_valid(needle)) return std::nullopt;
  const std::u32string hay = utf8::decode(haystack);
  const std::u32string pat = utf8::decode(needle);
  const auto pos = utf8::to_lower(hay).find(utf8::to_lower(pat));
  if (pos == std::u32string::npos) return std::nullopt;
  return utf8::encode(std::u32string_view(hay).substr(pos, pat.size()));
}

}  // namespace

std::vector<PredictedSpan> parse_span_response(std::string_view response, const Chunk& chunk,
                                               std::string_view post_id, TemplateId strategy,
                                               Diagnostics* diagnostics) {
  const auto array = first_json_array(response);
  if (!array) {
    throw MalformedSpanResponse("no JSON array in response for post " + std::string(post_id) +
                                " chunk " + std::to_string(chunk.index));
  }
  std::vector<PredictedSpan> out;
  for (const json& item : *array) {
    if (!item.is_object() || !item.contains("text") || !item["text"].is_string() ||
        !item.contains("label") || !item["label"].is_string()) {
      report(diagnostics, "MalformedSpanItem",
             "post " + std::string(post_id) + ": skipped item " + item.dump());
      continue;
    }
    const std::string text = item["text"].get<std::string>();
    const auto label = parse_label(item["label"].get<std::string>());
    if (!label) {
      report(diagnostics, "UnknownSpanLabel",
             "post " + std::string(post_id) + ": unlabeled span \"" + text + "\"");
      continue;
    }
    std::optional<std::string> found;
    if (!text.empty()) found = find_in_chunk(chunk.text, text);
    if (!found) {
      report(diagnostics, "HallucinatedSpan",
             "post " + std::string(post_id) + ": span not in chunk: \"" + text + "\"");
      continue;
    }
    out.push_back({std::string(post_id), std::move(*found), *label, strategy, chunk.index});
  }
  return out;
}

// Requests -------------------------------------------------------------------

std::string build_context(const std::vector<Sentence>& sentences, std::size_t i) {
  std::string out;
  for (std::size_t k = 0; k < i && k < sentences.size(); ++k) {
    if (k > 0) out.push_back(' ');
    out += sentences[k].text;
  }
  return out;
}

ChatRequest make_request(const StrategyConfig& config, const RenderedPrompt& prompt) {
  ChatRequest r;
  r.model = config.model;
  r.temperature = config.temperature;
  r.max_tokens = config.max_tokens;
  r.seed = config.seed;
  if (!prompt.system.empty()) r.messages.push_back({Role::System, prompt.system});
  r.messages.push_back({Role::User, prompt.user});
  return r;
}

ChatRequest build_classify_request(const Sentence& sentence, std::string_view context,
                                   const StrategyConfig& config, const TemplateSet& templates) {
  Bindings b{{"sentence", sentence.text}};
  if (config.use_context) b.emplace("context", std::string(context));
  return make_request(config, render_prompt(templates.get(config.strategy), b));
}

ChatRequest build_importance_request(const Sentence& sentence, const StrategyConfig& config,
                                     const TemplateSet& templates) {
  return make_request(config,
                      render_prompt(templates.get(TemplateId::Importance), {{"sentence", sentence.text}}));
}

ChatRequest build_span_request(const Chunk& chunk, const StrategyConfig& config,
                               const TemplateSet& templates) {
  return make_request(config, render_prompt(templates.get(config.strategy), {{"chunk", chunk.text}}));
}

// Single units -----------------------------------------------------------------

namespace {

ChatResponse call(const ChatClient& client, const ChatRequest& request, std::string_view post_id,
                  std::size_t unit) {
  try {
    return client.complete(request);
  } catch (const StrategyCallError&) {
    throw;
  } catch (const Error& e) {
    throw StrategyCallError(e, std::string(post_id), unit);
  }
}

std::optional<PredictedSpan> interpret_classification(std::string_view response,
                                                      const Sentence& sentence,
                                                      std::string_view post_id,
                                                      const StrategyConfig& config) {
  const auto label = parse_label(response);
  if (!label) return std::nullopt;
  return PredictedSpan{std::string(post_id), sentence.text, *label, config.strategy, std::nullopt};
}

std::vector<PredictedSpan> interpret_spans(std::string_view response, const Chunk& chunk,
                                           std::string_view post_id, const StrategyConfig& config,
                                           Diagnostics* diagnostics) {
  try {
    return parse_span_response(response, chunk, post_id, config.strategy, diagnostics);
  } catch (const MalformedSpanResponse& e) {
    report(diagnostics, e.code(), e.what());
    return {};
  }
}

}  // namespace

std::optional<PredictedSpan> classify_sentence(const Sentence& sentence, std::string_view context,
                                               std::string_view post_id,
                                               const StrategyConfig& config,
                                               const TemplateSet& templates,
                                               const ChatClient& client) {
  const auto request = build_classify_request(sentence, context, config, templates);
  const auto response = call(client, request, post_id, sentence.index);
  return interpret_classification(response.content, sentence, post_id, config);
}

bool importance_filter(const Sentence& sentence, const StrategyConfig& config,
                       const TemplateSet& templates, const ChatClient& client) {
  return parse_importance(client.complete(build_importance_request(sentence, config, templates)).content);
}

std::vector<PredictedSpan> span_identify(const Chunk& chunk, std::string_view post_id,
                                         const StrategyConfig& config,
                                         const TemplateSet& templates, const ChatClient& client,
                                         Diagnostics* diagnostics) {
  const auto response = call(client, build_span_request(chunk, config, templates), post_id, chunk.index);
  return interpret_spans(response.content, chunk, post_id, config, diagnostics);
}

// Orchestration ----------------------------------------------------------------

void StrategyRun::merge(StrategyRun other) {
  predictions.insert(predictions.end(), std::make_move_iterator(other.predictions.begin()),
                     std::make_move_iterator(other.predictions.end()));
  post_errors.insert(post_errors.end(), other.post_errors.begin(), other.post_errors.end());
  diagnostics.insert(diagnostics.end(), other.diagnostics.begin(), other.diagnostics.end());
  sentences += other.sentences;
  sentences_after_filter += other.sentences_after_filter;
  importance_calls += other.importance_calls;
  classify_calls += other.classify_calls;
  chunk_calls += other.chunk_calls;
}

namespace {

struct PostWork {
  const Post* post = nullptr;
  std::vector<Sentence> sentences;
  std::vector<bool> keep;
  std::optional<PostError> error;
};

// Stage bookkeeping: which post and unit each request belongs to.
struct Pending {
  std::size_t post = 0;
  std::size_t unit = 0;
};

void record_failure(PostWork& work, const std::exception_ptr& err, std::size_t unit) {
  if (work.error) return;
  try {
    std::rethrow_exception(err);
  } catch (const Error& e) {
    const StrategyCallError tagged(e, work.post->post_id, unit);
    work.error = PostError{work.post->post_id, tagged.code(), tagged.what()};
  } catch (const std::exception& e) {
    work.error = PostError{work.post->post_id, "Exception", e.what()};
  }
}

}  // namespace

StrategyRun run_strategy(const Timeline& timeline, const StrategyConfig& config,
                         const TemplateSet& templates, const ChatClient& client,
                         const Segmenter& segmenter) {
  validate(config);
  StrategyRun run;

  std::vector<PostWork> work;
  work.reserve(timeline.posts.size());
  for (const Post& post : timeline.posts) {
    PostWork w;
    w.post = &post;
    try {
      w.sentences = segmenter.split(post.text);
    } catch (const EmptyText&) {
      report(&run.diagnostics, "EmptyPost", "post " + post.post_id + " has no text");
    }
    w.keep.assign(w.sentences.size(), true);
    run.sentences += w.sentences.size();
    work.push_back(std::move(w));
  }

  auto execute = [&](const std::vector<ChatRequest>& requests, const std::vector<Pending>& pending,
                     auto&& on_success) {
    const auto results = run_batch(requests, client, config.concurrency);
    for (std::size_t r = 0; r < results.size(); ++r) {
      PostWork& w = work[pending[r].post];
      if (!results[r].ok()) {
        record_failure(w, results[r].error, pending[r].unit);
      } else {
        on_success(w, pending[r].unit, results[r].response->content);
      }
    }
  };

  if (is_sentence_level(config)) {
    if (config.use_importance_filter) {
      std::vector<ChatRequest> requests;
      std::vector<Pending> pending;
      for (std::size_t p = 0; p < work.size(); ++p) {
        for (const Sentence& s : work[p].sentences) {
          requests.push_back(build_importance_request(s, config, templates));
          pending.push_back({p, s.index});
        }
      }
      run.importance_calls += requests.size();
      execute(requests, pending, [](PostWork& w, std::size_t unit, const std::string& content) {
        w.keep[unit] = parse_importance(content);
      });
    }

    std::vector<ChatRequest> requests;
    std::vector<Pending> pending;
    for (std::size_t p = 0; p < work.size(); ++p) {
      if (work[p].error) continue;
      for (const Sentence& s : work[p].sentences) {
        if (!work[p].keep[s.index]) continue;
        requests.push_back(
            build_classify_request(s, build_context(work[p].sentences, s.index), config, templates));
        pending.push_back({p, s.index});
      }
    }
    run.sentences_after_filter += requests.size();
    run.classify_calls += requests.size();

    std::vector<std::vector<std::optional<PredictedSpan>>> labeled(work.size());
    for (std::size_t p = 0; p < work.size(); ++p) labeled[p].resize(work[p].sentences.size());
    execute(requests, pending, [&](PostWork& w, std::size_t unit, const std::string& content) {
      const std::size_t p = static_cast<std::size_t>(&w - work.data());
      labeled[p][unit] = interpret_classification(content, w.sentences[unit], w.post->post_id, config);
    });

    for (std::size_t p = 0; p < work.size(); ++p) {
      if (work[p].error) {
        run.post_errors.push_back(*work[p].error);
        continue;
      }
      for (auto& span : labeled[p]) {
        if (span) run.predictions.push_back(std::move(*span));
      }
    }
    return run;
  }

  std::vector<std::vector<Chunk>> chunks(work.size());
  std::vector<ChatRequest> requests;
  std::vector<Pending> pending;
  for (std::size_t p = 0; p < work.size(); ++p) {
    chunks[p] = chunk_sentences(work[p].sentences, config.chunk_size, config.chunk_mode,
                                work[p].post->text);
    for (const Chunk& c : chunks[p]) {
      requests.push_back(build_span_request(c, config, templates));
      pending.push_back({p, c.index});
    }
  }
  run.chunk_calls += requests.size();

  std::vector<std::vector<std::vector<PredictedSpan>>> spans(work.size());
  for (std::size_t p = 0; p < work.size(); ++p) spans[p].resize(chunks[p].size());
  execute(requests, pending, [&](PostWork& w, std::size_t unit, const std::string& content) {
    const std::size_t p = static_cast<std::size_t>(&w - work.data());
    spans[p][unit] = interpret_spans(content, chunks[p][unit], w.post->post_id, config, &run.diagnostics);
  });

  for (std::size_t p = 0; p < work.size(); ++p) {
    if (work[p].error) {
      run.post_errors.push_back(*work[p].error);
      continue;
    }
    for (auto& per_chunk : spans[p]) {
      for (auto& s : per_chunk) run.predictions.push_back(std::move(s));
    }
  }
  return run;
}

StrategyRun run_strategy(const std::vector<Timeline>& timelines, const StrategyConfig& config,
                         const TemplateSet& templates, const ChatClient& client,
                         const Segmenter& segmenter) {
  StrategyRun run;
  for (const auto& t : timelines) run.merge(run_strategy(t, config, templates, client, segmenter));
  return run;
}

}  // namespace selfstate
