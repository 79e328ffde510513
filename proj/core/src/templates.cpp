#include "selfstate/templates.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "selfstate/errors.hpp"
#include "selfstate/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace selfstate {

namespace {

constexpr std::array<std::pair<TemplateId, std::string_view>, 5> kIds{{
    {TemplateId::Baseline, "baseline"},
    {TemplateId::Context, "context"},
    {TemplateId::Importance, "importance"},
    {TemplateId::SpanId, "span_id"},
    {TemplateId::SpanIdBoost, "span_id_boost"},
}};

constexpr std::array<std::string_view, 4> kKnownPlaceholders{"context", "sentence", "chunk",
                                                             "examples"};

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls on_text for literal runs and on_name for each `{name}` occurrence.
template <typename OnText, typename OnName>
void scan(std::string_view pattern, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  std::size_t literal = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      std::size_t j = i + 1;
      while (j < pattern.size() && is_name_char(pattern[j])) ++j;
      if (j > i + 1 && j < pattern.size() && pattern[j] == '}') {
        on_text(pattern.substr(literal, i - literal));
        on_name(pattern.substr(i + 1, j - i - 1));
        i = j + 1;
        literal = i;
        continue;
      }
    }
    ++i;
  }
  on_text(pattern.substr(literal));
}

std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string substitute(std::string_view pattern, const Bindings& bindings) {
  std::string out;
  scan(
      pattern, [&](std::string_view text) { out += text; },
      [&](std::string_view name) {
        if (std::find(kKnownPlaceholders.begin(), kKnownPlaceholders.end(), name) ==
            kKnownPlaceholders.end()) {
          throw UnknownPlaceholder(std::string(name));
        }
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingPlaceholder(std::string(name));
        out += it->second;
      });
  return out;
}

std::string render_examples(const PromptTemplate& tmpl) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.example_slots.size(); ++i) {
    const auto& slot = tmpl.example_slots[i];
    if (i > 0) out += "\n\n";
    Bindings b{{"text", slot.text}, {"label", slot.label}, {"justification", slot.justification}};
    scan(
        tmpl.example_format, [&](std::string_view text) { out += text; },
        [&](std::string_view name) {
          auto it = b.find(name);
          if (it == b.end()) throw UnknownPlaceholder(std::string(name));
          out += it->second;
        });
  }
  return out;
}

}  // namespace

std::string_view to_string(TemplateId id) noexcept {
  for (const auto& [k, name] : kIds) {
    if (k == id) return name;
  }
  return "baseline";
}

std::optional<TemplateId> template_id_from_string(std::string_view name) noexcept {
  for (const auto& [k, n] : kIds) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> placeholders(std::string_view pattern) {
  std::vector<std::string> out;
  scan(
      pattern, [](std::string_view) {}, [&](std::string_view name) { out.emplace_back(name); });
  return out;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
  Bindings all = bindings;
  if (all.find("examples") == all.end()) all.emplace("examples", render_examples(tmpl));
  return {substitute(tmpl.system_text, all), substitute(tmpl.user_text_pattern, all)};
}

PromptTemplate load_template(const fs::path& dir, TemplateId id) {
  const std::string stem(to_string(id));
  PromptTemplate t;
  t.id = id;
  t.system_text = strip_final_newline(read_text_file(dir / (stem + ".system.txt")));
  t.user_text_pattern = strip_final_newline(read_text_file(dir / (stem + ".user.txt")));

  const fs::path sidecar = dir / (stem + ".examples.json");
  if (fs::exists(sidecar)) {
    try {
      const json j = json::parse(read_text_file(sidecar));
      if (j.contains("format")) t.example_format = j.at("format").get<std::string>();
      for (const auto& e : j.value("examples", json::array())) {
        t.example_slots.push_back({e.value("text", ""), e.value("label", ""),
                                   e.value("justification", "")});
      }
    } catch (const json::exception& e) {
      throw MalformedJson(sidecar.string(), e.what());
    }
  }
  return t;
}

TemplateSet TemplateSet::load(const fs::path& dir) {
  TemplateSet set;
  set.dir_ = dir;
  for (const auto& [id, name] : kIds) set.templates_[id] = load_template(dir, id);
  return set;
}

const PromptTemplate& TemplateSet::get(TemplateId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw InvalidConfig("template " + std::string(to_string(id)) + " not loaded");
  }
  return it->second;
}

void TemplateSet::set(PromptTemplate tmpl) { templates_[tmpl.id] = std::move(tmpl); }

fs::path default_template_dir() {
  if (const char* env = std::getenv("SELFSTATE_TEMPLATES"); env != nullptr && *env != '\0') {
    return env;
  }
#ifdef SELFSTATE_DEFAULT_TEMPLATE_DIR
  if (fs::exists(fs::path(SELFSTATE_DEFAULT_TEMPLATE_DIR) / "baseline.system.txt")) {
    return SELFSTATE_DEFAULT_TEMPLATE_DIR;
  }
#endif
#ifdef SELFSTATE_SOURCE_TEMPLATE_DIR
  return SELFSTATE_SOURCE_TEMPLATE_DIR;
#else
  return "templates";
#endif
}

}  // namespace selfstate
