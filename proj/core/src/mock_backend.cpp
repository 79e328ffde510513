#include <algorithm>
#include <array>
#include <fstream>
#include <thread>

#include "selfstate/errors.hpp"
#include "selfstate/llm_backend.hpp"

using nlohmann::json;

namespace selfstate {
namespace {

constexpr std::array<std::string_view, 20> kMaladaptiveCues{
    "hopeless", "worthless", "alone", "hate myself", "ashamed", "empty", "nobody cares",
    "can't help", "tired of", "do not care", "nothing seems", "ignores me", "locked myself",
    "drank", "failing", "skipped meals", "yelled", "tight", "better off without", "nothing i do",
};

constexpr std::array<std::string_view, 18> kAdaptiveCues{
    "walk", "called my", "help", "proud", "calm", "talked", "perfect", "counselor", "content",
    "coffee", "lighter", "good things", "store", "support group", "rested", "dinner", "kind",
    "said yes",
};

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

template <std::size_t N>
bool has_cue(const std::string& lowered, const std::array<std::string_view, N>& cues) {
  return std::any_of(cues.begin(), cues.end(),
                     [&](std::string_view cue) { return lowered.find(cue) != std::string::npos; });
}

// With `favor_adaptive` an adaptive cue wins over a maladaptive one, which is
// how the boost prompt is meant to shift the model.
std::optional<std::string_view> cue_label(std::string_view text, bool favor_adaptive = false) {
  const std::string low = lower_ascii(text);
  if (favor_adaptive && has_cue(low, kAdaptiveCues)) return "adaptive";
  if (has_cue(low, kMaladaptiveCues)) return "maladaptive";
  if (has_cue(low, kAdaptiveCues)) return "adaptive";
  return std::nullopt;
}

std::string all_content(const ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages) {
    out += m.content;
    out.push_back('\n');
  }
  return out;
}

// The text following the last "<header>:\n" of the final user message.
std::string_view payload(const ChatRequest& request) {
  std::string_view user;
  for (const auto& m : request.messages) {
    if (m.role == Role::User) user = m.content;
  }
  const auto pos = user.rfind(":\n");
  return pos == std::string_view::npos ? user : user.substr(pos + 2);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string heuristic_response(const ChatRequest& request) {
  const std::string everything = all_content(request);
  const std::string_view text = payload(request);

  if (everything.find("Answer with Yes or No") != std::string::npos) {
    return cue_label(text) ? "Yes. The sentence refers to the writer's self-state."
                           : "No. The sentence does not reference a self-state dimension.";
  }
  if (everything.find("JSON array") != std::string::npos) {
    // The boost prompt asks for coverage: answer with whole sentences rather
    // than clauses.
    const bool boost = everything.find("as much of the chunk as possible") != std::string::npos;
    const std::string_view cuts = boost ? std::string_view(".!?\n") : std::string_view(",.!?;\n");
    json spans = json::array();
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      const bool cut = i == text.size() || cuts.find(text[i]) != std::string_view::npos;
      if (!cut) continue;
      const std::string_view clause = trim(text.substr(begin, i - begin));
      begin = i + 1;
      if (clause.empty()) continue;
      if (auto label = cue_label(clause, boost)) {
        spans.push_back({{"text", std::string(clause)}, {"label", std::string(*label)}});
      }
    }
    return spans.dump();
  }
  if (auto label = cue_label(text)) return "This is " + std::string(*label) + ".";
  return "I cannot determine this.";
}

MockScript load_mock_script(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open mock script " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw MalformedJson(file.string(), e.what());
  }
  MockScript script;
  try {
    if (j.contains("by_hash")) {
      for (const auto& [k, v] : j.at("by_hash").items()) script.by_hash[k] = v.get<std::string>();
    }
    if (j.contains("rules")) {
      for (const auto& r : j.at("rules")) {
        MockRule rule;
        const auto& m = r.at("match");
        if (m.is_string()) {
          rule.match.push_back(m.get<std::string>());
        } else {
          rule.match = m.get<std::vector<std::string>>();
        }
        if (r.contains("error")) {
          rule.error_status = r.at("error").get<int>();
        } else {
          rule.response = r.at("response").get<std::string>();
        }
        script.rules.push_back(std::move(rule));
      }
    }
    if (j.contains("default") && !j["default"].is_null()) {
      script.fallback = j["default"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw SchemaViolation(file.string(), "$", e.what());
  }
  return script;
}

MockBackend::MockBackend() : id_("mock:heuristic-v1") {}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)), id_("mock:scripted") {}

MockBackend::MockBackend(Responder responder)
    : responder_(std::move(responder)), id_("mock:responder") {}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  validate(request);
  ++calls_;
  if (delay_) std::this_thread::sleep_for(delay_(request));

  auto respond = [&]() -> std::string {
    if (responder_) return responder_(request);
    if (!script_.by_hash.empty()) {
      if (auto it = script_.by_hash.find(cache_key(request)); it != script_.by_hash.end()) {
        return it->second;
      }
    }
    if (!script_.rules.empty()) {
      const std::string everything = all_content(request);
      for (const auto& rule : script_.rules) {
        const bool all = std::all_of(rule.match.begin(), rule.match.end(), [&](const auto& m) {
          return everything.find(m) != std::string::npos;
        });
        if (all) {
          if (rule.error_status) throw HttpStatus(*rule.error_status, "scripted failure");
          return rule.response;
        }
      }
    }
    if (script_.fallback) return *script_.fallback;
    return heuristic_response(request);
  };
  return {respond(), id_, false, std::nullopt};
}

}  // namespace selfstate
