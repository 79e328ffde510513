#include "selfstate/llm_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "selfstate/errors.hpp"
#include "selfstate/hashing.hpp"

using nlohmann::json;

namespace selfstate {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

void validate(const ChatRequest& request) {
  if (request.messages.empty()) throw std::invalid_argument("chat request has no messages");
  if (request.messages.front().role == Role::Assistant) {
    throw std::invalid_argument("first message must be system or user");
  }
  if (!(request.temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (request.max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
}

namespace {

json messages_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return messages;
}

}  // namespace

std::string canonical_json(const ChatRequest& request) {
  // nlohmann::json objects are std::map backed, so keys serialize sorted.
  const json j = {
      {"model", request.model},
      {"messages", messages_json(request)},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
      {"seed", request.seed ? json(*request.seed) : json(nullptr)},
  };
  return j.dump();
}

std::string cache_key(const ChatRequest& request) { return sha256_hex(canonical_json(request)); }

json to_openai_body(const ChatRequest& request) {
  json body = {
      {"model", request.model},
      {"messages", messages_json(request)},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

ChatResponse cached_complete(const ChatRequest& request, ResponseCache& cache,
                             ChatBackend& backend) {
  const std::string key = cache_key(request);
  if (auto hit = cache.lookup(key)) {
    cache.count_hit();
    return {std::move(*hit), backend.id(), true, std::nullopt};
  }
  cache.count_miss();
  ChatResponse response = backend.complete(request);
  cache.append(key, response.content);
  response.cached = false;
  return response;
}

std::vector<BatchResult> run_batch(std::span<const ChatRequest> requests,
                                   const ChatClient& client, std::size_t parallelism) {
  if (parallelism == 0) throw std::invalid_argument("parallelism must be >= 1");
  std::vector<BatchResult> results(requests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i].response = client.complete(requests[i]);
      } catch (...) {
        results[i].error = std::current_exception();
      }
    }
  };

  const std::size_t n_workers = std::min(parallelism, requests.size());
  if (n_workers <= 1) {
    worker();
    return results;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

std::string api_key_from_env() {
  const char* v = std::getenv("LLM_API_KEY");
  return v != nullptr ? std::string(v) : std::string();
}

std::optional<std::filesystem::path> cache_path_from_env() {
  const char* v = std::getenv("SELFSTATE_CACHE");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

std::unique_ptr<ChatBackend> make_backend(const std::string& spec, const RetryPolicy& retry) {
  if (spec == "mock") return std::make_unique<MockBackend>();
  if (spec.rfind("mock:", 0) == 0) {
    return std::make_unique<MockBackend>(load_mock_script(spec.substr(5)));
  }
  std::string url;
  if (spec.rfind("http:", 0) == 0 && spec.rfind("http://", 0) != 0) {
    url = spec.substr(5);
  } else if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    url = spec;
  } else {
    throw InvalidConfig("unknown backend '" + spec + "' (expected mock, mock:<file> or http:<url>)");
  }
  HttpBackendOptions opts;
  opts.base_url = url;
  opts.api_key = api_key_from_env();
  opts.retry = retry;
  return std::make_unique<HttpBackend>(std::move(opts));
}

}  // namespace selfstate
