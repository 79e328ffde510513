#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/diagnostics.hpp"

namespace selfstate {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role) noexcept;

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::int64_t max_tokens = 512;
  std::optional<std::int64_t> seed = 0;

  bool operator==(const ChatRequest&) const = default;
};

/// Throws std::invalid_argument when the request breaks its invariants
/// (no messages, first role assistant, negative temperature).
void validate(const ChatRequest& request);

/// Sorted-key JSON with message contents verbatim; the input to cache_key.
std::string canonical_json(const ChatRequest& request);

/// 64 hex digit SHA-256 of canonical_json(request).
std::string cache_key(const ChatRequest& request);

/// OpenAI-compatible chat-completions request body.
nlohmann::json to_openai_body(const ChatRequest& request);

struct ChatResponse {
  std::string content;
  std::string backend_id;
  bool cached = false;
  std::optional<double> latency_ms;
};

/// Chat completion backend. Implementations must be safe to call from
/// several worker threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// HTTP ---------------------------------------------------------------------

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{1000};
};

struct HttpBackendOptions {
  /// e.g. "http://localhost:8000/v1"; requests go to `{base_url}/chat/completions`.
  std::string base_url;
  /// Sent as `Authorization: Bearer <key>` when non-empty.
  std::string api_key;
  std::chrono::milliseconds timeout{120000};
  RetryPolicy retry;
};

/// Client for OpenAI-compatible servers. Retries 429, 5xx and timeouts with
/// exponential backoff; other 4xx statuses fail immediately.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ~HttpBackend() override;

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override;

  /// Number of HTTP attempts made so far (including retries).
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  HttpBackendOptions options_;
  std::string host_;
  std::string path_prefix_;
  std::atomic<std::size_t> attempts_{0};
};

/// Reads `LLM_API_KEY`; empty when unset.
std::string api_key_from_env();

// Mock ---------------------------------------------------------------------

/// Keyword-triggered response rule. Fires when every `match` substring occurs
/// in the concatenated message contents.
struct MockRule {
  std::vector<std::string> match;
  std::string response;
  /// When set, the rule raises HttpStatus with this code instead of answering.
  std::optional<int> error_status;
};

struct MockScript {
  /// cache_key(request) -> response.
  std::unordered_map<std::string, std::string> by_hash;
  std::vector<MockRule> rules;
  /// Used when nothing matches. When unset, the built-in heuristic answers.
  std::optional<std::string> fallback;
};

/// Loads `{"by_hash": {...}, "rules": [{"match": [...], "response": "..."}],
/// "default": "..."}`. A rule may carry `"error": <status>` instead of a
/// response to simulate a failing provider.
MockScript load_mock_script(const std::filesystem::path& file);

/// Deterministic scripted stand-in for a chat model. Lookup order: by_hash,
/// rules, fallback, then a keyword heuristic that understands the shipped
/// prompt templates. Counts every call.
class MockBackend final : public ChatBackend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  MockBackend();
  explicit MockBackend(MockScript script);
  /// Responder takes precedence over the script.
  explicit MockBackend(Responder responder);

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }

  std::size_t calls() const noexcept { return calls_.load(); }
  /// Artificial per-call delay, used to exercise out-of-order completion.
  void set_delay(std::function<std::chrono::microseconds(const ChatRequest&)> delay) {
    delay_ = std::move(delay);
  }

 private:
  MockScript script_;
  Responder responder_;
  std::function<std::chrono::microseconds(const ChatRequest&)> delay_;
  std::atomic<std::size_t> calls_{0};
  std::string id_;
};

/// The built-in heuristic used by MockBackend in rule mode.
std::string heuristic_response(const ChatRequest& request);

// Cache --------------------------------------------------------------------

struct CacheEntry {
  std::string key;
  std::string response_content;
  std::string created_at;
};

/// Append-only JSON-lines response cache. The last line for a key wins.
/// Lookups are served from memory; appends go through a single writer.
class ResponseCache {
 public:
  /// Opens (creating if needed) the cache file. Corrupt lines are skipped and
  /// reported as CacheCorrupt diagnostics.
  explicit ResponseCache(std::filesystem::path file);

  std::optional<std::string> lookup(const std::string& key) const;
  void append(const std::string& key, const std::string& response_content);

  std::size_t size() const;
  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }
  const Diagnostics& load_diagnostics() const noexcept { return load_diagnostics_; }
  const std::filesystem::path& path() const noexcept { return file_; }

  void count_hit() noexcept { ++hits_; }
  void count_miss() noexcept { ++misses_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  Diagnostics load_diagnostics_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Cache path from `SELFSTATE_CACHE`, if set.
std::optional<std::filesystem::path> cache_path_from_env();

/// Returns the cached content (cached=true, no backend call) on a hit;
/// otherwise delegates to `backend` and appends the response.
ChatResponse cached_complete(const ChatRequest& request, ResponseCache& cache,
                             ChatBackend& backend);

/// Backend plus optional cache: the unit every strategy talks to.
class ChatClient {
 public:
  explicit ChatClient(ChatBackend& backend, ResponseCache* cache = nullptr)
      : backend_(&backend), cache_(cache) {}

  ChatResponse complete(const ChatRequest& request) const {
    return cache_ != nullptr ? cached_complete(request, *cache_, *backend_)
                             : backend_->complete(request);
  }

  ChatBackend& backend() const noexcept { return *backend_; }
  ResponseCache* cache() const noexcept { return cache_; }

 private:
  ChatBackend* backend_;
  ResponseCache* cache_;
};

/// Outcome of one request in a batch: exactly one of response/error is set.
struct BatchResult {
  std::optional<ChatResponse> response;
  std::exception_ptr error;

  bool ok() const noexcept { return response.has_value(); }
};

/// Runs requests with at most `parallelism` in flight. Results are returned
/// in request order; a failed request does not affect its siblings.
std::vector<BatchResult> run_batch(std::span<const ChatRequest> requests,
                                   const ChatClient& client, std::size_t parallelism);

/// Parses `mock`, `mock:<script.json>` or `http:<base_url>` (also a bare
/// `http://...` URL).
std::unique_ptr<ChatBackend> make_backend(const std::string& spec,
                                          const RetryPolicy& retry = {});

}  // namespace selfstate
