#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "selfstate/errors.hpp"
#include "selfstate/llm_backend.hpp"
#include "test_support.hpp"

using namespace selfstate;
using namespace std::chrono_literals;
using nlohmann::json;
using selfstate::testing::TempDir;

namespace {

ChatRequest request(std::string user, double temperature = 0.0) {
  ChatRequest r;
  r.model = "m";
  r.messages = {{Role::System, "sys"}, {Role::User, std::move(user)}};
  r.temperature = temperature;
  return r;
}

// httplib server on an ephemeral port, stopped on destruction.
class TestServer {
 public:
  TestServer() = default;
  ~TestServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  std::string url(const std::string& prefix = "/v1") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

  httplib::Server server;

 private:
  int port_ = 0;
  std::thread thread_;
};

std::string completion(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

HttpBackendOptions fast_options(const std::string& url) {
  HttpBackendOptions o;
  o.base_url = url;
  o.retry.attempts = 3;
  o.retry.base_delay = 1ms;
  o.timeout = 2000ms;
  return o;
}

}  // namespace

// request model -------------------------------------------------------------------

TEST(ChatRequest, ValidateRejectsBrokenRequests) {
  ChatRequest r;
  r.model = "m";
  EXPECT_THROW(validate(r), std::invalid_argument);
  r.messages = {{Role::Assistant, "hi"}};
  EXPECT_THROW(validate(r), std::invalid_argument);
  r.messages = {{Role::User, "hi"}};
  r.temperature = -1.0;
  EXPECT_THROW(validate(r), std::invalid_argument);
  r.temperature = 0.0;
  EXPECT_NO_THROW(validate(r));
}

TEST(CacheKey, StableAndSensitiveToEveryField) {
  const auto base = request("hello");
  const auto key = cache_key(base);
  EXPECT_EQ(key.size(), 64u);
  EXPECT_EQ(key.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(key, cache_key(request("hello")));

  auto t = base;
  t.temperature = 0.5;
  auto m = base;
  m.model = "other";
  auto k = base;
  k.max_tokens = 10;
  auto s = base;
  s.seed = std::nullopt;
  auto c = base;
  c.messages[1].content = "hello ";
  const std::set<std::string> keys{key, cache_key(t), cache_key(m), cache_key(k), cache_key(s),
                                   cache_key(c)};
  EXPECT_EQ(keys.size(), 6u);
}

TEST(CacheKey, CanonicalJsonKeepsContentVerbatim) {
  const auto j = json::parse(canonical_json(request("  two  spaces\n")));
  EXPECT_EQ(j["messages"][1]["content"], "  two  spaces\n");
}

TEST(OpenAiBody, HasExpectedShape) {
  const auto body = to_openai_body(request("hi"));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "hi");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 512);
  EXPECT_EQ(body["seed"], 0);
}

// mock -----------------------------------------------------------------------------

TEST(MockBackend, ScriptedByHash) {
  MockScript script;
  script.by_hash[cache_key(request("x"))] = "maladaptive";
  MockBackend mock(script);
  const auto r = mock.complete(request("x"));
  EXPECT_EQ(r.content, "maladaptive");
  EXPECT_FALSE(r.cached);
  EXPECT_EQ(mock.calls(), 1u);
}

TEST(MockBackend, RulesThenFallback) {
  MockScript script;
  script.rules.push_back({{"alpha", "beta"}, "both"});
  script.rules.push_back({{"alpha"}, "one"});
  script.fallback = "none";
  MockBackend mock(script);
  EXPECT_EQ(mock.complete(request("alpha beta")).content, "both");
  EXPECT_EQ(mock.complete(request("alpha")).content, "one");
  EXPECT_EQ(mock.complete(request("gamma")).content, "none");
}

TEST(MockBackend, DeterministicAcrossCalls) {
  MockBackend mock;
  const auto a = mock.complete(request("Here is the sentence:\nI felt hopeless."));
  const auto b = mock.complete(request("Here is the sentence:\nI felt hopeless."));
  EXPECT_EQ(a.content, b.content);
  EXPECT_EQ(a.content, "This is maladaptive.");
}

TEST(MockBackend, LoadsScriptFile) {
  TempDir dir;
  const auto path = dir / "script.json";
  std::ofstream(path) << R"({"by_hash": {}, "rules": [{"match": "ping", "response": "pong"}],
                             "default": "meh"})";
  MockBackend mock(load_mock_script(path));
  EXPECT_EQ(mock.complete(request("ping")).content, "pong");
  EXPECT_EQ(mock.complete(request("x")).content, "meh");
  EXPECT_EQ(mock.id(), "mock:scripted");
}

TEST(MakeBackend, ParsesSpecs) {
  EXPECT_EQ(make_backend("mock")->id(), "mock:heuristic-v1");
  EXPECT_NE(make_backend("http://localhost:1/v1")->id().find("localhost"), std::string::npos);
  EXPECT_THROW(make_backend("ftp://x"), InvalidConfig);
}

// cache -----------------------------------------------------------------------------

TEST(ResponseCache, HitSkipsBackend) {
  TempDir dir;
  ResponseCache cache(dir / "c.jsonl");
  MockBackend mock;
  ChatClient client(mock, &cache);
  const auto first = client.complete(request("hello"));
  const auto second = client.complete(request("hello"));
  EXPECT_FALSE(first.cached);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(first.content, second.content);
  EXPECT_EQ(mock.calls(), 1u);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);

  client.complete(request("hello", 0.7));
  EXPECT_EQ(mock.calls(), 2u);
}

TEST(ResponseCache, ReplayOfHundredRequestsMakesNoCalls) {
  TempDir dir;
  std::mt19937_64 rng(5);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 100; ++i) reqs.push_back(request("q" + std::to_string(rng())));
  std::vector<std::string> first;
  {
    ResponseCache cache(dir / "c.jsonl");
    MockBackend mock([](const ChatRequest& r) { return "r:" + r.messages[1].content; });
    ChatClient client(mock, &cache);
    for (const auto& r : reqs) first.push_back(client.complete(r).content);
  }
  ResponseCache cache(dir / "c.jsonl");
  EXPECT_EQ(cache.size(), 100u);
  MockBackend mock([](const ChatRequest&) { return std::string("different"); });
  ChatClient client(mock, &cache);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const auto r = client.complete(reqs[i]);
    EXPECT_TRUE(r.cached);
    EXPECT_EQ(r.content, first[i]);
  }
  EXPECT_EQ(mock.calls(), 0u);
}

TEST(ResponseCache, CorruptLinesSkippedAndLastEntryWins) {
  TempDir dir;
  const auto path = dir / "c.jsonl";
  const std::string key(64, 'a');
  {
    std::ofstream out(path);
    out << json{{"key", key}, {"response_content", "old"}, {"created_at", "t"}}.dump() << "\n";
    out << "this is not json\n";
    out << json{{"key", "short"}, {"response_content", "x"}}.dump() << "\n";
    out << json{{"key", key}, {"response_content", "new"}, {"created_at", "t"}}.dump() << "\n";
  }
  ResponseCache cache(path);
  EXPECT_EQ(cache.lookup(key), "new");
  ASSERT_EQ(cache.load_diagnostics().size(), 2u);
  EXPECT_EQ(cache.load_diagnostics()[0].code, "CacheCorrupt");
  EXPECT_NE(cache.load_diagnostics()[0].message.find(":2:"), std::string::npos);
}

TEST(ResponseCache, ConcurrentAppendsAllPersist) {
  TempDir dir;
  {
    ResponseCache cache(dir / "c.jsonl");
    MockBackend mock([](const ChatRequest& r) { return r.messages[1].content; });
    ChatClient client(mock, &cache);
    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 64; ++i) reqs.push_back(request("n" + std::to_string(i)));
    const auto results = run_batch(reqs, client, 8);
    for (const auto& r : results) EXPECT_TRUE(r.ok());
  }
  ResponseCache reopened(dir / "c.jsonl");
  EXPECT_EQ(reopened.size(), 64u);
  EXPECT_TRUE(reopened.load_diagnostics().empty());
}

// run_batch ------------------------------------------------------------------------

TEST(RunBatch, SequentialOrdered) {
  MockBackend mock([](const ChatRequest& r) { return r.messages[1].content; });
  ChatClient client(mock);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(request(std::to_string(i)));
  const auto out = run_batch(reqs, client, 1);
  ASSERT_EQ(out.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(out[i].response->content, std::to_string(i));
}

TEST(RunBatch, RandomDelaysKeepInputOrderAndBoundInFlight) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  MockBackend mock([&](const ChatRequest& r) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::microseconds(std::hash<std::string>{}(r.messages[1].content) % 3000));
    --in_flight;
    return r.messages[1].content;
  });
  ChatClient client(mock);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(request("req" + std::to_string(i)));
  const auto out = run_batch(reqs, client, 4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(out[i].response->content, "req" + std::to_string(i));
  EXPECT_LE(peak.load(), 4);
}

TEST(RunBatch, OneFailureIsIsolated) {
  MockBackend mock([](const ChatRequest& r) -> std::string {
    if (r.messages[1].content == "3") throw BackendUnreachable("boom");
    return "ok";
  });
  ChatClient client(mock);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back(request(std::to_string(i)));
  const auto out = run_batch(reqs, client, 4);
  int ok = 0;
  for (const auto& r : out) ok += r.ok() ? 1 : 0;
  EXPECT_EQ(ok, 9);
  ASSERT_FALSE(out[3].ok());
  EXPECT_THROW(std::rethrow_exception(out[3].error), BackendUnreachable);
}

TEST(RunBatch, ZeroParallelismRejected) {
  MockBackend mock;
  ChatClient client(mock);
  std::vector<ChatRequest> reqs{request("a")};
  EXPECT_THROW(run_batch(reqs, client, 0), std::invalid_argument);
}

// HTTP -----------------------------------------------------------------------------

TEST(HttpBackend, SendsOpenAiRequestWithBearerToken) {
  TestServer srv;
  std::string auth;
  json body;
  std::string path;
  srv.server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    body = json::parse(req.body);
    path = req.path;
    res.set_content(completion("This is adaptive."), "application/json");
  });
  srv.start();
  auto opts = fast_options(srv.url());
  opts.api_key = "secret";
  HttpBackend backend(opts);
  const auto r = backend.complete(request("hi"));
  EXPECT_EQ(r.content, "This is adaptive.");
  EXPECT_FALSE(r.cached);
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(path, "/v1/chat/completions");
  EXPECT_EQ(body["messages"][1]["content"], "hi");
  EXPECT_EQ(body["seed"], 0);
}

TEST(HttpBackend, ServerErrorAfterRetries) {
  TestServer srv;
  std::atomic<int> hits{0};
  srv.server.Post(R"(/v1/chat/completions)", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
    res.set_content("internal failure", "text/plain");
  });
  srv.start();
  HttpBackend backend(fast_options(srv.url()));
  try {
    backend.complete(request("hi"));
    FAIL();
  } catch (const HttpStatus& e) {
    EXPECT_EQ(e.status(), 500);
    EXPECT_EQ(e.body_excerpt(), "internal failure");
  }
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(backend.attempts(), 3u);
}

TEST(HttpBackend, RateLimitIsRetriedThenSucceeds) {
  TestServer srv;
  std::atomic<int> hits{0};
  srv.server.Post(R"(/v1/chat/completions)", [&](const httplib::Request&, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 429;
      return;
    }
    res.set_content(completion("fine"), "application/json");
  });
  srv.start();
  HttpBackend backend(fast_options(srv.url()));
  EXPECT_EQ(backend.complete(request("hi")).content, "fine");
  EXPECT_EQ(hits.load(), 2);
}

TEST(HttpBackend, ClientErrorIsNotRetried) {
  TestServer srv;
  std::atomic<int> hits{0};
  srv.server.Post(R"(/v1/chat/completions)", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
    res.set_content("bad key", "text/plain");
  });
  srv.start();
  HttpBackend backend(fast_options(srv.url()));
  EXPECT_THROW(backend.complete(request("hi")), HttpStatus);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpBackend, MalformedBodies) {
  TestServer srv;
  srv.server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    const auto content = json::parse(req.body)["messages"][1]["content"].get<std::string>();
    if (content == "notjson") res.set_content("<html>", "text/html");
    if (content == "nochoices") res.set_content(R"({"choices": []})", "application/json");
    if (content == "nocontent") {
      res.set_content(R"({"choices": [{"message": {"role": "assistant"}}]})", "application/json");
    }
  });
  srv.start();
  HttpBackend backend(fast_options(srv.url()));
  EXPECT_THROW(backend.complete(request("notjson")), MalformedBackendResponse);
  EXPECT_THROW(backend.complete(request("nochoices")), MalformedBackendResponse);
  EXPECT_THROW(backend.complete(request("nocontent")), MalformedBackendResponse);
}

TEST(HttpBackend, TimeoutAfterRetries) {
  TestServer srv;
  srv.server.Post(R"(/v1/chat/completions)", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    res.set_content(completion("late"), "application/json");
  });
  srv.start();
  auto opts = fast_options(srv.url());
  opts.timeout = 100ms;
  opts.retry.attempts = 2;
  HttpBackend backend(opts);
  EXPECT_THROW(backend.complete(request("hi")), Timeout);
  EXPECT_EQ(backend.attempts(), 2u);
}

TEST(HttpBackend, UnreachableHost) {
  // Nothing listens on port 1, so connections are refused immediately.
  const int port = 1;
  HttpBackend backend(fast_options("http://127.0.0.1:" + std::to_string(port) + "/v1"));
  EXPECT_THROW(backend.complete(request("hi")), BackendUnreachable);
}
