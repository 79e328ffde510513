#include <cmath>
#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "selfstate/embedding.hpp"
#include "selfstate/errors.hpp"
#include "selfstate/hashing.hpp"
#include "selfstate/metrics.hpp"

using namespace selfstate;
using nlohmann::json;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Stand-in for the embedding sidecar: whitespace tokens, deterministic
// unnormalized vectors derived from a token hash.
class FakeSidecar {
 public:
  explicit FakeSidecar(std::size_t dim = 8) : dim_(dim) {
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      if (loading) {
        res.status = 503;
        return;
      }
      res.set_content(json{{"status", "ok"}, {"model_id", "fake-1"}, {"dim", dim_}}.dump(),
                      "application/json");
    });
    server_.Post("/embed_tokens", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      ++requests;
      last_body = body;
      json results = json::array();
      for (const auto& text : body.at("texts")) {
        json tokens = json::array();
        json vectors = json::array();
        std::string s = text.get<std::string>();
        std::size_t pos = 0;
        while (pos < s.size()) {
          const auto end = s.find(' ', pos);
          const auto tok = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
          if (!tok.empty()) {
            tokens.push_back(tok);
            std::uint64_t state = fnv1a64(tok);
            json v = json::array();
            for (std::size_t d = 0; d < dim_; ++d) {
              v.push_back(static_cast<double>(splitmix64(state) % 2001) / 100.0 - 10.0);
            }
            vectors.push_back(v);
          }
          if (end == std::string::npos) break;
          pos = end + 1;
        }
        results.push_back({{"tokens", tokens}, {"vectors", vectors}, {"truncated", false}});
      }
      res.set_content(json{{"results", results}, {"model_id", "fake-1"}, {"layer", -1}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeSidecar() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<bool> loading{false};
  std::atomic<int> requests{0};
  json last_body;

 private:
  std::size_t dim_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

// mock ---------------------------------------------------------------------------

TEST(MockEmbedder, TwoUnitVectorsStableAcrossCalls) {
  MockEmbedder e;
  const auto a = embed_tokens("help me", e);
  const auto b = embed_tokens("help me", e);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].vector, b[i].vector);
    EXPECT_DOUBLE_EQ(norm(a[i].vector), 1.0);
  }
}

TEST(MockEmbedder, ContextFree) {
  MockEmbedder e;
  const auto a = embed_tokens("I need help", e);
  const auto b = embed_tokens("help arrived today", e);
  EXPECT_EQ(a[2].token, "help");
  EXPECT_EQ(b[0].token, "help");
  EXPECT_EQ(a[2].vector, b[0].vector);
}

TEST(MockEmbedder, Tokenization) {
  EXPECT_EQ(MockEmbedder::tokenize("I can't, REALLY!"),
            (std::vector<std::string>{"i", "can't", ",", "really", "!"}));
  EXPECT_TRUE(MockEmbedder::tokenize("   ").empty());
  EXPECT_EQ(MockEmbedder::tokenize("caf\xC3\xA9 ok").size(), 2u);
}

TEST(MockEmbedder, DotProductsAreExactSixteenths) {
  MockEmbedder e;
  const auto m = embed_tokens("one two three four five six seven", e);
  for (const auto& x : m) {
    for (const auto& y : m) {
      double dot = 0.0;
      for (std::size_t k = 0; k < x.vector.size(); ++k) dot += x.vector[k] * y.vector[k];
      EXPECT_EQ(dot * 16.0, std::round(dot * 16.0));
    }
  }
}

TEST(MockEmbedder, OverridesAreNormalizedAndDimensionChecked) {
  MockEmbedder e(4, 2);
  e.set_override("x", {3.0, 4.0, 0.0, 0.0});
  const auto v = e.token_vector("x");
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
  EXPECT_THROW(e.set_override("y", {1.0}), DimensionMismatch);
}

TEST(MakeEmbedder, Specs) {
  EXPECT_EQ(make_embedder("mock")->id(), "mock-sparse-v1:d256:k16");
  EXPECT_EQ(make_embedder("http:localhost:8100")->id(), "http:http://localhost:8100");
  EXPECT_THROW(make_embedder("word2vec"), InvalidConfig);
}

// sidecar client -------------------------------------------------------------------

TEST(HttpEmbedder, ShapeContractAndNormalization) {
  FakeSidecar sidecar(8);
  HttpEmbedderOptions o;
  o.base_url = sidecar.url();
  HttpEmbedder e(o);

  std::mt19937_64 rng(1);
  std::vector<std::string> texts;
  for (int i = 0; i < 100; ++i) texts.push_back("tok" + std::to_string(rng() % 100000));
  std::size_t checked = 0;
  for (const auto& m : e.embed_batch(texts)) {
    ASSERT_EQ(m.size(), 1u);
    EXPECT_NEAR(norm(m[0].vector), 1.0, 1e-6);
    EXPECT_EQ(m[0].vector.size(), e.health_dim());
    ++checked;
  }
  EXPECT_EQ(checked, 100u);
}

TEST(HttpEmbedder, BatchesRequestsAndSendsModelAndLayer) {
  FakeSidecar sidecar;
  HttpEmbedderOptions o;
  o.base_url = sidecar.url();
  o.batch_size = 3;
  o.model_id = "fake-1";
  o.layer = -2;
  HttpEmbedder e(o);
  const auto out = e.embed_batch({"a", "b c", "d", "e", "f g h", "i", "j"});
  EXPECT_EQ(out.size(), 7u);
  EXPECT_EQ(out[4].size(), 3u);
  EXPECT_EQ(sidecar.requests.load(), 3);
  EXPECT_EQ(sidecar.last_body["model_id"], "fake-1");
  EXPECT_EQ(sidecar.last_body["layer"], -2);
  EXPECT_EQ(e.id(), "http:" + sidecar.url() + "#fake-1@-2");
}

TEST(HttpEmbedder, DuplicateTextsGetIdenticalVectors) {
  FakeSidecar sidecar;
  HttpEmbedder e({sidecar.url()});
  const auto out = e.embed_batch({"same words", "same words"});
  ASSERT_EQ(out[0].size(), out[1].size());
  for (std::size_t i = 0; i < out[0].size(); ++i) EXPECT_EQ(out[0][i].vector, out[1][i].vector);
}

TEST(HttpEmbedder, IdentityScoreThroughMetricStack) {
  FakeSidecar sidecar;
  HttpEmbedder e({sidecar.url()});
  for (const auto& s : {"I went for a walk today", "nobody cares about me", "x"}) {
    const auto score = bertscore_pair(s, s, e);
    EXPECT_NEAR(score.f1, 1.0, 1e-6);
  }
}

TEST(HttpEmbedder, HealthWhileLoadingAndUnreachable) {
  FakeSidecar sidecar;
  sidecar.loading = true;
  HttpEmbedder e({sidecar.url()});
  EXPECT_THROW(e.health_dim(), ProviderUnreachable);
  sidecar.loading = false;
  EXPECT_EQ(e.health_dim(), 8u);

  // Nothing listens on port 1, so connections are refused immediately.
  const int port = 1;
  HttpEmbedder dead({"http://127.0.0.1:" + std::to_string(port)});
  EXPECT_THROW(dead.embed_batch({"x"}), ProviderUnreachable);
}
