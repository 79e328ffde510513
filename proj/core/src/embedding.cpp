#include "selfstate/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "selfstate/errors.hpp"
#include "selfstate/hashing.hpp"

using nlohmann::json;

namespace selfstate {

TokenMatrix EmbeddingProvider::embed(std::string_view text) {
  auto out = embed_batch({std::string(text)});
  if (out.size() != 1) throw ProviderUnreachable("provider returned wrong batch size");
  return std::move(out.front());
}

void l2_normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0 || sq == 1.0) return;
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
}

TokenMatrix embed_tokens(std::string_view text, EmbeddingProvider& provider) {
  TokenMatrix m = provider.embed(text);
  for (auto& t : m) {
    if (t.vector.size() != m.front().vector.size()) {
      throw DimensionMismatch(m.front().vector.size(), t.vector.size());
    }
    l2_normalize(t.vector);
  }
  return m;
}

// Mock ---------------------------------------------------------------------------

MockEmbedder::MockEmbedder(std::size_t dim, std::size_t nonzeros)
    : dim_(dim), nonzeros_(std::min(nonzeros, dim)) {
  if (dim_ == 0 || nonzeros_ == 0) throw std::invalid_argument("mock embedder needs dim, nonzeros >= 1");
}

std::string MockEmbedder::id() const {
  return "mock-sparse-v1:d" + std::to_string(dim_) + ":k" + std::to_string(nonzeros_);
}

std::vector<std::string> MockEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto is_word = [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
  };
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    if (is_word(c)) {
      word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (c == '\'' && !word.empty() && i + 1 < text.size() &&
               is_word(static_cast<unsigned char>(text[i + 1]))) {
      word.push_back('\'');
    } else {
      flush();
      if (c > ' ' && c < 0x7F) out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::vector<double> MockEmbedder::token_vector(const std::string& token) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = overrides_.find(token); it != overrides_.end()) return it->second;
  }
  std::vector<double> v(dim_, 0.0);
  const double magnitude = 1.0 / std::sqrt(static_cast<double>(nonzeros_));
  std::uint64_t state = fnv1a64(token);
  std::size_t placed = 0;
  while (placed < nonzeros_) {
    const std::uint64_t r = splitmix64(state);
    const std::size_t coord = static_cast<std::size_t>((r >> 1) % dim_);
    if (v[coord] != 0.0) continue;
    v[coord] = (r & 1) ? magnitude : -magnitude;
    ++placed;
  }
  return v;
}

void MockEmbedder::set_override(const std::string& token, std::vector<double> vector) {
  if (vector.size() != dim_) throw DimensionMismatch(dim_, vector.size());
  l2_normalize(vector);
  std::lock_guard lock(mutex_);
  overrides_[token] = std::move(vector);
}

std::vector<TokenMatrix> MockEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<TokenMatrix> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    TokenMatrix m;
    for (auto& tok : tokenize(text)) {
      auto vec = token_vector(tok);
      m.push_back({std::move(tok), std::move(vec)});
    }
    out.push_back(std::move(m));
  }
  return out;
}

// HTTP sidecar --------------------------------------------------------------------

HttpEmbedder::HttpEmbedder(HttpEmbedderOptions options) : options_(std::move(options)) {
  const auto url = detail::parse_base_url(options_.base_url);
  host_ = url.scheme_host_port;
  path_prefix_ = url.path_prefix;
  if (options_.batch_size == 0) options_.batch_size = 1;
}

std::string HttpEmbedder::id() const {
  std::string out = "http:" + host_ + path_prefix_;
  if (options_.model_id) out += "#" + *options_.model_id;
  if (options_.layer) out += "@" + std::to_string(*options_.layer);
  return out;
}

std::size_t HttpEmbedder::health_dim() const {
  httplib::Client client(host_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  auto res = client.Get(path_prefix_ + "/health");
  if (!res) throw ProviderUnreachable(host_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw ProviderUnreachable(host_ + "/health returned " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body).at("dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ProviderUnreachable(std::string("bad /health body: ") + e.what());
  }
}

std::vector<TokenMatrix> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<TokenMatrix> out;
  out.reserve(texts.size());
  httplib::Client client(host_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);

  for (std::size_t begin = 0; begin < texts.size(); begin += options_.batch_size) {
    const std::size_t end = std::min(texts.size(), begin + options_.batch_size);
    json body = {{"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                                    texts.begin() + static_cast<std::ptrdiff_t>(end))}};
    if (options_.model_id) body["model_id"] = *options_.model_id;
    if (options_.layer) body["layer"] = *options_.layer;

    auto res = client.Post(path_prefix_ + "/embed_tokens", body.dump(), "application/json");
    if (!res) throw ProviderUnreachable(host_ + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw ProviderUnreachable(host_ + "/embed_tokens returned " + std::to_string(res->status) +
                                ": " + detail::excerpt(res->body));
    }
    json j;
    try {
      j = json::parse(res->body);
      const auto& results = j.at("results");
      if (!results.is_array() || results.size() != end - begin) {
        throw ProviderUnreachable("sidecar returned " + std::to_string(results.size()) +
                                  " results for " + std::to_string(end - begin) + " texts");
      }
      for (const auto& r : results) {
        const auto tokens = r.at("tokens").get<std::vector<std::string>>();
        auto vectors = r.at("vectors").get<std::vector<std::vector<double>>>();
        if (tokens.size() != vectors.size()) {
          throw ProviderUnreachable("sidecar tokens/vectors length mismatch");
        }
        TokenMatrix m;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          std::lock_guard lock(mutex_);
          if (!dim_) dim_ = vectors[i].size();
          if (vectors[i].size() != *dim_) throw DimensionMismatch(*dim_, vectors[i].size());
          l2_normalize(vectors[i]);
          m.push_back({tokens[i], std::move(vectors[i])});
        }
        out.push_back(std::move(m));
      }
      if (j.contains("model_id") && j["model_id"].is_string()) {
        std::lock_guard lock(mutex_);
        served_model_ = j["model_id"].get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ProviderUnreachable(std::string("malformed sidecar response: ") + e.what());
    }
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const std::string& spec) {
  if (spec == "mock") return std::make_unique<MockEmbedder>();
  std::string url;
  if (spec.rfind("http:", 0) == 0 && spec.rfind("http://", 0) != 0) {
    url = spec.substr(5);
  } else if (spec.rfind("http://", 0) == 0) {
    url = spec;
  } else {
    throw InvalidConfig("unknown embedder '" + spec + "' (expected mock or http:<url>)");
  }
  HttpEmbedderOptions opts;
  opts.base_url = url;
  return std::make_unique<HttpEmbedder>(std::move(opts));
}

}  // namespace selfstate
