#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfstate {

struct TokenEmbedding {
  std::string token;
  std::vector<double> vector;
};

using TokenMatrix = std::vector<TokenEmbedding>;

/// Token-level embedding source behind the similarity metric.
/// Implementations must tolerate concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// One TokenMatrix per input text, in input order.
  virtual std::vector<TokenMatrix> embed_batch(const std::vector<std::string>& texts) = 0;
  virtual std::string id() const = 0;

  TokenMatrix embed(std::string_view text);
};

/// Embeds `text` and L2-normalizes every vector. Throws DimensionMismatch when
/// vectors disagree in dimension.
TokenMatrix embed_tokens(std::string_view text, EmbeddingProvider& provider);

/// Normalizes in place; zero vectors are left unchanged.
void l2_normalize(std::vector<double>& v);

/// Context-free deterministic embedder. Text is lowercased (ASCII) and split
/// into word tokens (letters, digits, inner apostrophes) and single
/// punctuation tokens. Each token maps to a vector with `nonzeros` entries of
/// ±1/sqrt(nonzeros) at hash-chosen coordinates, so every vector has norm 1
/// exactly and all dot products are exact multiples of 1/nonzeros.
class MockEmbedder final : public EmbeddingProvider {
 public:
  explicit MockEmbedder(std::size_t dim = 256, std::size_t nonzeros = 16);

  std::vector<TokenMatrix> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override;

  static std::vector<std::string> tokenize(std::string_view text);
  std::vector<double> token_vector(const std::string& token) const;

  /// Pins `token` to `vector` (normalized on ingestion). Dimension must match.
  void set_override(const std::string& token, std::vector<double> vector);

  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  std::size_t nonzeros_;
  std::map<std::string, std::vector<double>> overrides_;
  mutable std::mutex mutex_;
};

struct HttpEmbedderOptions {
  /// Sidecar root, e.g. "http://localhost:8100"; requests go to
  /// `{base_url}/embed_tokens`.
  std::string base_url;
  std::optional<std::string> model_id;
  std::optional<int> layer;
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{60000};
};

/// Client for the embedding sidecar: POST /embed_tokens with
/// `{"texts": [...], "model_id"?, "layer"?}`, reading
/// `{"results": [{"tokens", "vectors", "truncated"}], "model_id", "layer"}`.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  explicit HttpEmbedder(HttpEmbedderOptions options);

  std::vector<TokenMatrix> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override;

  /// GET /health -> reported dimension. Throws ProviderUnreachable.
  std::size_t health_dim() const;

 private:
  HttpEmbedderOptions options_;
  std::string host_;
  std::string path_prefix_;
  mutable std::mutex mutex_;
  std::string served_model_;
  std::optional<std::size_t> dim_;
};

/// Parses `mock` or `http:<url>`.
std::unique_ptr<EmbeddingProvider> make_embedder(const std::string& spec);

}  // namespace selfstate
