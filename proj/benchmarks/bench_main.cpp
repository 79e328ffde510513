#include <random>

#include <benchmark/benchmark.h>

#include "selfstate/corpus.hpp"
#include "selfstate/embedding.hpp"
#include "selfstate/llm_backend.hpp"
#include "selfstate/metrics.hpp"
#include "selfstate/segment.hpp"

using namespace selfstate;

namespace {

std::string long_post() {
  std::string text;
  for (const auto& t : generate_fixture(5, 1, 20)) {
    for (const auto& p : t.posts) text += p.text + "\n\n";
  }
  return text;
}

TokenMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  TokenMatrix m;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = nd(rng);
    l2_normalize(v);
    m.push_back({"t", std::move(v)});
  }
  return m;
}

}  // namespace

static void BM_SplitSentences(benchmark::State& state) {
  const auto text = long_post();
  for (auto _ : state) benchmark::DoNotOptimize(split_sentences(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_SplitSentences);

static void BM_BertScorePair(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(rng, n, 768);
  const auto b = random_matrix(rng, n, 768);
  for (auto _ : state) benchmark::DoNotOptimize(bertscore_pair(a, b));
}
BENCHMARK(BM_BertScorePair)->Arg(8)->Arg(32)->Arg(128);

static void BM_MaxPairwise(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<TokenMatrix> preds, golds;
  for (int i = 0; i < state.range(0); ++i) preds.push_back(random_matrix(rng, 12, 256));
  for (int i = 0; i < 4; ++i) golds.push_back(random_matrix(rng, 12, 256));
  for (auto _ : state) benchmark::DoNotOptimize(max_pairwise_score(preds, golds, Direction::OverPred));
}
BENCHMARK(BM_MaxPairwise)->Arg(1)->Arg(8)->Arg(32);

static void BM_CacheKey(benchmark::State& state) {
  ChatRequest r;
  r.model = "gemma-2-9b-it";
  r.messages = {{Role::System, "You label self-state evidence."},
                {Role::User, long_post().substr(0, 600)}};
  for (auto _ : state) benchmark::DoNotOptimize(cache_key(r));
}
BENCHMARK(BM_CacheKey);
BENCHMARK_MAIN();
