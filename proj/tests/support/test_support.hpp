#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "selfstate/embedding.hpp"
#include "selfstate/io.hpp"
#include "selfstate/templates.hpp"

namespace selfstate::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("selfstate-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path template_dir() { return SELFSTATE_TEST_TEMPLATE_DIR; }

inline TemplateSet shipped_templates() { return TemplateSet::load(template_dir()); }

/// Straightforward reference for one greedy-matching pair: plain loops, no
/// shared helpers with the library.
struct OracleScore {
  double p;
  double r;
  double f;
};

inline double oracle_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline OracleScore oracle_pair(const TokenMatrix& cand, const TokenMatrix& ref) {
  double p = 0.0;
  for (const auto& c : cand) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : ref) best = std::max(best, oracle_dot(c.vector, r.vector));
    p += best;
  }
  p /= static_cast<double>(cand.size());
  double r = 0.0;
  for (const auto& g : ref) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : cand) best = std::max(best, oracle_dot(c.vector, g.vector));
    r += best;
  }
  r /= static_cast<double>(ref.size());
  const double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  return {p, r, f};
}

/// Exhaustive double loop over the pred x gold score matrix.
inline double oracle_max_pairwise(const std::vector<TokenMatrix>& preds,
                                  const std::vector<TokenMatrix>& golds, bool over_pred) {
  if (preds.empty()) return 0.0;
  std::vector<std::vector<double>> m(preds.size(), std::vector<double>(golds.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < golds.size(); ++j) m[i][j] = oracle_pair(preds[i], golds[j]).f;
  }
  double total = 0.0;
  if (over_pred) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < golds.size(); ++j) best = std::max(best, m[i][j]);
      total += best;
    }
    return total / static_cast<double>(preds.size());
  }
  for (std::size_t j = 0; j < golds.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < preds.size(); ++i) best = std::max(best, m[i][j]);
    total += best;
  }
  return total / static_cast<double>(golds.size());
}

/// Random dense unit-vector token matrix with `n` tokens over `dim` dims.
inline TokenMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  TokenMatrix m;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = nd(rng);
    l2_normalize(v);
    m.push_back({"t" + std::to_string(i), std::move(v)});
  }
  return m;
}

}  // namespace selfstate::testing
