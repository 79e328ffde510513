#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/corpus.hpp"
#include "selfstate/diagnostics.hpp"
#include "selfstate/embedding.hpp"
#include "selfstate/predictions.hpp"

namespace selfstate {

/// Identifier stamped into every report for the token-ratio penalty
/// min(pred, gold) / max(pred, gold).
inline constexpr std::string_view kWeightedFormulaId = "minmax-token-ratio-v1";

enum class PairKernel { F1, Precision, Recall };
enum class Direction { OverPred, OverGold };

std::string_view to_string(PairKernel kernel) noexcept;
std::string_view to_string(Direction direction) noexcept;  // "pred" / "gold"
std::optional<PairKernel> pair_kernel_from_string(std::string_view name) noexcept;
std::optional<Direction> direction_from_string(std::string_view name) noexcept;

struct PairScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// 2PR/(P+R), or 0 when P+R == 0.
double f1_score(double precision, double recall) noexcept;
double select(const PairScore& score, PairKernel kernel) noexcept;

/// Inverse document frequency over a reference collection:
/// ln((M + 1) / (df + 1)) with M documents.
class IdfTable {
 public:
  static IdfTable build(const std::vector<TokenMatrix>& documents);
  double weight(const std::string& token) const;

 private:
  std::unordered_map<std::string, double> idf_;
  double unseen_ = 0.0;
};

struct ScoreOptions {
  PairKernel kernel = PairKernel::F1;
  const IdfTable* idf = nullptr;
  /// When set, P, R and F are mapped through (x - b) / (1 - b).
  std::optional<double> rescale_baseline;
};

/// Greedy matching over L2-normalized token vectors. R averages, over
/// reference tokens, the best cosine to any candidate token; P is the mirror
/// image. Throws EmptyTokenization when either side has no tokens.
PairScore bertscore_pair(const TokenMatrix& candidate, const TokenMatrix& reference,
                         const ScoreOptions& options = {});
PairScore bertscore_pair(std::string_view candidate, std::string_view reference,
                         EmbeddingProvider& provider, const ScoreOptions& options = {});

/// over_pred: mean over predictions of the best kernel score against any
/// gold; over_gold: mean over golds of the best score against any
/// prediction. Empty predictions give 0.0 (with a warning under over_pred).
/// Throws NoGoldSpans when `golds` is empty.
double max_pairwise_score(const std::vector<TokenMatrix>& preds,
                          const std::vector<TokenMatrix>& golds, Direction direction,
                          const ScoreOptions& options = {}, Diagnostics* diagnostics = nullptr);
double max_pairwise_score(const std::vector<std::string>& preds,
                          const std::vector<std::string>& golds, Direction direction,
                          EmbeddingProvider& provider, const ScoreOptions& options = {},
                          Diagnostics* diagnostics = nullptr);

/// unweighted * min(pred, gold) / max(pred, gold); 0 when pred_token_total is
/// 0. gold_token_total must be >= 1.
double weighted_recall(double unweighted, std::size_t pred_token_total,
                       std::size_t gold_token_total);

// Run evaluation -------------------------------------------------------------------

enum class TokenCounting { Provider, Whitespace };

struct EvalOptions {
  /// One or both directions; the first is the report's primary direction.
  std::vector<Direction> directions{Direction::OverPred};
  PairKernel kernel = PairKernel::F1;
  bool idf = false;
  std::optional<double> rescale_baseline;
  TokenCounting token_counting = TokenCounting::Provider;
};

/// "pred", "gold" or "both".
std::string direction_setting(const EvalOptions& options);

struct ScoreBlock {
  std::optional<double> overall;
  std::optional<double> adaptive;
  std::optional<double> maladaptive;
  std::optional<double> weighted_overall;
  std::optional<double> weighted_adaptive;
  std::optional<double> weighted_maladaptive;

  std::optional<double> recall(Label label) const {
    return label == Label::Adaptive ? adaptive : maladaptive;
  }
  std::optional<double> weighted(Label label) const {
    return label == Label::Adaptive ? weighted_adaptive : weighted_maladaptive;
  }
};

struct LabelTotals {
  std::size_t pred_tokens = 0;
  std::size_t gold_tokens = 0;
  std::size_t pred_spans = 0;
  std::size_t gold_spans = 0;
  std::size_t posts_with_gold = 0;
};

struct EvaluationReport {
  std::string run_id;
  std::string strategy;
  std::string method_label;

  /// Keyed by direction name ("pred", "gold"); `primary` names the block the
  /// top-level fields mirror.
  std::map<std::string, ScoreBlock> scores;
  std::string primary = "pred";

  LabelTotals adaptive_totals;
  LabelTotals maladaptive_totals;

  // Configuration echo.
  std::string direction;
  std::string embedder_id;
  std::string weighted_formula_id{kWeightedFormulaId};
  std::string pair_kernel = "f1";
  bool idf = false;
  std::optional<double> rescale_baseline;
  std::string token_counting = "provider";
  std::string pooling = "per-post-macro";

  Diagnostics warnings;

  const ScoreBlock& primary_scores() const { return scores.at(primary); }
  std::optional<double> overall_recall() const { return primary_scores().overall; }
  std::optional<double> recall_adaptive() const { return primary_scores().adaptive; }
  std::optional<double> recall_maladaptive() const { return primary_scores().maladaptive; }
  std::optional<double> weighted_overall() const { return primary_scores().weighted_overall; }
  std::optional<double> weighted_adaptive() const { return primary_scores().weighted_adaptive; }
  std::optional<double> weighted_maladaptive() const { return primary_scores().weighted_maladaptive; }
  const LabelTotals& totals(Label label) const {
    return label == Label::Adaptive ? adaptive_totals : maladaptive_totals;
  }
};

/// Per label: pools that label's predictions and gold spans within each post,
/// scores each post holding gold of that label with max_pairwise_score, and
/// averages over those posts. Overall is the mean of the labels present.
/// Weighted values apply weighted_recall with corpus-wide token totals.
/// Throws UnknownPostId, or NoGoldSpans when neither label has gold.
EvaluationReport evaluate_run(const PredictionFile& predictions,
                              const std::vector<Timeline>& corpus, EmbeddingProvider& provider,
                              const EvalOptions& options = {});

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j, const std::string& source = "<memory>");

EvaluationReport load_report(const std::filesystem::path& file);
void save_report(const EvaluationReport& report, const std::filesystem::path& file);

}  // namespace selfstate
