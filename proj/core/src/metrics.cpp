#include "selfstate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "selfstate/errors.hpp"
#include "selfstate/io.hpp"
#include "selfstate/segment.hpp"

using nlohmann::json;

namespace selfstate {

std::string_view to_string(PairKernel kernel) noexcept {
  switch (kernel) {
    case PairKernel::F1: return "f1";
    case PairKernel::Precision: return "p";
    case PairKernel::Recall: return "r";
  }
  return "f1";
}

std::string_view to_string(Direction direction) noexcept {
  return direction == Direction::OverPred ? "pred" : "gold";
}

std::optional<PairKernel> pair_kernel_from_string(std::string_view name) noexcept {
  if (name == "f1") return PairKernel::F1;
  if (name == "p") return PairKernel::Precision;
  if (name == "r") return PairKernel::Recall;
  return std::nullopt;
}

std::optional<Direction> direction_from_string(std::string_view name) noexcept {
  if (name == "pred" || name == "over_pred") return Direction::OverPred;
  if (name == "gold" || name == "over_gold") return Direction::OverGold;
  return std::nullopt;
}

double f1_score(double precision, double recall) noexcept {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

double select(const PairScore& score, PairKernel kernel) noexcept {
  switch (kernel) {
    case PairKernel::F1: return score.f1;
    case PairKernel::Precision: return score.precision;
    case PairKernel::Recall: return score.recall;
  }
  return score.f1;
}

IdfTable IdfTable::build(const std::vector<TokenMatrix>& documents) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::set<std::string> seen;
    for (const auto& t : doc) seen.insert(t.token);
    for (const auto& tok : seen) ++df[tok];
  }
  IdfTable table;
  const double m = static_cast<double>(documents.size());
  table.unseen_ = std::log(m + 1.0);
  for (const auto& [tok, count] : df) {
    table.idf_[tok] = std::log((m + 1.0) / (static_cast<double>(count) + 1.0));
  }
  return table;
}

double IdfTable::weight(const std::string& token) const {
  auto it = idf_.find(token);
  return it == idf_.end() ? unseen_ : it->second;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Weighted mean over `side` tokens of their best similarity to the other side.
double greedy_side(const std::vector<std::vector<double>>& sim, bool over_rows,
                   const TokenMatrix& side, const IdfTable* idf) {
  const std::size_t n = over_rows ? sim.size() : sim.front().size();
  const std::size_t m = over_rows ? sim.front().size() : sim.size();
  std::vector<double> weights(n, 1.0);
  if (idf != nullptr) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights[i] = idf->weight(side[i].token);
    if (total == 0.0) std::fill(weights.begin(), weights.end(), 1.0);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) best = std::max(best, over_rows ? sim[i][j] : sim[j][i]);
    num += weights[i] * best;
    den += weights[i];
  }
  return num / den;
}

double rescale(double x, double baseline) { return (x - baseline) / (1.0 - baseline); }

}  // namespace

PairScore bertscore_pair(const TokenMatrix& candidate, const TokenMatrix& reference,
                         const ScoreOptions& options) {
  if (candidate.empty()) throw EmptyTokenization("candidate");
  if (reference.empty()) throw EmptyTokenization("reference");

  std::vector<std::vector<double>> sim(candidate.size(), std::vector<double>(reference.size()));
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      sim[i][j] = dot(candidate[i].vector, reference[j].vector);
    }
  }
  PairScore s;
  s.precision = greedy_side(sim, true, candidate, options.idf);
  s.recall = greedy_side(sim, false, reference, options.idf);
  s.f1 = f1_score(s.precision, s.recall);
  if (options.rescale_baseline) {
    const double b = *options.rescale_baseline;
    s.precision = rescale(s.precision, b);
    s.recall = rescale(s.recall, b);
    s.f1 = rescale(s.f1, b);
  }
  return s;
}

PairScore bertscore_pair(std::string_view candidate, std::string_view reference,
                         EmbeddingProvider& provider, const ScoreOptions& options) {
  return bertscore_pair(embed_tokens(candidate, provider), embed_tokens(reference, provider),
                        options);
}

double max_pairwise_score(const std::vector<TokenMatrix>& preds,
                          const std::vector<TokenMatrix>& golds, Direction direction,
                          const ScoreOptions& options, Diagnostics* diagnostics) {
  if (golds.empty()) throw NoGoldSpans("gold list");
  if (preds.empty()) {
    if (direction == Direction::OverPred) {
      report(diagnostics, "NoPredictions", "no predictions to average over; scoring 0.0");
    }
    return 0.0;
  }
  const auto& outer = direction == Direction::OverPred ? preds : golds;
  const auto& inner = direction == Direction::OverPred ? golds : preds;
  double sum = 0.0;
  for (const auto& o : outer) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& i : inner) {
      const auto& cand = direction == Direction::OverPred ? o : i;
      const auto& ref = direction == Direction::OverPred ? i : o;
      best = std::max(best, select(bertscore_pair(cand, ref, options), options.kernel));
    }
    sum += best;
  }
  return sum / static_cast<double>(outer.size());
}

double max_pairwise_score(const std::vector<std::string>& preds,
                          const std::vector<std::string>& golds, Direction direction,
                          EmbeddingProvider& provider, const ScoreOptions& options,
                          Diagnostics* diagnostics) {
  std::vector<TokenMatrix> p;
  std::vector<TokenMatrix> g;
  for (const auto& s : preds) p.push_back(embed_tokens(s, provider));
  for (const auto& s : golds) g.push_back(embed_tokens(s, provider));
  return max_pairwise_score(p, g, direction, options, diagnostics);
}

double weighted_recall(double unweighted, std::size_t pred_token_total,
                       std::size_t gold_token_total) {
  if (gold_token_total == 0) throw std::invalid_argument("gold_token_total must be >= 1");
  if (pred_token_total == 0) return 0.0;
  const double lo = static_cast<double>(std::min(pred_token_total, gold_token_total));
  const double hi = static_cast<double>(std::max(pred_token_total, gold_token_total));
  return unweighted * (lo / hi);
}

std::string direction_setting(const EvalOptions& options) {
  const bool pred = std::find(options.directions.begin(), options.directions.end(),
                              Direction::OverPred) != options.directions.end();
  const bool gold = std::find(options.directions.begin(), options.directions.end(),
                              Direction::OverGold) != options.directions.end();
  if (pred && gold) return "both";
  return gold ? "gold" : "pred";
}

// Evaluation ----------------------------------------------------------------------

EvaluationReport evaluate_run(const PredictionFile& predictions,
                              const std::vector<Timeline>& corpus, EmbeddingProvider& provider,
                              const EvalOptions& options) {
  if (options.directions.empty()) throw std::invalid_argument("no evaluation direction");

  EvaluationReport report;
  report.run_id = predictions.run_id;
  report.strategy = predictions.strategy;
  report.method_label = method_label(predictions.strategy);
  report.primary = std::string(to_string(options.directions.front()));
  report.direction = direction_setting(options);
  report.embedder_id = provider.id();
  report.pair_kernel = std::string(to_string(options.kernel));
  report.idf = options.idf;
  report.rescale_baseline = options.rescale_baseline;
  report.token_counting = options.token_counting == TokenCounting::Provider ? "provider" : "whitespace";

  std::vector<const Post*> posts;
  std::unordered_map<std::string, std::size_t> post_index;
  for (const auto& t : corpus) {
    for (const auto& p : t.posts) {
      post_index.emplace(p.post_id, posts.size());
      posts.push_back(&p);
    }
  }
  // pred_texts[post][label] -> texts
  std::vector<std::array<std::vector<std::string>, 2>> pred_texts(posts.size());
  for (const auto& p : predictions.predictions) {
    auto it = post_index.find(p.post_id);
    if (it == post_index.end()) throw UnknownPostId(p.post_id);
    pred_texts[it->second][static_cast<std::size_t>(p.label)].push_back(p.text);
  }

  // Embed every distinct text once, in a fixed order.
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (Label label : kLabels) {
      for (const auto& s : posts[i]->evidence(label)) distinct.insert(s);
      for (const auto& s : pred_texts[i][static_cast<std::size_t>(label)]) distinct.insert(s);
    }
  }
  const std::vector<std::string> texts(distinct.begin(), distinct.end());
  auto batch = provider.embed_batch(texts);
  if (batch.size() != texts.size()) throw ProviderUnreachable("embedding batch size mismatch");
  std::unordered_map<std::string, TokenMatrix> embedded;
  std::optional<std::size_t> dim;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (auto& tok : batch[i]) {
      if (!dim) dim = tok.vector.size();
      if (tok.vector.size() != *dim) throw DimensionMismatch(*dim, tok.vector.size());
      l2_normalize(tok.vector);
    }
    embedded.emplace(texts[i], std::move(batch[i]));
  }

  auto tokens_of = [&](const std::string& s) -> std::size_t {
    return options.token_counting == TokenCounting::Provider ? embedded.at(s).size() : word_count(s);
  };

  // Gather per-post matrices and corpus-wide totals.
  struct PostLabel {
    std::vector<TokenMatrix> preds;
    std::vector<TokenMatrix> golds;
  };
  std::vector<std::array<PostLabel, 2>> work(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (Label label : kLabels) {
      const auto li = static_cast<std::size_t>(label);
      LabelTotals& totals = label == Label::Adaptive ? report.adaptive_totals : report.maladaptive_totals;
      for (const auto& s : posts[i]->evidence(label)) {
        ++totals.gold_spans;
        totals.gold_tokens += tokens_of(s);
        const auto& m = embedded.at(s);
        if (m.empty()) {
          report.warnings.push_back({"EmptyTokenization", "post " + posts[i]->post_id +
                                                              ": gold span has no tokens"});
          continue;
        }
        work[i][li].golds.push_back(m);
      }
      for (const auto& s : pred_texts[i][li]) {
        ++totals.pred_spans;
        totals.pred_tokens += tokens_of(s);
        const auto& m = embedded.at(s);
        if (m.empty()) {
          report.warnings.push_back({"EmptyTokenization", "post " + posts[i]->post_id +
                                                              ": predicted span has no tokens"});
          continue;
        }
        work[i][li].preds.push_back(m);
      }
      if (!work[i][li].golds.empty()) ++totals.posts_with_gold;
    }
  }

  std::optional<IdfTable> idf;
  if (options.idf) {
    std::vector<TokenMatrix> docs;
    for (const auto& w : work) {
      for (const auto& pl : w) docs.insert(docs.end(), pl.golds.begin(), pl.golds.end());
    }
    idf = IdfTable::build(docs);
  }
  ScoreOptions sopts;
  sopts.kernel = options.kernel;
  sopts.idf = idf ? &*idf : nullptr;
  sopts.rescale_baseline = options.rescale_baseline;

  for (Label label : kLabels) {
    if (report.totals(label).posts_with_gold == 0) {
      report.warnings.push_back({"NoGoldSpans", std::string("no gold spans for label ") +
                                                    std::string(to_string(label))});
    }
  }

  bool any_present = false;
  for (std::size_t d = 0; d < options.directions.size(); ++d) {
    const Direction dir = options.directions[d];
    ScoreBlock block;
    for (Label label : kLabels) {
      const auto li = static_cast<std::size_t>(label);
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < posts.size(); ++i) {
        const auto& pl = work[i][li];
        if (pl.golds.empty()) continue;
        if (pl.preds.empty() && dir == Direction::OverPred && d == 0) {
          report.warnings.push_back({"NoPredictions", "post " + posts[i]->post_id + " (" +
                                                          std::string(to_string(label)) +
                                                          "): no predictions, scored 0.0"});
        }
        sum += max_pairwise_score(pl.preds, pl.golds, dir, sopts);
        ++n;
      }
      if (n == 0) continue;
      any_present = true;
      const double recall = sum / static_cast<double>(n);
      const LabelTotals& totals = report.totals(label);
      const double weighted = weighted_recall(recall, totals.pred_tokens, totals.gold_tokens);
      if (label == Label::Adaptive) {
        block.adaptive = recall;
        block.weighted_adaptive = weighted;
      } else {
        block.maladaptive = recall;
        block.weighted_maladaptive = weighted;
      }
    }
    auto mean = [](std::optional<double> a, std::optional<double> b) -> std::optional<double> {
      if (a && b) return (*a + *b) / 2.0;
      return a ? a : b;
    };
    block.overall = mean(block.adaptive, block.maladaptive);
    block.weighted_overall = mean(block.weighted_adaptive, block.weighted_maladaptive);
    report.scores[std::string(to_string(dir))] = block;
  }
  if (!any_present) throw NoGoldSpans("evaluation corpus");
  return report;
}

// Serialization --------------------------------------------------------------------

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json block_json(const ScoreBlock& b) {
  return {{"overall_recall", opt(b.overall)},
          {"recall_adaptive", opt(b.adaptive)},
          {"recall_maladaptive", opt(b.maladaptive)},
          {"weighted_overall", opt(b.weighted_overall)},
          {"weighted_adaptive", opt(b.weighted_adaptive)},
          {"weighted_maladaptive", opt(b.weighted_maladaptive)}};
}

ScoreBlock block_from_json(const json& j) {
  ScoreBlock b;
  b.overall = get_opt(j, "overall_recall");
  b.adaptive = get_opt(j, "recall_adaptive");
  b.maladaptive = get_opt(j, "recall_maladaptive");
  b.weighted_overall = get_opt(j, "weighted_overall");
  b.weighted_adaptive = get_opt(j, "weighted_adaptive");
  b.weighted_maladaptive = get_opt(j, "weighted_maladaptive");
  return b;
}

json totals_json(const LabelTotals& t) {
  return {{"pred_tokens", t.pred_tokens},
          {"gold_tokens", t.gold_tokens},
          {"n_pred", t.pred_spans},
          {"n_gold", t.gold_spans},
          {"posts_with_gold", t.posts_with_gold}};
}

LabelTotals totals_from_json(const json& j) {
  LabelTotals t;
  t.pred_tokens = j.value("pred_tokens", std::size_t{0});
  t.gold_tokens = j.value("gold_tokens", std::size_t{0});
  t.pred_spans = j.value("n_pred", std::size_t{0});
  t.gold_spans = j.value("n_gold", std::size_t{0});
  t.posts_with_gold = j.value("posts_with_gold", std::size_t{0});
  return t;
}

}  // namespace

json to_json(const EvaluationReport& r) {
  json j = block_json(r.primary_scores());
  j["run_id"] = r.run_id;
  j["strategy"] = r.strategy;
  j["method_label"] = r.method_label;
  json scores = json::object();
  for (const auto& [dir, block] : r.scores) scores[dir] = block_json(block);
  j["scores"] = std::move(scores);
  j["totals"] = {{"adaptive", totals_json(r.adaptive_totals)},
                 {"maladaptive", totals_json(r.maladaptive_totals)}};
  j["config"] = {{"direction", r.direction},
                 {"primary_direction", r.primary},
                 {"embedder", r.embedder_id},
                 {"weighted_formula", r.weighted_formula_id},
                 {"pair_kernel", r.pair_kernel},
                 {"idf", r.idf},
                 {"rescale_baseline", opt(r.rescale_baseline)},
                 {"token_counting", r.token_counting},
                 {"pooling", r.pooling}};
  json warnings = json::array();
  for (const auto& w : r.warnings) warnings.push_back({{"code", w.code}, {"message", w.message}});
  j["warnings"] = std::move(warnings);
  return j;
}

EvaluationReport report_from_json(const json& j, const std::string& source) {
  EvaluationReport r;
  try {
    r.run_id = j.value("run_id", "");
    r.strategy = j.at("strategy").get<std::string>();
    r.method_label = j.value("method_label", method_label(r.strategy));
    const json& cfg = j.at("config");
    r.direction = cfg.at("direction").get<std::string>();
    r.primary = cfg.value("primary_direction", "pred");
    r.embedder_id = cfg.at("embedder").get<std::string>();
    r.weighted_formula_id = cfg.value("weighted_formula", std::string(kWeightedFormulaId));
    r.pair_kernel = cfg.value("pair_kernel", "f1");
    r.idf = cfg.value("idf", false);
    r.rescale_baseline = get_opt(cfg, "rescale_baseline");
    r.token_counting = cfg.value("token_counting", "provider");
    r.pooling = cfg.value("pooling", "per-post-macro");
    if (j.contains("scores")) {
      for (const auto& [dir, block] : j.at("scores").items()) r.scores[dir] = block_from_json(block);
    }
    if (r.scores.find(r.primary) == r.scores.end()) r.scores[r.primary] = block_from_json(j);
    if (j.contains("totals")) {
      r.adaptive_totals = totals_from_json(j["totals"].value("adaptive", json::object()));
      r.maladaptive_totals = totals_from_json(j["totals"].value("maladaptive", json::object()));
    }
    for (const auto& w : j.value("warnings", json::array())) {
      r.warnings.push_back({w.value("code", ""), w.value("message", "")});
    }
  } catch (const json::exception& e) {
    throw SchemaViolation(source, "$", e.what());
  }
  return r;
}

EvaluationReport load_report(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_text_file(file));
  } catch (const json::parse_error& e) {
    throw MalformedJson(file.string(), e.what());
  }
  return report_from_json(j, file.string());
}

void save_report(const EvaluationReport& report, const std::filesystem::path& file) {
  write_file_atomic(file, to_json(report).dump(2) + "\n");
}

}  // namespace selfstate
