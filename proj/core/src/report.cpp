#include "selfstate/report.hpp"

#include <chrono>
#include <ctime>

#include <fmt/format.h>

#include "selfstate/errors.hpp"
#include "selfstate/hashing.hpp"
#include "selfstate/io.hpp"

using nlohmann::json;

namespace selfstate {

json to_json(const RunManifest& m, bool include_volatile) {
  json errors = json::array();
  for (const auto& e : m.errors) {
    errors.push_back({{"post_id", e.post_id}, {"code", e.code}, {"message", e.message}});
  }
  json diags = json::array();
  for (const auto& d : m.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});

  json j = {{"run_id", m.run_id},
            {"stage", m.stage},
            {"config", m.config},
            {"corpus_fingerprint", m.corpus_fingerprint},
            {"backend_id", m.backend_id},
            {"errors", std::move(errors)},
            {"diagnostics", std::move(diags)},
            {"counters", m.counters},
            {"outputs", m.outputs}};
  if (include_volatile) {
    j["cache"] = {{"hits", m.cache_hits}, {"misses", m.cache_misses}};
    j["timing"] = {{"started_at", m.started_at},
                   {"finished_at", m.finished_at},
                   {"wall_time_s", m.wall_time_s}};
  }
  return j;
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& file) {
  write_file_atomic(file, to_json(manifest).dump(2) + "\n");
}

std::string make_run_id(const std::string& method, const json& config,
                        const std::string& corpus_fingerprint, const std::string& backend_id) {
  const json key = {{"method", method},
                    {"config", config},
                    {"corpus", corpus_fingerprint},
                    {"backend", backend_id}};
  return method + "-" + sha256_hex(key.dump()).substr(0, 12);
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Comparison -------------------------------------------------------------------------

ComparisonTable compare_reports(const std::vector<EvaluationReport>& reports, bool force) {
  if (reports.empty()) throw InvalidConfig("compare needs at least one report");
  const auto& first = reports.front();
  if (!force) {
    for (const auto& r : reports) {
      if (r.embedder_id != first.embedder_id) {
        throw IncompatibleReports("embedder differs: '" + first.embedder_id + "' vs '" +
                                  r.embedder_id + "'");
      }
      if (r.direction != first.direction) {
        throw IncompatibleReports("direction differs: '" + first.direction + "' vs '" +
                                  r.direction + "'");
      }
    }
  }

  ComparisonTable table;
  table.embedder_id = first.embedder_id;
  table.direction = first.direction;
  table.weighted_formula_id = first.weighted_formula_id;
  for (const auto& r : reports) {
    const ScoreBlock& b = r.primary_scores();
    TableRow recall{r.method_label, r.run_id, RowKind::Recall, {b.overall, b.adaptive, b.maladaptive}};
    TableRow weighted{r.method_label, r.run_id, RowKind::Weighted,
                      {b.weighted_overall, b.weighted_adaptive, b.weighted_maladaptive}};
    table.rows.push_back(std::move(recall));
    table.rows.push_back(std::move(weighted));
  }

  for (RowKind kind : {RowKind::Recall, RowKind::Weighted}) {
    for (std::size_t col = 0; col < 3; ++col) {
      std::optional<double> best;
      for (const auto& row : table.rows) {
        if (row.kind == kind && row.values[col] && (!best || *row.values[col] > *best)) {
          best = row.values[col];
        }
      }
      if (!best) continue;
      for (auto& row : table.rows) {
        if (row.kind == kind && row.values[col] && *row.values[col] == *best) {
          row.is_max[col] = true;
        }
      }
    }
  }
  return table;
}

namespace {

std::string cell(const std::optional<double>& v, bool bold) {
  if (!v) return "n/a";
  auto s = fmt::format("{:.3f}", *v);
  return bold ? "**" + s + "**" : s;
}

}  // namespace

std::string to_markdown(const ComparisonTable& table) {
  std::string out;
  out += "| Method | Metric | Overall | Adaptive | Maladaptive |\n";
  out += "|---|---|---:|---:|---:|\n";
  for (const auto& row : table.rows) {
    const bool recall = row.kind == RowKind::Recall;
    out += fmt::format("| {} | {} | {} | {} | {} |\n", recall ? row.method_label : "",
                       recall ? "Recall" : "Weighted", cell(row.values[0], row.is_max[0]),
                       cell(row.values[1], row.is_max[1]), cell(row.values[2], row.is_max[2]));
  }
  out += fmt::format("\nEmbedder: {}; direction: {}; weighted formula: {}\n", table.embedder_id,
                     table.direction, table.weighted_formula_id);
  return out;
}

json to_json(const ComparisonTable& table) {
  json rows = json::array();
  static constexpr const char* kColumns[] = {"overall", "adaptive", "maladaptive"};
  for (const auto& row : table.rows) {
    json values = json::object();
    json maxima = json::object();
    for (std::size_t c = 0; c < 3; ++c) {
      values[kColumns[c]] = row.values[c] ? json(*row.values[c]) : json(nullptr);
      maxima[kColumns[c]] = row.is_max[c];
    }
    rows.push_back({{"method", row.method_label},
                    {"run_id", row.run_id},
                    {"metric", row.kind == RowKind::Recall ? "recall" : "weighted"},
                    {"values", std::move(values)},
                    {"is_max", std::move(maxima)}});
  }
  return {{"embedder", table.embedder_id},
          {"direction", table.direction},
          {"weighted_formula", table.weighted_formula_id},
          {"rows", std::move(rows)}};
}

}  // namespace selfstate
