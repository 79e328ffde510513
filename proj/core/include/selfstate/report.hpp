#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/metrics.hpp"
#include "selfstate/strategies.hpp"

namespace selfstate {

/// Provenance record written next to every artifact. Everything outside
/// `timing` and `cache` is a deterministic function of the inputs.
struct RunManifest {
  std::string run_id;
  std::string stage;
  nlohmann::json config = nlohmann::json::object();
  std::string corpus_fingerprint;
  std::string backend_id;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::vector<PostError> errors;
  Diagnostics diagnostics;
  nlohmann::json counters = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();

  // Volatile fields.
  std::string started_at;
  std::string finished_at;
  double wall_time_s = 0.0;
};

/// Volatile keys ("timing", "cache") are omitted when `include_volatile` is
/// false, which is the form golden-file comparisons use.
nlohmann::json to_json(const RunManifest& manifest, bool include_volatile = true);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& file);

/// "<method>-<12 hex>", hashed from the method key, strategy config, corpus
/// fingerprint and backend id.
std::string make_run_id(const std::string& method, const nlohmann::json& config,
                        const std::string& corpus_fingerprint, const std::string& backend_id);

/// `<file>.manifest.json` next to an output file.
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

std::string utc_timestamp();

// Comparison table ------------------------------------------------------------------

enum class RowKind { Recall, Weighted };

struct TableRow {
  std::string method_label;
  std::string run_id;
  RowKind kind = RowKind::Recall;
  /// Overall, Adaptive, Maladaptive.
  std::array<std::optional<double>, 3> values;
  std::array<bool, 3> is_max{false, false, false};
};

/// Two rows per report (recall, then weighted). Maxima are computed per
/// column among rows of the same kind; ties are all flagged.
struct ComparisonTable {
  std::vector<TableRow> rows;
  std::string embedder_id;
  std::string direction;
  std::string weighted_formula_id;
};

/// Throws IncompatibleReports when embedder ids or direction settings differ,
/// unless `force`. Throws InvalidConfig for an empty list.
ComparisonTable compare_reports(const std::vector<EvaluationReport>& reports, bool force = false);

std::string to_markdown(const ComparisonTable& table);
nlohmann::json to_json(const ComparisonTable& table);

}  // namespace selfstate
