#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfstate/strategies.hpp"

namespace selfstate {

/// `{"run_id", "strategy", "config", "predictions": [{"post_id", "text",
/// "label"}]}`. `strategy` holds the method key (e.g. "context_importance").
struct PredictionFile {
  std::string run_id;
  std::string strategy;
  nlohmann::json config = nlohmann::json::object();
  std::vector<PredictedSpan> predictions;
};

nlohmann::json to_json(const PredictionFile& file);
PredictionFile prediction_file_from_json(const nlohmann::json& j,
                                         const std::string& source = "<memory>");

PredictionFile load_predictions(const std::filesystem::path& file);
void save_predictions(const PredictionFile& file, const std::filesystem::path& path);

}  // namespace selfstate
