#include "selfstate/predictions.hpp"

#include "selfstate/io.hpp"

using nlohmann::json;

namespace selfstate {

json to_json(const PredictionFile& file) {
  json preds = json::array();
  for (const auto& p : file.predictions) {
    preds.push_back({{"post_id", p.post_id}, {"text", p.text}, {"label", to_string(p.label)}});
  }
  return {{"run_id", file.run_id},
          {"strategy", file.strategy},
          {"config", file.config},
          {"predictions", std::move(preds)}};
}

PredictionFile prediction_file_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw SchemaViolation(source, "$", "expected object");
  PredictionFile out;
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw SchemaViolation(source, std::string("$.") + key, "expected string");
    }
    return it->get<std::string>();
  };
  out.run_id = str("run_id");
  out.strategy = str("strategy");
  if (auto it = j.find("config"); it != j.end()) out.config = *it;

  const auto it = j.find("predictions");
  if (it == j.end() || !it->is_array()) {
    throw SchemaViolation(source, "$.predictions", "expected array");
  }
  const auto id = template_id_from_string(out.strategy);
  const TemplateId tmpl = id ? *id : strategy_preset(out.strategy).strategy;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& p = (*it)[i];
    const std::string path = "$.predictions[" + std::to_string(i) + "]";
    if (!p.is_object() || !p.contains("post_id") || !p["post_id"].is_string() ||
        !p.contains("text") || !p["text"].is_string() || !p.contains("label") ||
        !p["label"].is_string()) {
      throw SchemaViolation(source, path, "expected {post_id, text, label} strings");
    }
    const auto label = label_from_string(p["label"].get<std::string>());
    if (!label) throw SchemaViolation(source, path + ".label", "expected adaptive|maladaptive");
    out.predictions.push_back(
        {p["post_id"].get<std::string>(), p["text"].get<std::string>(), *label, tmpl, std::nullopt});
  }
  return out;
}

PredictionFile load_predictions(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_text_file(file));
  } catch (const json::parse_error& e) {
    throw MalformedJson(file.string(), e.what());
  }
  return prediction_file_from_json(j, file.string());
}

void save_predictions(const PredictionFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(file).dump(2) + "\n");
}

}  // namespace selfstate
