#include "selfstate/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "selfstate/errors.hpp"
#include "selfstate/hashing.hpp"
#include "selfstate/io.hpp"
#include "selfstate/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace selfstate {

std::string_view to_string(Label label) noexcept {
  return label == Label::Adaptive ? "adaptive" : "maladaptive";
}

std::optional<Label> label_from_string(std::string_view name) noexcept {
  if (name == "adaptive") return Label::Adaptive;
  if (name == "maladaptive") return Label::Maladaptive;
  return std::nullopt;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path,
                    const std::string& source) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaViolation(source, path + "." + key, "missing required field");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path,
                           const std::string& source) {
  const json& v = require(obj, key, path, source);
  if (!v.is_string()) throw SchemaViolation(source, path + "." + key, "expected string");
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& path,
                            const std::string& source) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw SchemaViolation(source, path + "." + key, "expected string");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key,
                                     const std::string& path, const std::string& source) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_array()) throw SchemaViolation(source, path + "." + key, "expected array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& v = (*it)[i];
    if (!v.is_string()) {
      throw SchemaViolation(source, path + "." + key + "[" + std::to_string(i) + "]",
                            "expected string");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<fs::path> timeline_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

}  // namespace

json to_json(const Timeline& timeline) {
  json posts = json::array();
  for (const Post& p : timeline.posts) {
    posts.push_back({
        {"post_id", p.post_id},
        {"text", p.text},
        {"adaptive_evidence", p.adaptive_evidence},
        {"maladaptive_evidence", p.maladaptive_evidence},
        {"summary", p.summary},
        {"wellbeing_score", p.wellbeing_score ? json(*p.wellbeing_score) : json(nullptr)},
    });
  }
  return {{"timeline_id", timeline.timeline_id},
          {"summary", timeline.summary},
          {"posts", std::move(posts)}};
}

Timeline timeline_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw SchemaViolation(source, "$", "expected object");
  Timeline t;
  t.timeline_id = require_string(j, "timeline_id", "$", source);
  t.summary = optional_string(j, "summary", "$", source);
  const json& posts = require(j, "posts", "$", source);
  if (!posts.is_array()) throw SchemaViolation(source, "$.posts", "expected array");
  if (posts.empty()) throw SchemaViolation(source, "$.posts", "timeline has no posts");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const std::string path = "$.posts[" + std::to_string(i) + "]";
    const json& pj = posts[i];
    if (!pj.is_object()) throw SchemaViolation(source, path, "expected object");
    Post p;
    p.post_id = require_string(pj, "post_id", path, source);
    p.text = require_string(pj, "text", path, source);
    p.adaptive_evidence = string_list(pj, "adaptive_evidence", path, source);
    p.maladaptive_evidence = string_list(pj, "maladaptive_evidence", path, source);
    p.summary = optional_string(pj, "summary", path, source);
    if (auto it = pj.find("wellbeing_score"); it != pj.end() && !it->is_null()) {
      if (!it->is_number_integer()) {
        throw SchemaViolation(source, path + ".wellbeing_score", "expected integer or null");
      }
      p.wellbeing_score = it->get<std::int64_t>();
    }
    if (!seen.insert(p.post_id).second) {
      throw SchemaViolation(source, path + ".post_id", "duplicate post_id " + p.post_id);
    }
    t.posts.push_back(std::move(p));
  }
  return t;
}

std::vector<Timeline> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw EmptyDirectory(dir.string());
  const auto files = timeline_files(dir);
  if (files.empty()) throw EmptyDirectory(dir.string());

  std::vector<Timeline> out;
  out.reserve(files.size());
  for (const auto& file : files) {
    const std::string name = file.filename().string();
    json j;
    try {
      j = json::parse(read_text_file(file));
    } catch (const json::parse_error& e) {
      throw MalformedJson(name, e.what());
    }
    out.push_back(timeline_from_json(j, name));
  }
  return out;
}

void save_timeline(const Timeline& timeline, const fs::path& file) {
  write_file_atomic(file, to_json(timeline).dump(2) + "\n");
}

void save_corpus(const std::vector<Timeline>& timelines, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& t : timelines) save_timeline(t, dir / (t.timeline_id + ".json"));
}

std::vector<EvidenceSpan> locate_evidence(const Post& post, Diagnostics* diagnostics) {
  std::vector<EvidenceSpan> spans;
  for (Label label : kLabels) {
    for (const std::string& ev : post.evidence(label)) {
      const auto pos = ev.empty() ? std::string::npos : post.text.find(ev);
      if (pos == std::string::npos) {
        report(diagnostics, "EvidenceNotFound",
               "post " + post.post_id + ": evidence not found verbatim: \"" + ev + "\"");
        continue;
      }
      const std::size_t start = utf8::char_offset(post.text, pos);
      spans.push_back({post.post_id, label, ev, start, start + utf8::length(ev)});
    }
  }
  std::stable_sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  return spans;
}

std::string corpus_fingerprint(const fs::path& dir) {
  std::string buf;
  for (const auto& file : timeline_files(dir)) {
    const std::string bytes = read_text_file(file);
    buf += file.filename().string();
    buf.push_back('\0');
    buf += std::to_string(bytes.size());
    buf.push_back('\0');
    buf += bytes;
  }
  return sha256_hex(buf);
}

std::string corpus_fingerprint(const std::vector<Timeline>& timelines) {
  json arr = json::array();
  for (const auto& t : timelines) arr.push_back(to_json(t));
  return sha256_hex(arr.dump());
}

}  // namespace selfstate
