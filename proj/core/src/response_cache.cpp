#include <chrono>
#include <ctime>
#include <fstream>

#include <fmt/format.h>

#include "selfstate/llm_backend.hpp"

using nlohmann::json;

namespace selfstate {
namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

bool is_hex_key(const std::string& key) {
  return key.size() == 64 && key.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ifstream in(file_, std::ios::binary);
  if (!in) {
    std::ofstream create(file_, std::ios::binary | std::ios::app);
    if (!create) throw std::runtime_error("cannot open cache file " + file_.string());
    return;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string key = j.at("key").get<std::string>();
      if (!is_hex_key(key)) throw std::invalid_argument("bad key");
      entries_[key] = j.at("response_content").get<std::string>();
    } catch (const std::exception&) {
      load_diagnostics_.push_back(
          {"CacheCorrupt", fmt::format("{}:{}: skipped corrupt cache line", file_.string(), line_no)});
    }
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void ResponseCache::append(const std::string& key, const std::string& response_content) {
  const json entry = {{"key", key}, {"response_content", response_content}, {"created_at", utc_timestamp()}};
  const std::string line = entry.dump() + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to cache file " + file_.string());
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  entries_[key] = response_content;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace selfstate
