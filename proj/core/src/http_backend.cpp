#include <chrono>
#include <thread>

#include <httplib.h>

#include "http_util.hpp"
#include "selfstate/errors.hpp"
#include "selfstate/llm_backend.hpp"

using nlohmann::json;

namespace selfstate {
namespace {

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::string extract_content(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw MalformedBackendResponse(std::string("response is not JSON: ") + e.what());
  }
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() &&
      !j["choices"].empty()) {
    const json& choice = j["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object()) {
      auto it = choice["message"].find("content");
      if (it != choice["message"].end()) content = &*it;
    }
  }
  if (content == nullptr || !content->is_string()) {
    throw MalformedBackendResponse("missing choices[0].message.content: " +
                                   detail::excerpt(body));
  }
  return content->get<std::string>();
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  const auto url = detail::parse_base_url(options_.base_url);
  host_ = url.scheme_host_port;
  path_prefix_ = url.path_prefix;
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return "http:" + host_ + path_prefix_; }

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  validate(request);
  const std::string body = to_openai_body(request).dump();
  const std::string path = path_prefix_ + "/chat/completions";
  const double limit_s = std::chrono::duration<double>(options_.timeout).count();
  const int attempts = std::max(1, options_.retry.attempts);

  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  for (int attempt = 0;; ++attempt) {
    httplib::Client client(host_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);

    ++attempts_;
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const bool last = attempt + 1 >= attempts;

    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Connection || err == httplib::Error::BindIPAddress) {
        throw BackendUnreachable(host_ + ": " + httplib::to_string(err));
      }
      if (err == httplib::Error::Read || err == httplib::Error::Write ||
          err == httplib::Error::ConnectionTimeout) {
        if (last) throw Timeout(limit_s);
      } else {
        throw BackendUnreachable(host_ + ": " + httplib::to_string(err));
      }
    } else if (res->status >= 200 && res->status < 300) {
      ChatResponse out;
      out.content = extract_content(res->body);
      out.backend_id = id();
      out.latency_ms = std::chrono::duration<double, std::milli>(elapsed).count();
      return out;
    } else if (!retryable_status(res->status) || last) {
      throw HttpStatus(res->status, detail::excerpt(res->body));
    }
    std::this_thread::sleep_for(options_.retry.base_delay * (1 << attempt));
  }
}

}  // namespace selfstate
