#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selfstate {

/// Base of every error thrown by the library. `code()` is a stable
/// machine-readable tag used in manifests and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// corpus

class MalformedJson : public Error {
 public:
  MalformedJson(const std::string& file, const std::string& detail)
      : Error("MalformedJson", file + ": " + detail), file_(file) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(const std::string& file, const std::string& field_path,
                  const std::string& detail)
      : Error("SchemaViolation", file + ": " + field_path + ": " + detail),
        file_(file),
        field_path_(field_path) {}
  const std::string& file() const noexcept { return file_; }
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string file_;
  std::string field_path_;
};

class EmptyDirectory : public Error {
 public:
  explicit EmptyDirectory(const std::string& dir)
      : Error("EmptyDirectory", "no timeline files in " + dir) {}
};

// segment

class EmptyText : public Error {
 public:
  EmptyText() : Error("EmptyText", "text is empty after stripping whitespace") {}
};

class NoGoldSpans : public Error {
 public:
  explicit NoGoldSpans(const std::string& what = "corpus")
      : Error("NoGoldSpans", "no gold evidence spans in " + what) {}
};

// llm backend

class BackendUnreachable : public Error {
 public:
  explicit BackendUnreachable(const std::string& detail)
      : Error("BackendUnreachable", detail) {}
};

class HttpStatus : public Error {
 public:
  HttpStatus(int status, std::string body_excerpt)
      : Error("HttpStatus", "HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class MalformedBackendResponse : public Error {
 public:
  explicit MalformedBackendResponse(const std::string& detail)
      : Error("MalformedBackendResponse", detail) {}
};

class Timeout : public Error {
 public:
  explicit Timeout(double limit_seconds)
      : Error("Timeout", "request exceeded " + std::to_string(limit_seconds) + " s"),
        limit_seconds_(limit_seconds) {}
  double limit_seconds() const noexcept { return limit_seconds_; }

 private:
  double limit_seconds_;
};

// strategies

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(const std::string& name)
      : Error("MissingPlaceholder", "no binding for {" + name + "}"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnknownPlaceholder : public Error {
 public:
  explicit UnknownPlaceholder(const std::string& name)
      : Error("UnknownPlaceholder", "template references unknown {" + name + "}"),
        name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class MalformedSpanResponse : public Error {
 public:
  explicit MalformedSpanResponse(const std::string& detail)
      : Error("MalformedSpanResponse", detail) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& detail) : Error("InvalidConfig", detail) {}
};

// metrics

class EmptyTokenization : public Error {
 public:
  explicit EmptyTokenization(const std::string& side)
      : Error("EmptyTokenization", side + " text produced no tokens"), side_(side) {}
  const std::string& side() const noexcept { return side_; }

 private:
  std::string side_;
};

class UnknownPostId : public Error {
 public:
  explicit UnknownPostId(const std::string& post_id)
      : Error("UnknownPostId", "prediction references unknown post " + post_id) {}
};

class ProviderUnreachable : public Error {
 public:
  explicit ProviderUnreachable(const std::string& detail)
      : Error("ProviderUnreachable", detail) {}
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("DimensionMismatch", "embedding dimension " + std::to_string(got) +
                                       " != " + std::to_string(expected)) {}
};

// report

class IncompatibleReports : public Error {
 public:
  explicit IncompatibleReports(const std::string& detail)
      : Error("IncompatibleReports", detail) {}
};

}  // namespace selfstate
