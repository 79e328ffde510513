#pragma once

#include <string>
#include <vector>

namespace selfstate {

/// A non-fatal condition reported alongside a result (skipped evidence,
/// discarded spans, corrupt cache lines).
struct Diagnostic {
  std::string code;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

inline void report(Diagnostics* sink, std::string code, std::string message) {
  if (sink != nullptr) sink->push_back({std::move(code), std::move(message)});
}

}  // namespace selfstate
