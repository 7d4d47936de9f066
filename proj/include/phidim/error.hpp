#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phidim {

enum class ErrorKind {
  invalid_ratio,
  not_decreasing,
  not_normalized,
  insufficient_depth,
  out_of_domain,
  invalid_function,
  no_admissible_window,
  depth_unsupported,
  invalid_range,
  truncation_violation,
  invalid_policy,
  not_level_comparable,
  out_of_regime,
  hypothesis_not_met,
  config,
  io,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type; kind() is stable and
// is what callers (and the CLI exit paths) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_ratio: return "invalid-ratio";
    case ErrorKind::not_decreasing: return "not-decreasing";
    case ErrorKind::not_normalized: return "not-normalized";
    case ErrorKind::insufficient_depth: return "insufficient-depth";
    case ErrorKind::out_of_domain: return "out-of-domain";
    case ErrorKind::invalid_function: return "invalid-function";
    case ErrorKind::no_admissible_window: return "no-admissible-window";
    case ErrorKind::depth_unsupported: return "depth-unsupported";
    case ErrorKind::invalid_range: return "invalid-range";
    case ErrorKind::truncation_violation: return "truncation-violation";
    case ErrorKind::invalid_policy: return "invalid-policy";
    case ErrorKind::not_level_comparable: return "not-level-comparable";
    case ErrorKind::out_of_regime: return "out-of-regime";
    case ErrorKind::hypothesis_not_met: return "hypothesis-not-met";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace phidim
