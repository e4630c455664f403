#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tclkit {

/// Coarse failure category. The CLI prints it as the first token of its
/// one-line error report, so names are stable.
enum class ErrorKind {
  InvalidInput,
  DimensionMismatch,
  Domain,
  Separation,
  Schema,
  Io,
  Usage,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::Domain: return "domain_error";
    case ErrorKind::Separation: return "perfect_separation";
    case ErrorKind::Schema: return "schema_error";
    case ErrorKind::Io: return "io_error";
    case ErrorKind::Usage: return "usage_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tclkit
