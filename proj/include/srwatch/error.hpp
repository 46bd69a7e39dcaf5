#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srwatch {

enum class ErrorCode {
  InsufficientData,
  DegenerateNormalizer,
  NumericOverflow,
  InvalidThreshold,
  InvalidParameter,
  DegenerateInput,
  Collinearity,
  NoModel,
  InvalidModel,
  InvalidInput,
  NoAdmissibleThreshold,
  InvalidConfig,
  Parse,
  Validation,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::DegenerateNormalizer: return "degenerate-normalizer";
    case ErrorCode::NumericOverflow: return "numeric-overflow";
    case ErrorCode::InvalidThreshold: return "invalid-threshold";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::Collinearity: return "collinearity";
    case ErrorCode::NoModel: return "no-model";
    case ErrorCode::InvalidModel: return "invalid-model";
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::NoAdmissibleThreshold: return "no-admissible-threshold";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; the code tells callers which
/// precondition or numeric failure occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Numeric failures map to CLI exit code 2, everything else to 1.
  bool is_numeric() const noexcept {
    return code_ == ErrorCode::NumericOverflow || code_ == ErrorCode::NoModel;
  }

 private:
  ErrorCode code_;
};

}  // namespace srwatch
