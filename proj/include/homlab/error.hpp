#pragma once

#include <stdexcept>
#include <string>

namespace homlab {

enum class ErrorCode {
  InvalidArgument,
  NotMeanZero,
  NoConvergence,
  DeltaTooLarge,
  InvalidSpec,
  EnsembleTooSmall,
  ZeroFrequency,
  InconsistentProbes,
  InsufficientProbes,
  InsufficientPoints,
  TooLarge,
  InvalidOrder,
  NoOverlap,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Every failure in the library surfaces as this exception; `code()` is the
/// machine-readable part, `what()` carries detail for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace homlab
