#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fired {

enum class ErrorCode {
  EmptyIntersection,
  ParseError,
  NonUniformSpacing,
  NonBinaryLabel,
  NonFiniteValue,
  DuplicateName,
  RowCountMismatch,
  InvalidConfig,
  TooFewSamples,
  AllFiltered,
  DegenerateCovariance,
  ShapeMismatch,
  NumericalFailure,
  LengthMismatch,
  SingleClassTraining,
  NonFiniteLoss,
  EmptyGroundTruth,
  MissingRank,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; `code()` is the
// machine-readable discriminator used by the CLI error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fired
