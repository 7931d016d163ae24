#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sbts {

/// Coarse failure class, rendered by the CLI as a machine-parsable token.
enum class ErrorCategory {
  InvalidArgument,
  InvalidData,
  Parse,
  Io,
  GridMismatch,
  ZeroWeightMass,
  CholeskyFailure,
  Numerical,
};

constexpr std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return "invalid_argument";
    case ErrorCategory::InvalidData: return "invalid_data";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::GridMismatch: return "grid_mismatch";
    case ErrorCategory::ZeroWeightMass: return "zero_weight_mass";
    case ErrorCategory::CholeskyFailure: return "cholesky_failure";
    case ErrorCategory::Numerical: return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Which invariant a grid or dataset failed. Each violation is distinct so
/// callers and tests can tell them apart without parsing messages.
enum class Violation {
  EmptyGrid,
  NonFiniteDate,
  NonPositiveDate,
  NonIncreasingDates,
  EmptyDataset,
  BadDimension,
  LengthMismatch,
  NonFiniteValue,
};

class InvalidData : public Error {
 public:
  InvalidData(Violation v, const std::string& what)
      : Error(ErrorCategory::InvalidData, what), violation_(v) {}

  Violation violation() const noexcept { return violation_; }

 private:
  Violation violation_;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCategory::InvalidArgument, what);
}

}  // namespace sbts
