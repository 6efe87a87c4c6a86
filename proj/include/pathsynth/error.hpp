#pragma once

#include <stdexcept>
#include <string>

namespace pathsynth {

//! Classifies every failure the library can raise. The CLI maps these onto
//! process exit codes: Io -> 2, numerical failures -> 4, everything else -> 3.
enum class ErrorCode {
  // input validation
  NonFinite,
  TooShort,
  TraceTooLong,
  TooWide,
  ConstantColumn,
  InvalidParameter,
  OutOfRange,
  ShapeMismatch,
  DimensionMismatch,
  NonPositiveLambda,
  DegenerateResiduals,
  TooShortToTest,
  TraceTooShortForL,
  EmptySet,
  DegenerateSizes,
  KTooLarge,
  NoBinsRetained,
  // numerical failures
  CholeskyFailure,
  NoConvergence,
  // I/O
  Io,
};

inline const char* error_code_name(ErrorCode code)
{
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::TraceTooLong: return "TraceTooLong";
    case ErrorCode::TooWide: return "TooWide";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
    case ErrorCode::DegenerateResiduals: return "DegenerateResiduals";
    case ErrorCode::TooShortToTest: return "TooShortToTest";
    case ErrorCode::TraceTooShortForL: return "TraceTooShortForL";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateSizes: return "DegenerateSizes";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NoBinsRetained: return "NoBinsRetained";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + what)
    , code_(code)
  {}

  ErrorCode code() const { return code_; }

  bool is_numerical() const
  {
    return code_ == ErrorCode::CholeskyFailure || code_ == ErrorCode::NoConvergence;
  }

 private:
  ErrorCode code_;
};

}  // namespace pathsynth
