#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sampleguard {

enum class ErrorCode {
  Syntax,
  Duration,
  IntervalNotAllowed,
  UnsupportedFragment,
  SamplingTooCoarse,
  NonZeroLowerBound,
  ResolutionMismatch,
  InvalidTrace,
  UnknownAtom,
  InvalidGrid,
  InvalidAction,
  SingularSystem,
  Domain,
  AssumptionUnsatisfied,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::Duration: return "DurationError";
    case ErrorCode::IntervalNotAllowed: return "IntervalNotAllowed";
    case ErrorCode::UnsupportedFragment: return "UnsupportedFragment";
    case ErrorCode::SamplingTooCoarse: return "SamplingTooCoarse";
    case ErrorCode::NonZeroLowerBound: return "NonZeroLowerBound";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::InvalidTrace: return "InvalidTrace";
    case ErrorCode::UnknownAtom: return "UnknownAtom";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::AssumptionUnsatisfied: return "AssumptionUnsatisfied";
    case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with the byte offset into the input where it was detected.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorCode code, std::size_t position, const std::string& expected)
      : Error(code, "at position " + std::to_string(position) + ": " + expected),
        position_(position),
        expected_(expected) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

}  // namespace sampleguard
