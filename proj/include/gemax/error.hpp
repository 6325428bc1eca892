#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gemax {

enum class ErrorCode {
  EmptyGrid,
  EmptyImage,
  InvalidArgument,
  IndexOutOfRange,
  Infeasible,
  InvalidTau,
  TooLarge,
  MismatchedN,
  LengthMismatch,
  TooFewMaps,
  BadSizes,
  Io,
  Malformed,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyGrid: return "empty grid";
    case ErrorCode::EmptyImage: return "empty image";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::IndexOutOfRange: return "index out of range";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::InvalidTau: return "invalid tau";
    case ErrorCode::TooLarge: return "too large";
    case ErrorCode::MismatchedN: return "mismatched N";
    case ErrorCode::LengthMismatch: return "length mismatch";
    case ErrorCode::TooFewMaps: return "too few maps";
    case ErrorCode::BadSizes: return "bad sizes";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Malformed: return "malformed input";
  }
  return "unknown";
}

// Every failure in the library surfaces as this exception; code() is stable,
// what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gemax
