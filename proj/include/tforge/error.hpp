#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tforge {

enum class ErrorCode {
  kInvalidArgument,
  kNonPositiveDepth,
  kNotStarShaped,
  kDegenerateGeometry,
  kOccludedAngle,
  kZeroStd,
  kEmptyCollection,
  kParseError,
  kCountMismatch,
  kAngleMismatch,
  kShapeMismatch,
  kGenerationFailed,
  kOutOfFrustum,
  kOverlapError,
  kModalityMismatch,
  kDivergenceDetected,
  kTooFewSamples,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// the CLI can map it onto an exit status and tests can match on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kNotStarShaped: return "NotStarShaped";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kOccludedAngle: return "OccludedAngle";
    case ErrorCode::kZeroStd: return "ZeroStd";
    case ErrorCode::kEmptyCollection: return "EmptyCollection";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kAngleMismatch: return "AngleMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kGenerationFailed: return "GenerationFailed";
    case ErrorCode::kOutOfFrustum: return "OutOfFrustum";
    case ErrorCode::kOverlapError: return "OverlapError";
    case ErrorCode::kModalityMismatch: return "ModalityMismatch";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tforge
