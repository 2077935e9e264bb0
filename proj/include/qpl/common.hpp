#pragma once
// Shared error taxonomy and circle (R/Z) helpers used across the library.

#include <cmath>
#include <stdexcept>
#include <string>

namespace qpl {

enum class ErrorCode {
  ConfigError,          // malformed configuration / invalid argument
  NonConvergent,        // iteration failed to converge
  CapExceeded,          // search hit its iteration cap
  Overflow,             // value left the representable range
  TooManyCriticalPoints,
  DegenerateCritical,
  NotEven,
  DegenerateNorm,       // matrix norm too close to 1 for direction extraction
  NoBracketing,
  LostCriticalPoint,
  DepthExceeded,
  NoLocalizedState,
  NotDiophantine,
  NoSignChange,
  NonCauchy,
  ResidualTooLarge,
  InsufficientDecay,
  Internal,
};

// Exit-code category used by the CLI: 1 config, 2 pipeline gate, 3 internal.
inline int exit_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return 1;
    case ErrorCode::Internal:
    case ErrorCode::Overflow:
      return 3;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::TooManyCriticalPoints: return "TooManyCriticalPoints";
    case ErrorCode::DegenerateCritical: return "DegenerateCritical";
    case ErrorCode::NotEven: return "NotEven";
    case ErrorCode::DegenerateNorm: return "DegenerateNorm";
    case ErrorCode::NoBracketing: return "NoBracketing";
    case ErrorCode::LostCriticalPoint: return "LostCriticalPoint";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::NoLocalizedState: return "NoLocalizedState";
    case ErrorCode::NotDiophantine: return "NotDiophantine";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::NonCauchy: return "NonCauchy";
    case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::InsufficientDecay: return "InsufficientDecay";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

// ---- circle R/Z -----------------------------------------------------------

// Wraps into [0, 1).
inline double wrap_unit(double x) {
  double y = x - std::floor(x);
  return (y >= 1.0) ? y - 1.0 : y;
}

// Distance to the nearest integer, in [0, 1/2].
inline double dist_to_integers(double x) {
  double y = x - std::floor(x);
  return (y <= 0.5) ? y : 1.0 - y;
}

// Circle distance between two phases, in [0, 1/2].
inline double circle_dist(double a, double b) { return dist_to_integers(a - b); }

// Signed representative of x in (-1/2, 1/2].
inline double wrap_signed(double x) {
  double y = x - std::floor(x);
  return (y > 0.5) ? y - 1.0 : y;
}

} // namespace qpl
