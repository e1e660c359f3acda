#pragma once

#include <stdexcept>
#include <string>

namespace hardylab {

enum class ErrorCode {
  EmptyCube,
  GridMismatch,
  NotInP,
  SingularSample,
  DegenerateNorm,
  NotAbsorbing,
  NoAlphaFound,
  IllConditioned,
  ResolutionExhausted,
  InsufficientFarField,
  NotOpen,
  ConfigInvalid,
};

const char* error_name(ErrorCode code);

// Module errors. `what()` carries the offending cube or sample.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCube: return "EmptyCube";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NotInP: return "NotInP";
    case ErrorCode::SingularSample: return "SingularSample";
    case ErrorCode::DegenerateNorm: return "DegenerateNorm";
    case ErrorCode::NotAbsorbing: return "NotAbsorbing";
    case ErrorCode::NoAlphaFound: return "NoAlphaFound";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::ResolutionExhausted: return "ResolutionExhausted";
    case ErrorCode::InsufficientFarField: return "InsufficientFarField";
    case ErrorCode::NotOpen: return "NotOpen";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace hardylab
