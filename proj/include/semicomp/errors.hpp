#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semicomp {

enum class ErrorCode {
  Domain,
  Range,
  UnsupportedOrder,
  EmptyData,
  NoComparablePairs,
  NoRoot,
  NonFiniteLikelihood,
  NotIdentified,
  EventNotObserved,
  InsufficientData,
  Config,
  Parse,
  Estimation,
  TooManyFailures,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::Range: return "RangeError";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::NoComparablePairs: return "NoComparablePairs";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case ErrorCode::NotIdentified: return "NotIdentified";
    case ErrorCode::EventNotObserved: return "EventNotObserved";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Estimation: return "EstimationError";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Error";
}

}  // namespace semicomp
