#include "gwlimits/errors.hpp"

namespace gwlimits {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedSpec: return "MalformedSpec";
    case ErrorCode::NotAProbability: return "NotAProbability";
    case ErrorCode::NotPrimitive: return "NotPrimitive";
    case ErrorCode::NotCritical: return "NotCritical";
    case ErrorCode::DegenerateH: return "DegenerateH";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::TypeNeverObserved: return "TypeNeverObserved";
    case ErrorCode::UnknownRule: return "UnknownRule";
    case ErrorCode::ZeroCg: return "ZeroCg";
    case ErrorCode::CensoringExceeded: return "CensoringExceeded";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedSpec:
    case ErrorCode::NotAProbability:
    case ErrorCode::NotPrimitive:
    case ErrorCode::NotCritical:
    case ErrorCode::DegenerateH:
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularResolvent:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace gwlimits
