#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gwlimits {

enum class ErrorCode {
  MalformedSpec,
  NotAProbability,
  NotPrimitive,
  NotCritical,
  DegenerateH,
  NoConvergence,
  SingularResolvent,
  SingularSystem,
  CapExceeded,
  EmptySample,
  TypeNeverObserved,
  UnknownRule,
  ZeroCg,
  CensoringExceeded,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Validation failures are the spec-level errors a user can fix by editing
/// the process file (exit status 2 in the CLI).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace gwlimits
