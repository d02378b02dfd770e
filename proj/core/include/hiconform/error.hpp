#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hiconform {

enum class ErrorCode {
  EmptyInput,
  CycleDetected,
  UnknownNode,
  NotLeaves,
  EmptySet,
  InvalidProbabilities,
  LabelNotInClasses,
  IndexOutOfRange,
  GraphClassMismatch,
  InvalidAlpha,
  CalibrationTooSmall,
  BoundUnachievable,
  EmptyFold,
  MissingStratum,
  InvalidProps,
  KTooLarge,
  SingleClass,
  NonFiniteInput,
  MissingFeature,
  InvalidConfig,
  LengthMismatch,
  DegenerateL,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Which side of the pipeline a failure belongs to; the CLI maps this to
/// its exit codes.
enum class ErrorKind { Config, Data, Calibration };

ErrorKind kind_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace hiconform
