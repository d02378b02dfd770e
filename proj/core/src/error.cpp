#include "hiconform/error.hpp"

namespace hiconform {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::NotLeaves: return "NotLeaves";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InvalidProbabilities: return "InvalidProbabilities";
    case ErrorCode::LabelNotInClasses: return "LabelNotInClasses";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::GraphClassMismatch: return "GraphClassMismatch";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::CalibrationTooSmall: return "CalibrationTooSmall";
    case ErrorCode::BoundUnachievable: return "BoundUnachievable";
    case ErrorCode::EmptyFold: return "EmptyFold";
    case ErrorCode::MissingStratum: return "MissingStratum";
    case ErrorCode::InvalidProps: return "InvalidProps";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateL: return "DegenerateL";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidAlpha:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidProps:
    case ErrorCode::KTooLarge:
      return ErrorKind::Config;
    case ErrorCode::CalibrationTooSmall:
    case ErrorCode::BoundUnachievable:
    case ErrorCode::DegenerateL:
      return ErrorKind::Calibration;
    default:
      return ErrorKind::Data;
  }
}

}  // namespace hiconform
