#pragma once

#include <cmath>
#include <string>

#include "hiconform/error.hpp"

namespace hiconform::detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
  }
}

// (1 - 0.1) * 10 lands a hair above 9 in binary; treat such products as exact.
inline double snap_to_integer(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

}  // namespace hiconform::detail
