#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hiconform/prediction_set.hpp"
#include "hiconform/scores.hpp"

namespace hiconform {

/// Calibrated split-conformal threshold.
struct SplitCalibration {
  double q_hat = 1.0;
  std::size_t n = 0;
  double alpha = 0.1;
  /// 1-based rank of q_hat among the sorted scores.
  std::size_t rank = 0;
  std::vector<double> sorted_scores;
};

/// k = ceil((1 - alpha)(n + 1)). Products within 1e-9 of an integer are
/// snapped to it before rounding. Throws Error{InvalidAlpha}.
std::size_t split_quantile_rank(std::size_t n, double alpha);

/// Throws Error{InvalidAlpha} or Error{CalibrationTooSmall}.
SplitCalibration calibrate_split(std::vector<double> scores, double alpha);
SplitCalibration calibrate_split(const LabeledBatch& batch, double alpha);

/// Class indices with probability >= 1 - q_hat, ascending.
std::vector<std::size_t> split_set_classes(const SplitCalibration& c, std::span<const double> row);

/// Throws Error{IndexOutOfRange}.
PredictionSet split_predict_set(const SplitCalibration& c, const ProbMatrix& p, std::size_t i);

/// As above, with graph-derived summary and homogeneity filled in.
PredictionSet split_predict_set(const SplitCalibration& c, const GraphBinding& binding,
                                const ProbMatrix& p, std::size_t i);

}  // namespace hiconform
