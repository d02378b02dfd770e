#include "hiconform/split_conformal.hpp"

#include <algorithm>
#include <cmath>

#include "hiconform/error.hpp"
#include "numeric.hpp"

namespace hiconform {

std::size_t split_quantile_rank(std::size_t n, double alpha) {
  detail::check_alpha(alpha);
  const double target = (1.0 - alpha) * static_cast<double>(n + 1);
  return static_cast<std::size_t>(std::ceil(detail::snap_to_integer(target)));
}

SplitCalibration calibrate_split(std::vector<double> scores, double alpha) {
  const std::size_t n = scores.size();
  const std::size_t k = split_quantile_rank(n, alpha);
  if (k > n || k == 0) {
    throw Error(ErrorCode::CalibrationTooSmall,
                "quantile rank " + std::to_string(k) + " exceeds calibration size " +
                    std::to_string(n));
  }
  std::sort(scores.begin(), scores.end());
  SplitCalibration c;
  c.q_hat = scores[k - 1];
  c.n = n;
  c.alpha = alpha;
  c.rank = k;
  c.sorted_scores = std::move(scores);
  return c;
}

SplitCalibration calibrate_split(const LabeledBatch& batch, double alpha) {
  return calibrate_split(conformal_scores(batch), alpha);
}

std::vector<std::size_t> split_set_classes(const SplitCalibration& c, std::span<const double> row) {
  const double threshold = 1.0 - c.q_hat;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] >= threshold) out.push_back(k);
  }
  return out;
}

PredictionSet split_predict_set(const SplitCalibration& c, const ProbMatrix& p, std::size_t i) {
  std::vector<std::string> names;
  for (std::size_t k : split_set_classes(c, p.row(i))) names.push_back(p.class_names()[k]);
  return make_flat_set(std::move(names));
}

PredictionSet split_predict_set(const SplitCalibration& c, const GraphBinding& binding,
                                const ProbMatrix& p, std::size_t i) {
  NodeSet leaves;
  for (std::size_t k : split_set_classes(c, p.row(i))) leaves.push_back(binding.class_node(k));
  std::sort(leaves.begin(), leaves.end());
  return make_prediction_set(binding.graph(), std::move(leaves));
}

}  // namespace hiconform
