#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiconform/scores.hpp"

namespace hiconform {

/// n x p numeric design, row-major.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> feature_names;
  std::vector<double> values;

  std::size_t rows() const noexcept { return feature_names.empty() ? 0 : values.size() / feature_names.size(); }
  std::size_t cols() const noexcept { return feature_names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

  /// Throws Error{NonFiniteInput} or Error{LengthMismatch}.
  void validate() const;
  /// Throws Error{MissingFeature}.
  std::size_t column(std::string_view name) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
};

/// The k columns with the largest sample variance, ties by name.
/// Throws Error{KTooLarge}.
std::vector<std::string> select_top_variance(const FeatureMatrix& x, std::size_t k);

struct FitOptions {
  double l2 = 1e-2;
  std::size_t max_iter = 2000;
  /// Stop once the gradient max-norm falls below this.
  double tol = 1e-6;
};

struct TrainingLog {
  std::size_t iterations = 0;
  double final_objective = 0.0;
  double final_gradient_norm = 0.0;
  bool converged = false;
  /// Objective after each accepted step, starting from the initial point.
  std::vector<double> objective_trace;
};

/// L2-penalized multinomial logit over standardized features.
struct LogitModel {
  std::vector<std::string> classes;
  std::vector<std::string> selected_features;
  std::vector<double> feature_means;
  std::vector<double> feature_scales;
  /// classes x (features + 1), row-major; column 0 is the intercept.
  std::vector<double> weights;
  double l2 = 0.0;
  TrainingLog training_log;

  /// Weight norm excluding intercepts.
  double weight_norm() const;
};

/// Mean negative log-likelihood plus (l2/2)||W||^2 (intercepts unpenalized)
/// on a design that is already standardized. `design` is n x p row-major,
/// `weights` is K x (p+1) with intercepts in column 0. Fills `gradient` when
/// non-null.
double logit_objective(std::span<const double> design, std::size_t p,
                       std::span<const std::size_t> labels, std::size_t num_classes, double l2,
                       std::span<const double> weights, std::vector<double>* gradient);

/// Full-batch gradient descent with backtracking line search.
///
/// `features` restricts the design (all columns when empty); constant columns
/// are dropped. `classes` fixes the output column order (sorted distinct
/// labels when empty). Throws Error{SingleClass}, Error{NonFiniteInput},
/// Error{LabelNotInClasses}, Error{LengthMismatch}.
LogitModel fit_logit(const FeatureMatrix& x, std::span<const std::string> labels,
                     const FitOptions& options = {}, std::span<const std::string> features = {},
                     std::span<const std::string> classes = {});

/// Softmax probabilities in the model's class order. Throws Error{MissingFeature}.
ProbMatrix predict_probs(const LogitModel& m, const FeatureMatrix& x);

}  // namespace hiconform
