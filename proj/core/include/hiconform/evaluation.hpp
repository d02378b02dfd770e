#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiconform/classifier.hpp"
#include "hiconform/label_shift.hpp"
#include "hiconform/prediction_set.hpp"
#include "hiconform/synthgen.hpp"

namespace hiconform {

struct EvalReport {
  std::size_t n = 0;
  double coverage = 0.0;
  double mean_size = 0.0;
  double mean_homogeneity = 0.0;
  std::map<std::size_t, std::size_t> size_histogram;
  std::map<std::string, double> per_class_coverage;
};

/// Coverage, set size and homogeneity of a batch of sets.
/// Throws Error{LengthMismatch}.
EvalReport evaluate(std::span<const PredictionSet> sets, std::span<const std::string> truth,
                    const LabelGraph& g);

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

/// Beta(n + 1 - l, l) with l = floor((n + 1) alpha): the law of the coverage
/// of a split-conformal set conditional on its calibration data.
/// Throws Error{InvalidAlpha} or Error{DegenerateL}.
BetaParams beta_reference(std::size_t n, double alpha);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);
inline double beta_cdf(double x, const BetaParams& p) {
  return regularized_incomplete_beta(p.a, p.b, x);
}

/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

enum class Correction { None, TwoFold, Oracle };
std::string_view to_string(Correction c) noexcept;
/// Throws Error{InvalidConfig}.
Correction parse_correction(std::string_view s);

/// A repeated-split experiment on synthetic data.
///
/// A classifier is fit once on a training draw; every trial then draws fresh
/// calibration and test sets, calibrates (with the chosen correction) and
/// records test metrics.
struct Scenario {
  SynthConfig data;
  /// Empty means data.class_props.
  std::vector<double> train_props;
  std::vector<double> calib_props;
  std::vector<double> test_props;
  std::size_t n_train = 500;
  std::size_t n_calib = 1000;
  std::size_t n_test = 3663;
  Method method = Method::Split;
  Correction correction = Correction::None;
  double alpha = 0.1;
  /// Clamped to the number of available features.
  std::size_t k_features = 50;
  FitOptions fit;
  ProportionEstimator estimator = ProportionEstimator::Soft;
};

struct CoverageStudy {
  std::size_t n = 0;
  double alpha = 0.1;
  Method method = Method::Split;
  Correction correction = Correction::None;
  std::vector<double> per_trial_coverage;
  std::vector<double> per_trial_size;
  std::vector<double> per_trial_homogeneity;
  /// q_hat or lambda_hat per trial (fold 1 when corrected).
  std::vector<double> per_trial_threshold;
  /// Split method only.
  std::optional<BetaParams> beta_params;
  std::optional<double> ks_statistic_vs_beta;
  double mean_coverage = 0.0;
  double coverage_se = 0.0;
  double mean_size = 0.0;
  double mean_homogeneity = 0.0;
  double model_test_accuracy = 0.0;
};

/// Runs R trials. Trial data depends only on (seed, trial index), so studies
/// that differ only in method or correction see identical draws.
CoverageStudy run_study(const Scenario& scenario, std::size_t trials, std::uint64_t seed,
                        std::size_t threads = 1);

}  // namespace hiconform
