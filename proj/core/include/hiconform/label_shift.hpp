#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hiconform/graph_crc.hpp"
#include "hiconform/random.hpp"
#include "hiconform/scores.hpp"
#include "hiconform/split_conformal.hpp"

namespace hiconform {

enum class Method { Split, Graph };
enum class ProportionEstimator { Soft, Hard };

std::string_view to_string(Method m) noexcept;
std::string_view to_string(ProportionEstimator e) noexcept;
/// Throws Error{InvalidConfig}.
Method parse_method(std::string_view s);
ProportionEstimator parse_estimator(std::string_view s);

/// Class proportions of a set of rows: the mean probability vector (Soft) or
/// the frequency of argmax predictions (Hard). Throws Error{EmptyFold}.
std::vector<double> estimate_class_proportions(const ProbMatrix& p,
                                               ProportionEstimator estimator = ProportionEstimator::Soft);
std::vector<double> estimate_class_proportions(const ProbMatrix& p, std::span<const std::size_t> rows,
                                               ProportionEstimator estimator = ProportionEstimator::Soft);

/// Multinomial(size, props) class counts.
std::vector<std::size_t> draw_class_counts(std::span<const double> props, std::size_t size, Rng& rng);

/// Stratified resample: class counts ~ Multinomial(size, props), rows drawn
/// uniformly with replacement within each class. Throws Error{InvalidProps}
/// or Error{MissingStratum}.
LabeledBatch resample_calibration(const LabeledBatch& batch, std::span<const double> props,
                                  std::size_t size, Rng& rng,
                                  std::vector<std::size_t>* counts = nullptr);
LabeledBatch resample_calibration(const LabeledBatch& batch, std::span<const double> props,
                                  std::size_t size, std::uint64_t seed);

struct FoldAudit {
  std::size_t size = 0;
  /// Proportions the calibration set was resampled to for this fold.
  std::vector<double> props_used;
  std::vector<std::size_t> resample_counts;
  /// q_hat (split) or lambda_hat (graph) used for this fold.
  double threshold = 0.0;
};

struct ShiftCorrectionPlan {
  /// 1 or 2 per test row.
  std::vector<int> fold_assignment;
  /// Proportions estimated on each fold's own rows.
  std::vector<std::vector<double>> estimated_props;
  std::vector<FoldAudit> folds;
  std::size_t resample_size = 0;
  std::uint64_t seed = 0;
  ProportionEstimator estimator = ProportionEstimator::Soft;
};

struct CorrectionOptions {
  ProportionEstimator estimator = ProportionEstimator::Soft;
  /// 0 means the calibration size.
  std::size_t resample_size = 0;
  double loss_bound = 1.0;
};

/// Per-fold calibrations; only the member matching the method is filled.
struct CorrectedCalibration {
  ShiftCorrectionPlan plan;
  std::vector<SplitCalibration> split;
  std::vector<LambdaCalibration> graph;
};

struct CorrectionResult {
  std::vector<PredictionSet> sets;
  ShiftCorrectionPlan plan;
};

/// Two-fold resampling correction: each half of the test rows is predicted
/// with a calibration set resampled to the class proportions estimated on
/// the other half. `binding` may be null for Method::Split.
CorrectedCalibration calibrate_two_fold(const GraphBinding* binding, const LabeledBatch& calib,
                                        const ProbMatrix& test, double alpha, Method method,
                                        std::uint64_t seed, const CorrectionOptions& options = {});

/// Evaluation-only benchmark: calibration resampled to the true test label
/// frequencies; every test row is in fold 1.
CorrectedCalibration calibrate_oracle(const GraphBinding* binding, const LabeledBatch& calib,
                                      const LabeledBatch& test, double alpha, Method method,
                                      std::uint64_t seed, const CorrectionOptions& options = {});

CorrectionResult two_fold_correct(const GraphBinding* binding, const LabeledBatch& calib,
                                  const ProbMatrix& test, double alpha, Method method,
                                  std::uint64_t seed, const CorrectionOptions& options = {});

CorrectionResult oracle_correct(const GraphBinding* binding, const LabeledBatch& calib,
                                const LabeledBatch& test, double alpha, Method method,
                                std::uint64_t seed, const CorrectionOptions& options = {});

/// Applies a corrected calibration to the test rows it was built for.
std::vector<PredictionSet> predict_corrected(const CorrectedCalibration& c, const GraphBinding* binding,
                                             const ProbMatrix& test, Method method);

}  // namespace hiconform
