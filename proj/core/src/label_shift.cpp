#include "hiconform/label_shift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hiconform/error.hpp"

namespace hiconform {

namespace {

void check_props(std::span<const double> props, std::size_t classes) {
  if (props.size() != classes) {
    throw Error(ErrorCode::InvalidProps, "expected " + std::to_string(classes) + " proportions, got " +
                                             std::to_string(props.size()));
  }
  double sum = 0.0;
  for (double p : props) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidProps, "negative or non-finite proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidProps, "proportions sum to " + std::to_string(sum));
  }
}

const GraphBinding& require_binding(const GraphBinding* binding) {
  if (binding == nullptr) {
    throw Error(ErrorCode::InvalidConfig, "the graph method needs a label graph");
  }
  return *binding;
}

// Resamples calibration to `props` and calibrates; appends to `out`.
void calibrate_fold(const GraphBinding* binding, const LabeledBatch& calib, std::span<const double> props,
                    double alpha, Method method, std::size_t size, Rng& rng,
                    const CorrectionOptions& options, CorrectedCalibration& out, FoldAudit& audit) {
  audit.props_used.assign(props.begin(), props.end());
  const LabeledBatch resampled = resample_calibration(calib, props, size, rng, &audit.resample_counts);
  if (method == Method::Split) {
    out.split.push_back(calibrate_split(resampled, alpha));
    audit.threshold = out.split.back().q_hat;
  } else {
    out.graph.push_back(calibrate_lambda(require_binding(binding), resampled, alpha, options.loss_bound));
    audit.threshold = out.graph.back().lambda_hat;
  }
}

}  // namespace

std::string_view to_string(Method m) noexcept { return m == Method::Split ? "split" : "graph"; }

std::string_view to_string(ProportionEstimator e) noexcept {
  return e == ProportionEstimator::Soft ? "soft" : "hard";
}

Method parse_method(std::string_view s) {
  if (s == "split") return Method::Split;
  if (s == "graph") return Method::Graph;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(s) + "'");
}

ProportionEstimator parse_estimator(std::string_view s) {
  if (s == "soft") return ProportionEstimator::Soft;
  if (s == "hard") return ProportionEstimator::Hard;
  throw Error(ErrorCode::InvalidConfig, "unknown estimator '" + std::string(s) + "'");
}

std::vector<double> estimate_class_proportions(const ProbMatrix& p, ProportionEstimator estimator) {
  std::vector<std::size_t> rows(p.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return estimate_class_proportions(p, rows, estimator);
}

std::vector<double> estimate_class_proportions(const ProbMatrix& p, std::span<const std::size_t> rows,
                                               ProportionEstimator estimator) {
  if (rows.empty()) throw Error(ErrorCode::EmptyFold, "cannot estimate proportions of an empty fold");
  std::vector<double> props(p.classes(), 0.0);
  for (std::size_t i : rows) {
    const auto r = p.row(i);
    if (estimator == ProportionEstimator::Soft) {
      for (std::size_t k = 0; k < r.size(); ++k) props[k] += r[k];
    } else {
      props[point_prediction(r)] += 1.0;
    }
  }
  const double total = std::accumulate(props.begin(), props.end(), 0.0);
  for (double& v : props) v /= total;
  return props;
}

std::vector<std::size_t> draw_class_counts(std::span<const double> props, std::size_t size, Rng& rng) {
  // Conditional binomials: count_k ~ Bin(remaining, p_k / remaining mass).
  std::vector<std::size_t> counts(props.size(), 0);
  std::size_t remaining = size;
  double mass = std::accumulate(props.begin(), props.end(), 0.0);
  for (std::size_t k = 0; k < props.size() && remaining > 0; ++k) {
    if (props[k] <= 0.0) continue;
    const double p = std::clamp(props[k] / mass, 0.0, 1.0);
    std::size_t c = remaining;
    if (p < 1.0) {
      std::binomial_distribution<std::size_t> bin(remaining, p);
      c = bin(rng);
    }
    counts[k] = c;
    remaining -= c;
    mass -= props[k];
    if (mass <= 0.0) break;
  }
  if (remaining > 0) {
    // Rounding left mass behind; give it to the last class with support.
    for (std::size_t k = props.size(); k-- > 0;) {
      if (props[k] > 0.0) {
        counts[k] += remaining;
        break;
      }
    }
  }
  return counts;
}

LabeledBatch resample_calibration(const LabeledBatch& batch, std::span<const double> props,
                                  std::size_t size, Rng& rng, std::vector<std::size_t>* counts_out) {
  const std::size_t k = batch.probs.classes();
  check_props(props, k);

  std::vector<std::vector<std::size_t>> strata(k);
  for (std::size_t i = 0; i < batch.size(); ++i) strata[batch.labels[i]].push_back(i);
  for (std::size_t c = 0; c < k; ++c) {
    if (props[c] > 0.0 && strata[c].empty()) {
      throw Error(ErrorCode::MissingStratum,
                  "class '" + batch.probs.class_names()[c] + "' has no calibration rows");
    }
  }

  const auto counts = draw_class_counts(props, size, rng);
  std::vector<std::size_t> rows;
  rows.reserve(size);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    std::uniform_int_distribution<std::size_t> pick(0, strata[c].size() - 1);
    for (std::size_t j = 0; j < counts[c]; ++j) rows.push_back(strata[c][pick(rng)]);
  }
  if (counts_out) *counts_out = counts;
  return batch.select_rows(rows);
}

LabeledBatch resample_calibration(const LabeledBatch& batch, std::span<const double> props,
                                  std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return resample_calibration(batch, props, size, rng);
}

CorrectedCalibration calibrate_two_fold(const GraphBinding* binding, const LabeledBatch& calib,
                                        const ProbMatrix& test, double alpha, Method method,
                                        std::uint64_t seed, const CorrectionOptions& options) {
  if (test.rows() < 2) throw Error(ErrorCode::EmptyFold, "two-fold correction needs at least two test rows");
  if (test.class_names() != calib.probs.class_names()) {
    throw Error(ErrorCode::LengthMismatch, "calibration and test class lists differ");
  }
  if (method == Method::Graph) require_binding(binding);

  CorrectedCalibration out;
  auto& plan = out.plan;
  plan.seed = seed;
  plan.estimator = options.estimator;
  plan.resample_size = options.resample_size ? options.resample_size : calib.size();

  std::vector<std::size_t> order(test.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_rng(seed, 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t half = test.rows() / 2;

  std::vector<std::size_t> fold_rows[2];
  plan.fold_assignment.assign(test.rows(), 2);
  for (std::size_t j = 0; j < half; ++j) plan.fold_assignment[order[j]] = 1;
  for (std::size_t i = 0; i < test.rows(); ++i) fold_rows[plan.fold_assignment[i] - 1].push_back(i);

  for (int f = 0; f < 2; ++f) {
    plan.estimated_props.push_back(estimate_class_proportions(test, fold_rows[f], options.estimator));
  }
  plan.folds.resize(2);
  for (int f = 0; f < 2; ++f) {
    Rng rng = make_rng(seed, 1 + static_cast<std::uint64_t>(f));
    plan.folds[f].size = fold_rows[f].size();
    calibrate_fold(binding, calib, plan.estimated_props[1 - f], alpha, method, plan.resample_size, rng,
                   options, out, plan.folds[f]);
  }
  return out;
}

CorrectedCalibration calibrate_oracle(const GraphBinding* binding, const LabeledBatch& calib,
                                      const LabeledBatch& test, double alpha, Method method,
                                      std::uint64_t seed, const CorrectionOptions& options) {
  if (test.size() == 0) throw Error(ErrorCode::EmptyFold, "oracle correction needs test rows");
  if (test.probs.class_names() != calib.probs.class_names()) {
    throw Error(ErrorCode::LengthMismatch, "calibration and test class lists differ");
  }
  if (method == Method::Graph) require_binding(binding);

  CorrectedCalibration out;
  auto& plan = out.plan;
  plan.seed = seed;
  plan.estimator = options.estimator;
  plan.resample_size = options.resample_size ? options.resample_size : calib.size();
  plan.fold_assignment.assign(test.size(), 1);

  std::vector<double> freq(test.probs.classes(), 0.0);
  for (std::size_t y : test.labels) freq[y] += 1.0;
  for (double& v : freq) v /= static_cast<double>(test.size());
  plan.estimated_props.push_back(freq);

  plan.folds.resize(1);
  plan.folds[0].size = test.size();
  Rng rng = make_rng(seed, 1);
  calibrate_fold(binding, calib, freq, alpha, method, plan.resample_size, rng, options, out, plan.folds[0]);
  return out;
}

std::vector<PredictionSet> predict_corrected(const CorrectedCalibration& c, const GraphBinding* binding,
                                             const ProbMatrix& test, Method method) {
  if (c.plan.fold_assignment.size() != test.rows()) {
    throw Error(ErrorCode::LengthMismatch, "fold assignment does not match the test rows");
  }
  std::vector<PredictionSet> sets;
  sets.reserve(test.rows());
  for (std::size_t i = 0; i < test.rows(); ++i) {
    const auto f = static_cast<std::size_t>(c.plan.fold_assignment[i] - 1);
    if (method == Method::Split) {
      sets.push_back(binding ? split_predict_set(c.split.at(f), *binding, test, i)
                             : split_predict_set(c.split.at(f), test, i));
    } else {
      sets.push_back(graph_set(require_binding(binding), test, i, c.graph.at(f).lambda_hat));
    }
  }
  return sets;
}

CorrectionResult two_fold_correct(const GraphBinding* binding, const LabeledBatch& calib,
                                  const ProbMatrix& test, double alpha, Method method,
                                  std::uint64_t seed, const CorrectionOptions& options) {
  auto c = calibrate_two_fold(binding, calib, test, alpha, method, seed, options);
  auto sets = predict_corrected(c, binding, test, method);
  return {std::move(sets), std::move(c.plan)};
}

CorrectionResult oracle_correct(const GraphBinding* binding, const LabeledBatch& calib,
                                const LabeledBatch& test, double alpha, Method method,
                                std::uint64_t seed, const CorrectionOptions& options) {
  auto c = calibrate_oracle(binding, calib, test, alpha, method, seed, options);
  auto sets = predict_corrected(c, binding, test.probs, method);
  return {std::move(sets), std::move(c.plan)};
}

}  // namespace hiconform
