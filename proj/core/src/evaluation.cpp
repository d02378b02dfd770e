#include "hiconform/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hiconform/error.hpp"
#include "hiconform/graph_crc.hpp"
#include "hiconform/split_conformal.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace hiconform {

EvalReport evaluate(std::span<const PredictionSet> sets, std::span<const std::string> truth,
                    const LabelGraph& g) {
  if (sets.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(sets.size()) + " sets for " +
                                               std::to_string(truth.size()) + " labels");
  }
  EvalReport r;
  r.n = sets.size();
  if (r.n == 0) return r;

  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;
  double covered = 0.0;
  double size_total = 0.0;
  double homogeneity_total = 0.0;
  NodeSet ids;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& s = sets[i];
    const bool hit = s.contains(truth[i]);
    covered += hit ? 1.0 : 0.0;
    auto& pc = per_class[truth[i]];
    pc.first += hit ? 1 : 0;
    pc.second += 1;
    size_total += static_cast<double>(s.leaves.size());
    ++r.size_histogram[s.leaves.size()];
    ids.clear();
    for (const auto& leaf : s.leaves) ids.push_back(g.id(leaf));
    homogeneity_total += set_homogeneity(g, ids);
  }
  const double n = static_cast<double>(r.n);
  r.coverage = covered / n;
  r.mean_size = size_total / n;
  r.mean_homogeneity = homogeneity_total / n;
  for (const auto& [cls, counts] : per_class) {
    r.per_class_coverage[cls] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return r;
}

BetaParams beta_reference(std::size_t n, double alpha) {
  detail::check_alpha(alpha);
  if (n == 0) throw Error(ErrorCode::DegenerateL, "calibration size must be positive");
  const auto l = static_cast<std::size_t>(
      std::floor(detail::snap_to_integer(static_cast<double>(n + 1) * alpha)));
  if (l == 0) {
    throw Error(ErrorCode::DegenerateL, "l = floor((n+1) alpha) is 0 for n = " + std::to_string(n));
  }
  return {static_cast<double>(n + 1 - l), static_cast<double>(l)};
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::InvalidConfig, "beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

std::string_view to_string(Correction c) noexcept {
  switch (c) {
    case Correction::None: return "none";
    case Correction::TwoFold: return "two_fold";
    case Correction::Oracle: return "oracle";
  }
  return "none";
}

Correction parse_correction(std::string_view s) {
  if (s == "none") return Correction::None;
  if (s == "two_fold") return Correction::TwoFold;
  if (s == "oracle") return Correction::Oracle;
  throw Error(ErrorCode::InvalidConfig, "unknown correction '" + std::string(s) + "'");
}

namespace {

struct TrialOutcome {
  double coverage = 0.0;
  double size = 0.0;
  double homogeneity = 0.0;
  double threshold = 0.0;
  double accuracy = 0.0;
};

std::span<const double> props_or_default(const std::vector<double>& props, const Scenario& s) {
  return props.empty() ? std::span<const double>(s.data.class_props) : std::span<const double>(props);
}

TrialOutcome run_trial(const Scenario& s, const SynthGenerator& gen, const LogitModel& model,
                       const GraphBinding& binding, std::uint64_t seed, std::size_t trial) {
  Rng rng = make_rng(seed, 1000 + trial);
  auto calib_draw = gen.sample(s.n_calib, props_or_default(s.calib_props, s), rng);
  auto test_draw = gen.sample(s.n_test, props_or_default(s.test_props, s), rng);

  const auto calib = LabeledBatch::from_indices(predict_probs(model, calib_draw.features),
                                                std::move(calib_draw.label_index));
  const auto test = LabeledBatch::from_indices(predict_probs(model, test_draw.features),
                                               std::move(test_draw.label_index));

  CorrectedCalibration cc;
  const std::uint64_t correction_seed = derive_seed(seed, 5000 + trial);
  CorrectionOptions options;
  options.estimator = s.estimator;
  switch (s.correction) {
    case Correction::None:
      cc.plan.fold_assignment.assign(test.size(), 1);
      if (s.method == Method::Split) {
        cc.split.push_back(calibrate_split(calib, s.alpha));
      } else {
        cc.graph.push_back(calibrate_lambda(binding, calib, s.alpha));
      }
      break;
    case Correction::TwoFold:
      cc = calibrate_two_fold(&binding, calib, test.probs, s.alpha, s.method, correction_seed, options);
      break;
    case Correction::Oracle:
      cc = calibrate_oracle(&binding, calib, test, s.alpha, s.method, correction_seed, options);
      break;
  }

  TrialOutcome out;
  out.threshold = s.method == Method::Split ? cc.split.front().q_hat : cc.graph.front().lambda_hat;
  std::size_t covered = 0;
  std::size_t correct = 0;
  double size_total = 0.0;
  double homogeneity_total = 0.0;
  NodeSet leaves;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = test.probs.row(i);
    const auto fold = static_cast<std::size_t>(cc.plan.fold_assignment[i] - 1);
    const NodeId truth = binding.class_node(test.labels[i]);
    if (point_prediction(row) == test.labels[i]) ++correct;
    if (s.method == Method::Split) {
      leaves.clear();
      for (std::size_t k : split_set_classes(cc.split[fold], row)) leaves.push_back(binding.class_node(k));
      std::sort(leaves.begin(), leaves.end());
    } else {
      leaves = graph_set_nodes(binding, row, cc.graph[fold].lambda_hat).leaves;
    }
    if (std::binary_search(leaves.begin(), leaves.end(), truth)) ++covered;
    size_total += static_cast<double>(leaves.size());
    homogeneity_total += set_homogeneity(binding.graph(), leaves);
  }
  const double m = static_cast<double>(test.size());
  out.coverage = static_cast<double>(covered) / m;
  out.size = size_total / m;
  out.homogeneity = homogeneity_total / m;
  out.accuracy = static_cast<double>(correct) / m;
  return out;
}

}  // namespace

CoverageStudy run_study(const Scenario& s, std::size_t trials, std::uint64_t seed, std::size_t threads) {
  detail::check_alpha(s.alpha);
  if (trials == 0) throw Error(ErrorCode::InvalidConfig, "a study needs at least one trial");
  if (s.n_test == 0 || s.n_calib == 0 || s.n_train == 0) {
    throw Error(ErrorCode::InvalidConfig, "train, calibration and test sizes must be positive");
  }
  const SynthGenerator gen(s.data);

  Rng train_rng = make_rng(seed, 0);
  const auto train = gen.sample(s.n_train, props_or_default(s.train_props, s), train_rng);
  const std::size_t k = std::min(s.k_features, train.features.cols());
  const auto features = select_top_variance(train.features, k);
  const auto model = fit_logit(train.features, train.labels, s.fit, features, gen.class_names());
  const GraphBinding binding(gen.graph(), model.classes);

  std::vector<TrialOutcome> outcomes(trials);
  detail::parallel_for(trials, threads, [&](std::size_t t) {
    outcomes[t] = run_trial(s, gen, model, binding, seed, t);
  });

  CoverageStudy study;
  study.n = s.n_calib;
  study.alpha = s.alpha;
  study.method = s.method;
  study.correction = s.correction;
  for (const auto& o : outcomes) {
    study.per_trial_coverage.push_back(o.coverage);
    study.per_trial_size.push_back(o.size);
    study.per_trial_homogeneity.push_back(o.homogeneity);
    study.per_trial_threshold.push_back(o.threshold);
    study.model_test_accuracy += o.accuracy;
  }
  const double r = static_cast<double>(trials);
  auto mean = [r](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / r; };
  study.mean_coverage = mean(study.per_trial_coverage);
  study.mean_size = mean(study.per_trial_size);
  study.mean_homogeneity = mean(study.per_trial_homogeneity);
  study.model_test_accuracy /= r;
  if (trials > 1) {
    double ss = 0.0;
    for (double c : study.per_trial_coverage) ss += (c - study.mean_coverage) * (c - study.mean_coverage);
    study.coverage_se = std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
  }

  if (s.method == Method::Split) {
    // The resample keeps the calibration size unless overridden.
    const auto params = beta_reference(s.n_calib, s.alpha);
    study.beta_params = params;
    study.ks_statistic_vs_beta =
        ks_statistic(study.per_trial_coverage, [params](double x) { return beta_cdf(x, params); });
  }
  return study;
}

}  // namespace hiconform
