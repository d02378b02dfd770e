#include "hiconform/classifier.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hiconform/error.hpp"

namespace hiconform {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-wise softmax in place; returns the sum of log-normalizers.
void softmax_rows(RowMatrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    const double m = r.maxCoeff();
    r = (r.array() - m).exp();
    r /= r.sum();
  }
}

std::vector<double> column_variances(const FeatureMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  std::vector<double> var(p, 0.0);
  if (n < 2) return var;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x.at(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x.at(i, j) - mean;
      ss += d * d;
    }
    var[j] = ss / static_cast<double>(n - 1);
  }
  return var;
}

}  // namespace

void FeatureMatrix::validate() const {
  if (!ids.empty() && ids.size() != rows()) {
    throw Error(ErrorCode::LengthMismatch, "row id count does not match the feature rows");
  }
  if (!feature_names.empty() && values.size() % feature_names.size() != 0) {
    throw Error(ErrorCode::LengthMismatch, "value count is not a multiple of the feature count");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "feature matrix has a non-finite entry");
  }
}

std::size_t FeatureMatrix::column(std::string_view name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) {
    throw Error(ErrorCode::MissingFeature, "feature '" + std::string(name) + "' not present");
  }
  return static_cast<std::size_t>(it - feature_names.begin());
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.values.reserve(rows.size() * cols());
  for (std::size_t i : rows) {
    if (!ids.empty()) out.ids.push_back(ids.at(i));
    out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(i * cols()),
                      values.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols()));
  }
  return out;
}

std::vector<std::string> select_top_variance(const FeatureMatrix& x, std::size_t k) {
  if (k == 0 || k > x.cols()) {
    throw Error(ErrorCode::KTooLarge,
                "requested " + std::to_string(k) + " of " + std::to_string(x.cols()) + " features");
  }
  const auto var = column_variances(x);
  std::vector<std::size_t> order(x.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (var[a] != var[b]) return var[a] > var[b];
    return x.feature_names[a] < x.feature_names[b];
  });
  std::vector<std::string> out;
  for (std::size_t j = 0; j < k; ++j) out.push_back(x.feature_names[order[j]]);
  return out;
}

double LogitModel::weight_norm() const {
  const std::size_t stride = selected_features.size() + 1;
  double ss = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i % stride != 0) ss += weights[i] * weights[i];
  }
  return std::sqrt(ss);
}

double logit_objective(std::span<const double> design, std::size_t p,
                       std::span<const std::size_t> labels, std::size_t num_classes, double l2,
                       std::span<const double> weights, std::vector<double>* gradient) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto k = static_cast<Eigen::Index>(num_classes);
  const auto cols = static_cast<Eigen::Index>(p);
  Eigen::Map<const RowMatrix> x(design.data(), n, cols);
  Eigen::Map<const RowMatrix> w(weights.data(), k, cols + 1);

  RowMatrix scores = x * w.rightCols(cols).transpose();
  scores.rowwise() += w.col(0).transpose();

  double nll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto r = scores.row(i);
    const double m = r.maxCoeff();
    const double lse = m + std::log((r.array() - m).exp().sum());
    nll += lse - r(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double penalty = 0.5 * l2 * w.rightCols(cols).squaredNorm();
  const double objective = nll * inv_n + penalty;

  if (gradient) {
    softmax_rows(scores);
    for (Eigen::Index i = 0; i < n; ++i) scores(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) -= 1.0;
    gradient->assign(static_cast<std::size_t>(k * (cols + 1)), 0.0);
    Eigen::Map<RowMatrix> g(gradient->data(), k, cols + 1);
    g.col(0) = scores.colwise().sum().transpose() * inv_n;
    g.rightCols(cols) = scores.transpose() * x * inv_n + l2 * w.rightCols(cols);
  }
  return objective;
}

LogitModel fit_logit(const FeatureMatrix& x, std::span<const std::string> labels,
                     const FitOptions& options, std::span<const std::string> features,
                     std::span<const std::string> classes) {
  x.validate();
  if (labels.size() != x.rows()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(labels.size()) + " labels for " +
                                               std::to_string(x.rows()) + " rows");
  }
  if (!(options.l2 >= 0.0)) throw Error(ErrorCode::InvalidConfig, "l2 must be nonnegative");

  LogitModel m;
  m.l2 = options.l2;
  if (classes.empty()) {
    std::set<std::string> distinct(labels.begin(), labels.end());
    m.classes.assign(distinct.begin(), distinct.end());
  } else {
    m.classes.assign(classes.begin(), classes.end());
  }
  std::vector<std::size_t> y;
  y.reserve(labels.size());
  std::set<std::size_t> present;
  for (const auto& l : labels) {
    auto it = std::find(m.classes.begin(), m.classes.end(), l);
    if (it == m.classes.end()) throw Error(ErrorCode::LabelNotInClasses, "'" + l + "' is not a class");
    y.push_back(static_cast<std::size_t>(it - m.classes.begin()));
    present.insert(y.back());
  }
  if (present.size() < 2) throw Error(ErrorCode::SingleClass, "training labels contain fewer than two classes");

  std::vector<std::size_t> cols;
  if (features.empty()) {
    cols.resize(x.cols());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
  } else {
    for (const auto& f : features) cols.push_back(x.column(f));
  }

  const std::size_t n = x.rows();
  for (std::size_t j : cols) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x.at(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x.at(i, j) - mean) * (x.at(i, j) - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    if (sd <= 0.0) continue;
    m.selected_features.push_back(x.feature_names[j]);
    m.feature_means.push_back(mean);
    m.feature_scales.push_back(sd);
  }

  const std::size_t p = m.selected_features.size();
  std::vector<double> design(n * p);
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t j = x.column(m.selected_features[c]);
    for (std::size_t i = 0; i < n; ++i) {
      design[i * p + c] = (x.at(i, j) - m.feature_means[c]) / m.feature_scales[c];
    }
  }

  const std::size_t k = m.classes.size();
  std::vector<double> w(k * (p + 1), 0.0);
  std::vector<double> grad;
  std::vector<double> trial(w.size());
  std::vector<double> trial_grad;
  double f = logit_objective(design, p, y, k, options.l2, w, &grad);
  auto& log = m.training_log;
  log.objective_trace.push_back(f);

  double step = 1.0;
  constexpr double kArmijo = 1e-4;
  for (log.iterations = 0; log.iterations < options.max_iter; ++log.iterations) {
    double gmax = 0.0;
    double gsq = 0.0;
    for (double g : grad) {
      gmax = std::max(gmax, std::abs(g));
      gsq += g * g;
    }
    log.final_gradient_norm = gmax;
    if (gmax < options.tol) {
      log.converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e3);
    double f_trial = 0.0;
    while (true) {
      for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] - step * grad[i];
      f_trial = logit_objective(design, p, y, k, options.l2, trial, &trial_grad);
      if (f_trial <= f - kArmijo * step * gsq) break;
      step *= 0.5;
      if (step < 1e-16) break;
    }
    if (step < 1e-16) break;
    w.swap(trial);
    grad.swap(trial_grad);
    f = f_trial;
    log.objective_trace.push_back(f);
  }
  log.final_objective = f;
  m.weights = std::move(w);
  return m;
}

ProbMatrix predict_probs(const LogitModel& m, const FeatureMatrix& x) {
  const std::size_t p = m.selected_features.size();
  const std::size_t n = x.rows();
  std::vector<std::size_t> cols;
  cols.reserve(p);
  for (const auto& f : m.selected_features) cols.push_back(x.column(f));

  RowMatrix design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < p; ++c) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          (x.at(i, cols[c]) - m.feature_means[c]) / m.feature_scales[c];
    }
  }
  const auto k = static_cast<Eigen::Index>(m.classes.size());
  Eigen::Map<const RowMatrix> w(m.weights.data(), k, static_cast<Eigen::Index>(p + 1));
  RowMatrix scores = design * w.rightCols(static_cast<Eigen::Index>(p)).transpose();
  scores.rowwise() += w.col(0).transpose();
  softmax_rows(scores);
  std::vector<double> values(scores.data(), scores.data() + scores.size());
  return ProbMatrix(m.classes, std::move(values));
}

}  // namespace hiconform
