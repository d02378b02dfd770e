#include "hiconform/classifier.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hiconform/error.hpp"
#include "test_support.hpp"

namespace hiconform {
namespace {

FeatureMatrix design(std::size_t p) {
  FeatureMatrix x;
  for (std::size_t j = 0; j < p; ++j) x.feature_names.push_back("x" + std::to_string(j));
  return x;
}

std::vector<std::string> labels_of(std::initializer_list<const char*> l) { return {l.begin(), l.end()}; }

TEST(Classifier, SeparableToy) {
  auto x = design(2);
  std::vector<std::string> y;
  Rng rng(1);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int i = 0; i < 100; ++i) {
    const bool pos = i % 2;
    x.values.push_back((pos ? 2.0 : -2.0) + n(rng));
    x.values.push_back(n(rng));
    y.push_back(pos ? "pos" : "neg");
  }
  FitOptions opt;
  opt.l2 = 0.01;
  const auto m = fit_logit(x, y, opt);
  EXPECT_EQ(m.classes, labels_of({"neg", "pos"}));
  const auto p = predict_probs(m, x);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    EXPECT_EQ(m.classes[point_prediction(p, i)], y[i]);
  }
}

TEST(Classifier, IndependentLabelsGiveFrequencies) {
  auto x = design(3);
  std::vector<std::string> y;
  Rng rng(2);
  std::normal_distribution<double> n;
  std::discrete_distribution<int> lab({0.2, 0.5, 0.3});
  const char* names[] = {"a", "b", "c"};
  for (int i = 0; i < 2000; ++i) {
    for (int j = 0; j < 3; ++j) x.values.push_back(n(rng));
    y.push_back(names[lab(rng)]);
  }
  const auto m = fit_logit(x, y);
  const auto p = predict_probs(m, x);
  for (std::size_t k = 0; k < 3; ++k) {
    const double freq = static_cast<double>(std::count(y.begin(), y.end(), names[k])) / 2000.0;
    double mean = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      mean += p.at(i, k) / 2000.0;
      worst = std::max(worst, std::abs(p.at(i, k) - freq));
    }
    EXPECT_NEAR(mean, freq, 0.03);
    EXPECT_LT(worst, 0.1);
  }
}

TEST(Classifier, ObjectiveNeverIncreases) {
  auto x = design(4);
  std::vector<std::string> y;
  Rng rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 300; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double v = n(rng);
      x.values.push_back(v);
      s += v * (j + 1);
    }
    y.push_back(s + n(rng) > 1.0 ? "hi" : (s < -1.0 ? "lo" : "mid"));
  }
  const auto m = fit_logit(x, y);
  const auto& tr = m.training_log.objective_trace;
  ASSERT_GE(tr.size(), 2u);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LE(tr[i], tr[i - 1]);
  EXPECT_TRUE(m.training_log.converged);
  EXPECT_LT(m.training_log.final_gradient_norm, 1e-6);
}

TEST(Classifier, ZeroWeightsAreUniform) {
  LogitModel m;
  m.classes = labels_of({"a", "b", "c", "d"});
  m.selected_features = {"x0", "x1"};
  m.feature_means = {0.0, 0.0};
  m.feature_scales = {1.0, 1.0};
  m.weights.assign(4 * 3, 0.0);
  auto x = design(2);
  x.values = {1.0, -3.0, 100.0, 2.0};
  const auto p = predict_probs(m, x);
  for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Classifier, RowsSumToOne) {
  LogitModel m;
  m.classes = labels_of({"a", "b", "c"});
  m.selected_features = {"x0"};
  m.feature_means = {0.0};
  m.feature_scales = {1.0};
  m.weights = {0.0, 800.0, 1.0, -800.0, 2.0, 0.5};
  auto x = design(1);
  x.values = {5.0, -5.0, 0.0, 1e3};
  const auto p = predict_probs(m, x);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto r = p.row(i);
    EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1.0, 1e-12);
  }
  auto missing = x;
  missing.feature_names = {"other"};
  EXPECT_THROW(predict_probs(m, missing), Error);
}

TEST(Classifier, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  std::normal_distribution<double> n;
  const std::size_t rows = 40, p = 5, k = 4;
  std::vector<double> x(rows * p);
  for (auto& v : x) v = n(rng);
  std::vector<std::size_t> y(rows);
  for (auto& v : y) v = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
  std::vector<double> w(k * (p + 1));
  for (auto& v : w) v = 0.5 * n(rng);
  std::vector<double> grad;
  logit_objective(x, p, y, k, 0.1, w, &grad);
  ASSERT_EQ(grad.size(), w.size());
  const double h = 1e-5;
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto up = w, down = w;
    up[j] += h;
    down[j] -= h;
    const double fd =
        (logit_objective(x, p, y, k, 0.1, up, nullptr) - logit_objective(x, p, y, k, 0.1, down, nullptr)) /
        (2 * h);
    EXPECT_LT(std::abs(fd - grad[j]) / std::max(1e-8, std::abs(fd)), 1e-4) << j;
  }
}

TEST(Classifier, RowOrderDoesNotMatter) {
  auto x = design(3);
  std::vector<std::string> y;
  Rng rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    const double a = n(rng), b = n(rng), c = n(rng);
    x.values.insert(x.values.end(), {a, b, c});
    y.push_back(a + b > 0 ? "u" : "v");
  }
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto xp = x.select_rows(perm);
  std::vector<std::string> yp;
  for (auto i : perm) yp.push_back(y[i]);
  FitOptions opt;
  opt.tol = 1e-9;
  const auto m1 = fit_logit(x, y, opt);
  const auto m2 = fit_logit(xp, yp, opt);
  ASSERT_EQ(m1.weights.size(), m2.weights.size());
  for (std::size_t j = 0; j < m1.weights.size(); ++j) EXPECT_NEAR(m1.weights[j], m2.weights[j], 1e-6);
}

TEST(Classifier, PenaltyShrinksWeights) {
  auto x = design(3);
  std::vector<std::string> y;
  Rng rng(6);
  std::normal_distribution<double> n;
  for (int i = 0; i < 300; ++i) {
    const double a = n(rng), b = n(rng), c = n(rng);
    x.values.insert(x.values.end(), {a, b, c});
    y.push_back(a - c + 0.5 * n(rng) > 0 ? "u" : "v");
  }
  double previous = 1e300;
  for (double l2 : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    FitOptions opt;
    opt.l2 = l2;
    const double norm = fit_logit(x, y, opt).weight_norm();
    EXPECT_LT(norm, previous) << l2;
    previous = norm;
  }
}

TEST(Classifier, ConstantColumnsDropped) {
  auto x = design(3);
  std::vector<std::string> y;
  for (int i = 0; i < 50; ++i) {
    x.values.insert(x.values.end(), {static_cast<double>(i), 7.0, static_cast<double>(i % 3)});
    y.push_back(i < 25 ? "a" : "b");
  }
  const auto m = fit_logit(x, y);
  EXPECT_EQ(m.selected_features, labels_of({"x0", "x2"}));
}

TEST(Classifier, Errors) {
  auto x = design(1);
  x.values = {1.0, 2.0};
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ParseError;
  };
  const auto same = labels_of({"a", "a"});
  EXPECT_EQ(code([&] { fit_logit(x, same); }), ErrorCode::SingleClass);
  const auto one = labels_of({"a"});
  EXPECT_EQ(code([&] { fit_logit(x, one); }), ErrorCode::LengthMismatch);
  auto bad = x;
  bad.values[1] = std::nan("");
  const auto two = labels_of({"a", "b"});
  EXPECT_EQ(code([&] { fit_logit(bad, two); }), ErrorCode::NonFiniteInput);
  const auto classes = labels_of({"a", "c"});
  EXPECT_EQ(code([&] { fit_logit(x, two, {}, {}, classes); }), ErrorCode::LabelNotInClasses);
  EXPECT_EQ(code([&] { select_top_variance(x, 2); }), ErrorCode::KTooLarge);
}

TEST(FeatureSelection, ConstantNeverChosen) {
  auto x = design(4);
  Rng rng(7);
  std::normal_distribution<double> n;
  for (int i = 0; i < 30; ++i) x.values.insert(x.values.end(), {n(rng), 3.0, n(rng), n(rng)});
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto s = select_top_variance(x, k);
    EXPECT_EQ(std::count(s.begin(), s.end(), "x1"), 0) << k;
  }
  const auto all = select_top_variance(x, 4);
  EXPECT_EQ(std::set<std::string>(all.begin(), all.end()),
            std::set<std::string>(x.feature_names.begin(), x.feature_names.end()));
}

TEST(FeatureSelection, PlantedFeaturesRecovered) {
  double recovered = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> n;
    auto x = design(200);
    std::vector<std::size_t> cols(200);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    std::shuffle(cols.begin(), cols.end(), rng);
    std::set<std::string> planted;
    std::vector<double> scale(200, 1.0);
    for (std::size_t j = 0; j < 50; ++j) {
      scale[cols[j]] = 1.5;
      planted.insert(x.feature_names[cols[j]]);
    }
    for (int i = 0; i < 200; ++i) {
      for (std::size_t j = 0; j < 200; ++j) x.values.push_back(scale[j] * n(rng));
    }
    const auto s = select_top_variance(x, 50);
    for (const auto& f : s) recovered += planted.count(f) ? 1.0 : 0.0;
  }
  EXPECT_GE(recovered / 20.0, 45.0);
}

}  // namespace
}  // namespace hiconform
