#include "hiconform/split_conformal.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hiconform/error.hpp"
#include "test_support.hpp"

namespace hiconform {
namespace {

// Order-statistic oracle: the smallest score t such that at least
// (1 - alpha)(n + 1) scores are <= t, found by scanning, not by a formula.
double oracle_quantile(std::vector<double> s, double alpha) {
  std::sort(s.begin(), s.end());
  const double need = (1.0 - alpha) * static_cast<double>(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (static_cast<double>(i + 1) >= need - 1e-9) return s[i];
  }
  return 2.0;
}

TEST(SplitConformal, RankArithmetic) {
  EXPECT_EQ(split_quantile_rank(1000, 0.1), 901u);
  EXPECT_EQ(split_quantile_rank(9, 0.1), 9u);
  EXPECT_EQ(split_quantile_rank(5, 0.1), 6u);
  EXPECT_EQ(split_quantile_rank(99, 0.05), 95u);
  EXPECT_THROW(split_quantile_rank(10, 0.0), Error);
  EXPECT_THROW(split_quantile_rank(10, 1.0), Error);
}

TEST(SplitConformal, QuantileMatchesOrderStatistic) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : {9u, 10u, 37u, 1000u}) {
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    const auto c = calibrate_split(s, 0.1);
    EXPECT_EQ(c.q_hat, oracle_quantile(s, 0.1)) << n;
    EXPECT_EQ(c.n, n);
  }
}

TEST(SplitConformal, NineScoresGiveMaximum) {
  std::vector<double> s{0.3, 0.1, 0.9, 0.2, 0.5, 0.4, 0.8, 0.7, 0.6};
  const auto c = calibrate_split(s, 0.1);
  EXPECT_EQ(c.rank, 9u);
  EXPECT_DOUBLE_EQ(c.q_hat, 0.9);
}

TEST(SplitConformal, TooSmall) {
  std::vector<double> s(5, 0.2);
  try {
    calibrate_split(s, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CalibrationTooSmall);
  }
}

TEST(SplitConformal, SetRule) {
  SplitCalibration c;
  c.q_hat = 0.4;
  const std::vector<double> row{0.7, 0.2, 0.1};
  EXPECT_EQ(split_set_classes(c, row), (std::vector<std::size_t>{0}));
  c.q_hat = 1.0;
  EXPECT_EQ(split_set_classes(c, row), (std::vector<std::size_t>{0, 1, 2}));
  c.q_hat = 0.0;
  const std::vector<double> sure{0.0, 1.0, 0.0};
  EXPECT_EQ(split_set_classes(c, sure), (std::vector<std::size_t>{1}));
}

TEST(SplitConformal, SetRuleMatchesEnumeration) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const auto row = testing::random_row(rng, 6);
    SplitCalibration c;
    c.q_hat = u(rng);
    std::vector<std::size_t> want;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (1.0 - row[k] <= c.q_hat) want.push_back(k);
    }
    EXPECT_EQ(split_set_classes(c, row), want);
  }
}

TEST(SplitConformal, SetsGrowWithThreshold) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const auto row = testing::random_row(rng, 5);
    SplitCalibration lo, hi;
    for (int j = 0; j < 100; ++j) {
      lo.q_hat = j / 100.0;
      hi.q_hat = (j + 1) / 100.0;
      const auto a = split_set_classes(lo, row);
      const auto b = split_set_classes(hi, row);
      EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST(SplitConformal, PredictSetCarriesNames) {
  ProbMatrix p({"a", "b", "c"}, {0.5, 0.45, 0.05});
  SplitCalibration c;
  c.q_hat = 0.6;
  const auto s = split_predict_set(c, p, 0);
  EXPECT_EQ(s.leaves, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.size, 2u);
  EXPECT_FALSE(s.seed_node.has_value());
  EXPECT_THROW(split_predict_set(c, p, 1), Error);

  const std::vector<Edge> e{{"r", "x"}, {"x", "a"}, {"x", "b"}, {"r", "c"}};
  const auto g = LabelGraph::build(e);
  const GraphBinding binding(g, p.class_names());
  const auto gs = split_predict_set(c, binding, p, 0);
  EXPECT_EQ(gs.summary, (std::vector<std::string>{"x"}));
  EXPECT_DOUBLE_EQ(gs.homogeneity, 2.0);
}

}  // namespace
}  // namespace hiconform
