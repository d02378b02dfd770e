#include "hiconform/graph_crc.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hiconform/error.hpp"
#include "test_support.hpp"

namespace hiconform {
namespace {

using testing::BruteForceSets;

std::set<std::string> names_of(const LabelGraph& g, const NodeSet& s) {
  std::set<std::string> out;
  for (NodeId v : s) out.insert(g.name(v));
  return out;
}

LabelGraph epithelial() {
  return load_label_graph(std::string(HICONFORM_DATA_DIR) + "/epithelial_subontology.tsv");
}

const std::vector<std::string> kEpiClasses{"Enterocyte", "Goblet", "Paneth", "Stem + TA", "Tuft"};

TEST(GraphCrc, WorkedExample) {
  const auto g = epithelial();
  const ProbMatrix p(kEpiClasses, {0.45, 0.17, 0.12, 0.10, 0.16});
  const GraphBinding b(g, kEpiClasses);
  const auto row = p.row(0);
  EXPECT_GE(b.node_score(row, g.id("epithelial intestinal cell")), 0.63);
  EXPECT_LE(b.node_score(row, g.id("columnar epithelial cell")), 0.63);

  const auto at63 = graph_set(b, p, 0, 0.63);
  const auto& all = g.leaf_descendants("epithelial cell");
  EXPECT_EQ(at63.leaves, node_names(g, all));
  EXPECT_EQ(at63.seed_node, "epithelial intestinal cell");
  EXPECT_EQ(at63.summary, (std::vector<std::string>{"epithelial cell"}));

  const auto at60 = graph_set(b, p, 0, 0.6);
  EXPECT_EQ(at60.leaves, (std::vector<std::string>{"Enterocyte", "Goblet"}));
  EXPECT_EQ(at60.summary, (std::vector<std::string>{"columnar epithelial cell"}));
}

TEST(GraphCrc, ZeroLambdaIsArgmax) {
  const auto g = epithelial();
  const ProbMatrix p(kEpiClasses, {0.05, 0.8, 0.05, 0.05, 0.05});
  const auto s = graph_set(g, p, 0, 0.0);
  EXPECT_EQ(s.leaves, (std::vector<std::string>{"Goblet"}));
  EXPECT_DOUBLE_EQ(s.homogeneity, 0.0);
}

TEST(GraphCrc, FullLambdaIsEverything) {
  const auto g = load_label_graph(std::string(HICONFORM_DATA_DIR) + "/mouse_ileum.tsv");
  std::vector<std::string> classes = node_names(g, g.leaves());
  std::vector<double> v(classes.size(), 0.0);
  v[3] = 0.9;
  v[7] = 0.1;
  const ProbMatrix p(classes, v);
  const auto s = graph_set(g, p, 0, 1.0);
  EXPECT_EQ(s.leaves.size(), 15u);
  EXPECT_EQ(s.summary, (std::vector<std::string>{"cell"}));
}

TEST(GraphCrc, MiscoverageLoss) {
  const auto g = epithelial();
  const ProbMatrix p(kEpiClasses, {0.45, 0.17, 0.12, 0.10, 0.16});
  const auto s = graph_set(g, p, 0, 0.6);
  EXPECT_EQ(miscoverage_loss(g, s, "Goblet"), 0);
  EXPECT_EQ(miscoverage_loss(g, s, "Tuft"), 1);
  EXPECT_EQ(miscoverage_loss(g, graph_set(g, p, 0, 1.0), "Tuft"), 0);
  EXPECT_THROW(miscoverage_loss(g, s, "columnar epithelial cell"), Error);
  EXPECT_THROW(miscoverage_loss(g, s, "nope"), Error);
}

TEST(GraphCrc, BoundArithmetic) {
  std::vector<CriticalLambda> cr(1000, CriticalLambda{0.0, true});
  const auto c = calibrate_lambda_from_criticals(cr, 0.1);
  EXPECT_NEAR(c.target, 0.0991, 1e-15);
}

TEST(GraphCrc, PerfectClassifier) {
  const auto g = epithelial();
  std::vector<double> v;
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t k = 0; k < 5; ++k) v.push_back(k == i % 5 ? 1.0 : 0.0);
    y.push_back(i % 5);
  }
  const auto batch = LabeledBatch::from_indices(ProbMatrix(kEpiClasses, v), y);
  const auto c = calibrate_lambda(g, batch, 0.1);
  EXPECT_EQ(c.lambda_hat, 0.0);
  EXPECT_EQ(risk_at(c, 0.0), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(graph_set(g, batch.probs, i, c.lambda_hat).size, 1u);
  }
}

TEST(GraphCrc, BoundUnachievable) {
  std::vector<CriticalLambda> cr(50, CriticalLambda{0.0, true});
  try {
    calibrate_lambda_from_criticals(cr, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoundUnachievable);
  }
  EXPECT_THROW(calibrate_lambda_from_criticals({}, 0.1), Error);
  EXPECT_THROW(calibrate_lambda_from_criticals(cr, 0.0), Error);
}

// Random calibration batch over a random DAG with classes = shuffled leaves.
struct Instance {
  std::vector<Edge> edges;
  LabelGraph graph;
  std::vector<std::string> classes;
};

Instance random_instance(Rng& rng, std::size_t max_internal, std::size_t max_leaves) {
  auto edges = testing::random_dag(rng, max_internal, max_leaves);
  auto g = LabelGraph::build(edges);
  auto classes = testing::shuffled_leaf_names(g, rng);
  return {std::move(edges), std::move(g), std::move(classes)};
}

TEST(GraphCrc, RiskCurveAgainstBruteForce) {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const auto inst = random_instance(rng, 6, 7);
    const BruteForceSets brute(inst.edges, inst.classes);
    const GraphBinding b(inst.graph, inst.classes);
    const std::size_t k = inst.classes.size();
    std::vector<double> v;
    std::vector<std::size_t> y;
    for (int i = 0; i < 60; ++i) {
      const auto row = testing::grid_row(rng, k);
      v.insert(v.end(), row.begin(), row.end());
      y.push_back(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
    }
    const auto batch = LabeledBatch::from_indices(ProbMatrix(inst.classes, v), y);
    const auto c = calibrate_lambda(b, batch, 0.2);

    auto brute_risk = [&](double lambda) {
      int miss = 0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = batch.probs.row(i);
        const auto s = brute.predict(std::vector<double>(row.begin(), row.end()), lambda);
        miss += s.count(inst.classes[batch.labels[i]]) ? 0 : 1;
      }
      return miss / static_cast<double>(batch.size());
    };
    // Grid search for the step-function infimum: no grid point below
    // lambda_hat meets the target, and lambda_hat itself does.
    EXPECT_LE(brute_risk(c.lambda_hat), c.target + 1e-12);
    EXPECT_EQ(risk_at(c, c.lambda_hat), brute_risk(c.lambda_hat));
    for (int j = 0; j <= 10000; ++j) {
      const double lambda = j / 10000.0;
      if (lambda >= c.lambda_hat) break;
      if (j % 50 == 0) {
        EXPECT_GT(brute_risk(lambda), c.target) << lambda;
      } else {
        EXPECT_GT(risk_at(c, lambda), c.target) << lambda;
      }
    }
    for (int j = 0; j <= 100; ++j) {
      EXPECT_EQ(risk_at(c, j / 100.0), brute_risk(j / 100.0)) << j;
    }
    EXPECT_EQ(risk_at(c, 1.0), 0.0);
  }
}

TEST(GraphCrc, CriticalLambdaPredictsCoverage) {
  Rng rng(17);
  for (int rep = 0; rep < 300; ++rep) {
    const auto inst = random_instance(rng, 5, 6);
    const GraphBinding b(inst.graph, inst.classes);
    const auto row = rep % 2 ? testing::grid_row(rng, inst.classes.size())
                             : testing::random_row(rng, inst.classes.size(), 1.0);
    for (std::size_t y = 0; y < inst.classes.size(); ++y) {
      const auto cr = critical_lambda(b, row, y);
      const NodeId truth = b.class_node(y);
      std::vector<double> probes{cr.value, std::nextafter(cr.value, 2.0),
                                 std::nextafter(cr.value, -1.0)};
      for (int j = 0; j <= 40; ++j) probes.push_back(j / 40.0);
      for (double lambda : probes) {
        if (lambda < 0.0 || lambda > 1.0) continue;
        const auto s = graph_set_nodes(b, row, lambda).leaves;
        EXPECT_EQ(covered_at(cr, lambda), std::binary_search(s.begin(), s.end(), truth))
            << "rep " << rep << " class " << y << " lambda " << lambda;
      }
    }
  }
}

TEST(GraphCrc, MatchesBruteForceOnGrid) {
  Rng rng(2718);
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto inst = random_instance(rng, 5, 6);
    const BruteForceSets brute(inst.edges, inst.classes);
    const GraphBinding b(inst.graph, inst.classes);
    for (int r = 0; r < 3; ++r) {
      const auto row = testing::grid_row(rng, inst.classes.size());
      for (int j = 0; j <= 20; j += 3) {
        const double lambda = j / 20.0;
        const auto got = names_of(inst.graph, graph_set_nodes(b, row, lambda).leaves);
        ++cases;
        if (got != brute.predict(row, lambda)) ++mismatches;
      }
    }
  }
  EXPECT_GE(cases, 10000u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(GraphCrc, SetsAreNested) {
  Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const auto inst = random_instance(rng, 8, 10);
    const GraphBinding b(inst.graph, inst.classes);
    const auto row = testing::random_row(rng, inst.classes.size(), rep % 3);
    NodeSet previous;
    for (int j = 0; j <= 100; ++j) {
      const auto s = graph_set_nodes(b, row, j / 100.0).leaves;
      EXPECT_TRUE(std::includes(s.begin(), s.end(), previous.begin(), previous.end()));
      previous = s;
    }
    EXPECT_EQ(previous, inst.graph.leaves());
  }
}

TEST(GraphCrc, RootFallback) {
  // Only the virtual root can reach lambda when the real roots split the mass.
  const std::vector<Edge> e{{"r1", "a"}, {"r1", "b"}, {"r2", "c"}, {"r2", "d"}};
  const auto g = LabelGraph::build(e);
  const std::vector<std::string> classes{"a", "b", "c", "d"};
  const ProbMatrix p(classes, {0.3, 0.2, 0.25, 0.25});
  const auto s = graph_set(g, p, 0, 0.7);
  EXPECT_EQ(s.leaves.size(), 4u);
  EXPECT_EQ(s.seed_node, std::string(LabelGraph::kVirtualRootName));
}

TEST(GraphCrc, ThreadedCalibrationMatches) {
  Rng rng(5);
  const auto inst = random_instance(rng, 6, 8);
  const GraphBinding b(inst.graph, inst.classes);
  std::vector<double> v;
  std::vector<std::size_t> y;
  for (int i = 0; i < 400; ++i) {
    const auto row = testing::random_row(rng, inst.classes.size(), 2.0);
    v.insert(v.end(), row.begin(), row.end());
    y.push_back(std::uniform_int_distribution<std::size_t>(0, inst.classes.size() - 1)(rng));
  }
  const auto batch = LabeledBatch::from_indices(ProbMatrix(inst.classes, v), y);
  const auto one = calibrate_lambda(b, batch, 0.1, 1.0, 1);
  const auto four = calibrate_lambda(b, batch, 0.1, 1.0, 4);
  EXPECT_EQ(one.lambda_hat, four.lambda_hat);
  EXPECT_EQ(one.criticals, four.criticals);
  for (std::size_t i = 1; i < one.risk_curve.size(); ++i) {
    EXPECT_LE(one.risk_curve[i].risk, one.risk_curve[i - 1].risk);
    EXPECT_LT(one.risk_curve[i - 1].lambda, one.risk_curve[i].lambda);
  }
}

}  // namespace
}  // namespace hiconform
