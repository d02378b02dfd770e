#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hiconform/prediction_set.hpp"
#include "hiconform/scores.hpp"

namespace hiconform {

/// Leaves of C_lambda(x) together with the node that seeded them.
struct GraphSetNodes {
  NodeSet leaves;
  NodeId seed = 0;
  NodeId predicted = 0;
};

/// Ancestor-traversal set for one probability row.
///
/// Starting from the argmax leaf, picks the reflexive ancestor v with the
/// smallest score g(v,x) >= lambda (ties: fewer leaves, then name) and returns
/// L(v) together with L(a) for every ancestor a with g(a,x) <= lambda. When no
/// ancestor reaches lambda, v is the root.
GraphSetNodes graph_set_nodes(const GraphBinding& binding, std::span<const double> row,
                              double lambda);

/// Throws Error{IndexOutOfRange}.
PredictionSet graph_set(const GraphBinding& binding, const ProbMatrix& p, std::size_t i,
                        double lambda);
/// Throws Error{GraphClassMismatch} or Error{IndexOutOfRange}.
PredictionSet graph_set(const LabelGraph& g, const ProbMatrix& p, std::size_t i, double lambda);

/// 1 when y is outside the set. Throws Error{UnknownNode} unless y is a leaf of g.
int miscoverage_loss(const LabelGraph& g, const PredictionSet& set, std::string_view y);

/// Smallest lambda at which an observation's true label enters C_lambda(x).
///
/// Sets only grow with lambda, so coverage is a threshold event: the label is
/// covered for every lambda > value, and also at lambda == value when
/// `attained` is set.
struct CriticalLambda {
  double value = 0.0;
  bool attained = true;

  friend bool operator==(const CriticalLambda&, const CriticalLambda&) = default;
};

CriticalLambda critical_lambda(const GraphBinding& binding, std::span<const double> row,
                               std::size_t true_class);

inline bool covered_at(const CriticalLambda& c, double lambda) {
  return lambda > c.value || (lambda == c.value && c.attained);
}

struct RiskPoint {
  double lambda;
  double risk;
};

struct LambdaCalibration {
  double lambda_hat = 1.0;
  double alpha = 0.1;
  double loss_bound = 1.0;
  std::size_t n = 0;
  /// alpha - (B - alpha) / n.
  double target = 0.0;
  /// Empirical risk at every candidate lambda, ascending in lambda.
  std::vector<RiskPoint> risk_curve;
  /// Per-point critical lambdas, sorted.
  std::vector<CriticalLambda> criticals;
};

/// Chooses lambda_hat = inf{lambda : R_n(lambda) <= alpha - (B - alpha)/n}
/// under miscoverage loss. Throws Error{InvalidAlpha} or
/// Error{BoundUnachievable}.
LambdaCalibration calibrate_lambda(const GraphBinding& binding, const LabeledBatch& batch,
                                   double alpha, double loss_bound = 1.0,
                                   std::size_t threads = 1);
LambdaCalibration calibrate_lambda(const LabelGraph& g, const LabeledBatch& batch, double alpha,
                                   double loss_bound = 1.0);

/// Same selection from precomputed critical values.
LambdaCalibration calibrate_lambda_from_criticals(std::vector<CriticalLambda> criticals,
                                                  double alpha, double loss_bound = 1.0);

/// Empirical miscoverage of the calibration points at lambda.
double risk_at(const LambdaCalibration& c, double lambda);

}  // namespace hiconform
