#include "hiconform/graph_crc.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "hiconform/error.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace hiconform {

namespace {

struct ScoredNode {
  NodeId node;
  double score;
};

std::vector<ScoredNode> score_ancestors(const GraphBinding& binding, std::span<const double> row,
                                        NodeId predicted) {
  const auto& anc = binding.graph().reflexive_ancestors(predicted);
  std::vector<ScoredNode> out;
  out.reserve(anc.size());
  for (NodeId a : anc) out.push_back({a, binding.node_score(row, a)});
  return out;
}

// Tie-break among nodes sharing a score: fewer leaves, then name.
bool preferred(const LabelGraph& g, NodeId a, NodeId b) {
  const auto la = g.leaf_descendants(a).size();
  const auto lb = g.leaf_descendants(b).size();
  if (la != lb) return la < lb;
  return g.name(a) < g.name(b);
}

void add_leaves(NodeSet& dst, const NodeSet& src) {
  NodeSet merged;
  merged.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(merged));
  dst.swap(merged);
}

bool has_leaf(const LabelGraph& g, NodeId v, NodeId leaf) {
  const auto& l = g.leaf_descendants(v);
  return std::binary_search(l.begin(), l.end(), leaf);
}

}  // namespace

GraphSetNodes graph_set_nodes(const GraphBinding& binding, std::span<const double> row,
                              double lambda) {
  const LabelGraph& g = binding.graph();
  GraphSetNodes out;
  out.predicted = binding.class_node(point_prediction(row));
  const auto scored = score_ancestors(binding, row, out.predicted);

  const ScoredNode* seed = nullptr;
  for (const auto& s : scored) {
    if (s.score < lambda) continue;
    if (seed == nullptr || s.score < seed->score ||
        (s.score == seed->score && preferred(g, s.node, seed->node))) {
      seed = &s;
    }
  }
  out.seed = seed ? seed->node : g.root();
  out.leaves = g.leaf_descendants(out.seed);
  for (const auto& s : scored) {
    if (s.score <= lambda) add_leaves(out.leaves, g.leaf_descendants(s.node));
  }
  return out;
}

PredictionSet graph_set(const GraphBinding& binding, const ProbMatrix& p, std::size_t i,
                        double lambda) {
  auto nodes = graph_set_nodes(binding, p.row(i), lambda);
  return make_prediction_set(binding.graph(), std::move(nodes.leaves), nodes.seed);
}

PredictionSet graph_set(const LabelGraph& g, const ProbMatrix& p, std::size_t i, double lambda) {
  const GraphBinding binding(g, p.class_names());
  return graph_set(binding, p, i, lambda);
}

int miscoverage_loss(const LabelGraph& g, const PredictionSet& set, std::string_view y) {
  const NodeId v = g.id(y);
  if (!g.is_leaf(v)) throw Error(ErrorCode::UnknownNode, "'" + std::string(y) + "' is not a leaf");
  return set.contains(std::string(y)) ? 0 : 1;
}

CriticalLambda critical_lambda(const GraphBinding& binding, std::span<const double> row,
                               std::size_t true_class) {
  const LabelGraph& g = binding.graph();
  const NodeId truth = binding.class_node(true_class);
  const NodeId predicted = binding.class_node(point_prediction(row));
  auto scored = score_ancestors(binding, row, predicted);
  std::sort(scored.begin(), scored.end(), [](const ScoredNode& a, const ScoredNode& b) {
    return a.score < b.score;
  });

  // Between consecutive distinct scores u_{j-1} < lambda < u_j the set is
  // everything scored <= u_{j-1} plus the preferred node at u_j; at
  // lambda == u_j every node scored u_j joins.
  bool have_previous = false;
  double previous = 0.0;
  for (std::size_t lo = 0; lo < scored.size();) {
    std::size_t hi = lo;
    NodeId best = scored[lo].node;
    while (hi < scored.size() && scored[hi].score == scored[lo].score) {
      if (preferred(g, scored[hi].node, best)) best = scored[hi].node;
      ++hi;
    }
    const double u = scored[lo].score;
    const bool open_interval_nonempty = have_previous || u > 0.0;
    if (open_interval_nonempty && has_leaf(g, best, truth)) {
      return have_previous ? CriticalLambda{previous, false} : CriticalLambda{0.0, true};
    }
    for (std::size_t k = lo; k < hi; ++k) {
      if (has_leaf(g, scored[k].node, truth)) return {u, true};
    }
    have_previous = true;
    previous = u;
    lo = hi;
  }
  // Past the largest ancestor score the root takes over.
  return {previous, false};
}

LambdaCalibration calibrate_lambda_from_criticals(std::vector<CriticalLambda> criticals,
                                                  double alpha, double loss_bound) {
  detail::check_alpha(alpha);
  if (!(loss_bound >= alpha)) {
    throw Error(ErrorCode::InvalidConfig, "loss bound B must be at least alpha");
  }
  const std::size_t n = criticals.size();
  const double target =
      n == 0 ? -1.0 : alpha - (loss_bound - alpha) / static_cast<double>(n);
  if (!(target > 0.0)) {
    throw Error(ErrorCode::BoundUnachievable,
                "alpha - (B - alpha)/n = " + std::to_string(target) + " with n = " +
                    std::to_string(n));
  }

  std::sort(criticals.begin(), criticals.end(), [](const CriticalLambda& a, const CriticalLambda& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.attained > b.attained;
  });

  LambdaCalibration c;
  c.alpha = alpha;
  c.loss_bound = loss_bound;
  c.n = n;
  c.target = target;
  c.criticals = std::move(criticals);

  std::vector<double> candidates{0.0, 1.0};
  for (const auto& cr : c.criticals) {
    candidates.push_back(cr.attained ? cr.value : std::nextafter(cr.value, 2.0));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  while (!candidates.empty() && candidates.back() > 1.0) candidates.pop_back();

  c.lambda_hat = 1.0;
  bool found = false;
  c.risk_curve.reserve(candidates.size());
  for (double lambda : candidates) {
    const double risk = risk_at(c, lambda);
    c.risk_curve.push_back({lambda, risk});
    if (!found && risk <= target + 1e-12) {
      c.lambda_hat = lambda;
      found = true;
    }
  }
  return c;
}

LambdaCalibration calibrate_lambda(const GraphBinding& binding, const LabeledBatch& batch,
                                   double alpha, double loss_bound, std::size_t threads) {
  detail::check_alpha(alpha);
  if (batch.probs.class_names().size() != binding.classes()) {
    throw Error(ErrorCode::GraphClassMismatch, "batch classes differ from the graph binding");
  }
  std::vector<CriticalLambda> criticals(batch.size());
  detail::parallel_for(batch.size(), threads, [&](std::size_t i) {
    criticals[i] = critical_lambda(binding, batch.probs.row(i), batch.labels[i]);
  });
  return calibrate_lambda_from_criticals(std::move(criticals), alpha, loss_bound);
}

LambdaCalibration calibrate_lambda(const LabelGraph& g, const LabeledBatch& batch, double alpha,
                                   double loss_bound) {
  const GraphBinding binding(g, batch.probs.class_names());
  return calibrate_lambda(binding, batch, alpha, loss_bound);
}

double risk_at(const LambdaCalibration& c, double lambda) {
  if (c.n == 0) return 0.0;
  // Sorted by value, attained before open within a value.
  const auto& cr = c.criticals;
  auto first_ge = std::lower_bound(cr.begin(), cr.end(), lambda,
                                   [](const CriticalLambda& a, double x) { return a.value < x; });
  std::size_t losses = 0;
  for (auto it = first_ge; it != cr.end(); ++it) {
    if (it->value > lambda) {
      losses += static_cast<std::size_t>(cr.end() - it);
      break;
    }
    if (!it->attained) ++losses;
  }
  return static_cast<double>(losses) / static_cast<double>(c.n);
}

}  // namespace hiconform
