#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiconform/label_graph.hpp"

namespace hiconform {

/// A set of leaf labels returned for one observation.
struct PredictionSet {
  /// Leaf names, sorted.
  std::vector<std::string> leaves;
  /// Ancestor whose leaf set seeded a graph set; empty for flat sets.
  std::optional<std::string> seed_node;
  /// Fewest nodes whose leaf sets cover exactly `leaves`.
  std::vector<std::string> summary;
  std::size_t size = 0;
  /// Mean pairwise undirected distance among the leaves; 0 for singletons.
  double homogeneity = 0.0;

  bool contains(const std::string& leaf) const;
};

/// Mean pairwise leaf distance. Throws Error{NotLeaves} for internal nodes.
double set_homogeneity(const LabelGraph& g, std::span<const NodeId> leaves);

/// Builds a PredictionSet from graph leaves, filling the summary and
/// homogeneity fields.
PredictionSet make_prediction_set(const LabelGraph& g, NodeSet leaves,
                                  std::optional<NodeId> seed_node = std::nullopt);

/// A flat set of class names; graph-derived fields are left empty.
PredictionSet make_flat_set(std::vector<std::string> leaves);

}  // namespace hiconform
