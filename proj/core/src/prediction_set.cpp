#include "hiconform/prediction_set.hpp"

#include <algorithm>

#include "hiconform/error.hpp"

namespace hiconform {

bool PredictionSet::contains(const std::string& leaf) const {
  return std::binary_search(leaves.begin(), leaves.end(), leaf);
}

double set_homogeneity(const LabelGraph& g, std::span<const NodeId> leaves) {
  for (NodeId v : leaves) {
    if (!g.is_leaf(v)) throw Error(ErrorCode::NotLeaves, "'" + g.name(v) + "' is not a leaf");
  }
  if (leaves.size() < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      total += static_cast<double>(g.undirected_distance(leaves[i], leaves[j]));
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

PredictionSet make_prediction_set(const LabelGraph& g, NodeSet leaves,
                                  std::optional<NodeId> seed_node) {
  PredictionSet set;
  set.homogeneity = set_homogeneity(g, leaves);
  set.size = leaves.size();
  if (!leaves.empty()) set.summary = node_names(g, g.summarize_set(leaves));
  set.leaves = node_names(g, leaves);
  std::sort(set.leaves.begin(), set.leaves.end());
  if (seed_node) set.seed_node = g.name(*seed_node);
  return set;
}

PredictionSet make_flat_set(std::vector<std::string> leaves) {
  PredictionSet set;
  std::sort(leaves.begin(), leaves.end());
  set.size = leaves.size();
  set.leaves = std::move(leaves);
  return set;
}

}  // namespace hiconform
