#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiconform/classifier.hpp"
#include "hiconform/label_graph.hpp"
#include "hiconform/random.hpp"

namespace hiconform {

/// Balanced tree used when no explicit edge list is given.
struct TreeShape {
  std::size_t depth = 2;
  std::size_t branching = 3;
};

struct SynthConfig {
  std::vector<Edge> edges;
  std::optional<TreeShape> tree;
  /// Per-leaf class probabilities in graph leaf order; empty means uniform.
  std::vector<double> class_props;
  std::size_t n_features = 30;
  /// Extra pure-noise columns, N(0,1) regardless of class.
  std::size_t n_noise_features = 0;
  /// Distance between the means of two sibling leaves, in noise sd units.
  double class_separation = 3.0;
  std::uint64_t seed = 1;
};

struct SynthSample {
  FeatureMatrix features;
  std::vector<std::string> labels;
  /// Labels as positions in SynthGenerator::class_names().
  std::vector<std::size_t> label_index;
};

std::vector<Edge> balanced_tree_edges(const TreeShape& shape);

/// Gaussian class-conditional data over a label DAG.
///
/// Each node gets a random unit direction; a node's offset is the mean of its
/// parents' offsets plus a step along its direction, and leaf means are leaf
/// offsets. Classes close in the graph therefore sit close in feature space.
/// The geometry depends only on the config seed, so configs that differ only
/// in class_props share p(x|y).
class SynthGenerator {
 public:
  /// Throws Error{InvalidConfig}.
  explicit SynthGenerator(SynthConfig cfg);

  const SynthConfig& config() const noexcept { return cfg_; }
  const LabelGraph& graph() const noexcept { return graph_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::span<const double> class_mean(std::size_t k) const;

  SynthSample sample(std::size_t n, Rng& rng) const;
  SynthSample sample(std::size_t n, std::span<const double> props, Rng& rng) const;
  /// Exactly counts[k] rows of class k, in class order.
  SynthSample sample_counts(std::span<const std::size_t> counts, Rng& rng) const;

 private:
  SynthConfig cfg_;
  LabelGraph graph_;
  std::vector<std::string> class_names_;
  std::vector<std::string> feature_names_;
  std::vector<double> means_;
};

/// Sample n rows using the config seed. Throws Error{InvalidConfig}.
SynthSample generate(const SynthConfig& cfg, std::size_t n);

/// Same class-conditional law, new class marginal. Throws Error{InvalidProps}.
SynthConfig shift_props(const SynthConfig& cfg, std::span<const double> target);

}  // namespace hiconform
