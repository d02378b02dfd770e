#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiconform/label_graph.hpp"

namespace hiconform {

/// Rows may deviate from summing to one by at most this much.
inline constexpr double kRowSumTolerance = 1e-6;

/// n x K matrix of predicted class probabilities, row-major.
class ProbMatrix {
 public:
  ProbMatrix() = default;

  /// Throws Error{InvalidProbabilities} when K < 2, class names repeat, the
  /// value count is not a multiple of K, an entry leaves [0,1], or a row sum
  /// is off by more than kRowSumTolerance.
  ProbMatrix(std::vector<std::string> class_names, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t classes() const noexcept { return class_names_.size(); }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::span<const double> row(std::size_t i) const;
  double at(std::size_t i, std::size_t k) const { return row(i)[k]; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Throws Error{LabelNotInClasses}.
  std::size_t class_index(std::string_view name) const;

  ProbMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> class_names_;
  std::vector<double> values_;
  std::size_t rows_ = 0;
};

/// Probabilities paired with the true class of each row (as class indices).
struct LabeledBatch {
  ProbMatrix probs;
  std::vector<std::size_t> labels;

  /// Throws Error{LabelNotInClasses} or Error{LengthMismatch}.
  static LabeledBatch from_names(ProbMatrix probs, std::span<const std::string> labels);
  static LabeledBatch from_indices(ProbMatrix probs, std::vector<std::size_t> labels);

  std::size_t size() const noexcept { return labels.size(); }
  LabeledBatch select_rows(std::span<const std::size_t> rows) const;
};

/// s_i = 1 - p_i[y_i].
std::vector<double> conformal_scores(const LabeledBatch& batch);

/// Argmax class index; ties go to the earliest class.
std::size_t point_prediction(std::span<const double> row);
/// Throws Error{IndexOutOfRange}.
std::size_t point_prediction(const ProbMatrix& p, std::size_t i);

/// Ties a ProbMatrix column order to the leaves of a LabelGraph.
///
/// Every class must be a leaf; leaves that are not classes carry zero
/// probability mass. Node scores are sums over the class columns under a
/// node, accumulated in ascending column order and clamped to 1.
class GraphBinding {
 public:
  /// Throws Error{GraphClassMismatch}.
  GraphBinding(const LabelGraph& graph, std::span<const std::string> class_names);

  const LabelGraph& graph() const noexcept { return *graph_; }
  std::size_t classes() const noexcept { return class_node_.size(); }
  NodeId class_node(std::size_t k) const { return class_node_.at(k); }
  /// Class columns under v, ascending.
  std::span<const std::size_t> node_classes(NodeId v) const { return node_classes_.at(v); }
  /// Class column of a leaf, or classes() when the leaf is not a class.
  std::size_t leaf_class(NodeId leaf) const;

  double node_score(std::span<const double> row, NodeId v) const;

 private:
  const LabelGraph* graph_;
  std::vector<NodeId> class_node_;
  std::vector<std::vector<std::size_t>> node_classes_;
  std::vector<std::size_t> leaf_class_;
};

/// g(v, x_i): total probability of the leaves under v.
/// Throws Error{UnknownNode}, Error{GraphClassMismatch}, Error{IndexOutOfRange}.
double node_score(const LabelGraph& g, const ProbMatrix& p, std::size_t i, NodeId v);

}  // namespace hiconform
