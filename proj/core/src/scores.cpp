#include "hiconform/scores.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hiconform/error.hpp"

namespace hiconform {

ProbMatrix::ProbMatrix(std::vector<std::string> class_names, std::vector<double> values)
    : class_names_(std::move(class_names)), values_(std::move(values)) {
  const std::size_t k = class_names_.size();
  if (k < 2) throw Error(ErrorCode::InvalidProbabilities, "need at least two classes");
  std::unordered_set<std::string> unique(class_names_.begin(), class_names_.end());
  if (unique.size() != k) throw Error(ErrorCode::InvalidProbabilities, "duplicate class names");
  if (values_.size() % k != 0) {
    throw Error(ErrorCode::InvalidProbabilities, "value count is not a multiple of the class count");
  }
  rows_ = values_.size() / k;
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = values_[i * k + j];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::InvalidProbabilities,
                    "row " + std::to_string(i) + " has an entry outside [0,1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw Error(ErrorCode::InvalidProbabilities,
                  "row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

std::span<const double> ProbMatrix::row(std::size_t i) const {
  if (i >= rows_) {
    throw Error(ErrorCode::IndexOutOfRange,
                "row " + std::to_string(i) + " of " + std::to_string(rows_));
  }
  return {values_.data() + i * classes(), classes()};
}

std::size_t ProbMatrix::class_index(std::string_view name) const {
  auto it = std::find(class_names_.begin(), class_names_.end(), name);
  if (it == class_names_.end()) {
    throw Error(ErrorCode::LabelNotInClasses, "'" + std::string(name) + "' is not a class");
  }
  return static_cast<std::size_t>(it - class_names_.begin());
}

ProbMatrix ProbMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> values;
  values.reserve(rows.size() * classes());
  for (std::size_t i : rows) {
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  ProbMatrix out;
  out.class_names_ = class_names_;
  out.values_ = std::move(values);
  out.rows_ = rows.size();
  return out;
}

LabeledBatch LabeledBatch::from_names(ProbMatrix probs, std::span<const std::string> labels) {
  std::vector<std::size_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) idx.push_back(probs.class_index(l));
  return from_indices(std::move(probs), std::move(idx));
}

LabeledBatch LabeledBatch::from_indices(ProbMatrix probs, std::vector<std::size_t> labels) {
  if (labels.size() != probs.rows()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(labels.size()) + " labels for " +
                                               std::to_string(probs.rows()) + " rows");
  }
  for (std::size_t y : labels) {
    if (y >= probs.classes()) {
      throw Error(ErrorCode::LabelNotInClasses, "label index " + std::to_string(y));
    }
  }
  return LabeledBatch{std::move(probs), std::move(labels)};
}

LabeledBatch LabeledBatch::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> y;
  y.reserve(rows.size());
  for (std::size_t i : rows) y.push_back(labels.at(i));
  return LabeledBatch{probs.select_rows(rows), std::move(y)};
}

std::vector<double> conformal_scores(const LabeledBatch& batch) {
  std::vector<double> s(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    s[i] = 1.0 - batch.probs.at(i, batch.labels[i]);
  }
  return s;
}

std::size_t point_prediction(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::size_t point_prediction(const ProbMatrix& p, std::size_t i) {
  return point_prediction(p.row(i));
}

GraphBinding::GraphBinding(const LabelGraph& graph, std::span<const std::string> class_names)
    : graph_(&graph) {
  const std::size_t k = class_names.size();
  leaf_class_.assign(graph.node_count(), k);
  class_node_.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto v = graph.find(class_names[j]);
    if (!v || !graph.is_leaf(*v)) {
      throw Error(ErrorCode::GraphClassMismatch,
                  "class '" + class_names[j] + "' is not a leaf of the label graph");
    }
    if (leaf_class_[*v] != k) {
      throw Error(ErrorCode::GraphClassMismatch, "class '" + class_names[j] + "' repeated");
    }
    leaf_class_[*v] = j;
    class_node_.push_back(*v);
  }
  node_classes_.resize(graph.node_count());
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    for (NodeId leaf : graph.leaf_descendants(v)) {
      if (leaf_class_[leaf] != k) node_classes_[v].push_back(leaf_class_[leaf]);
    }
    std::sort(node_classes_[v].begin(), node_classes_[v].end());
  }
}

std::size_t GraphBinding::leaf_class(NodeId leaf) const { return leaf_class_.at(leaf); }

double GraphBinding::node_score(std::span<const double> row, NodeId v) const {
  double sum = 0.0;
  for (std::size_t j : node_classes_.at(v)) sum += row[j];
  return std::min(sum, 1.0);
}

double node_score(const LabelGraph& g, const ProbMatrix& p, std::size_t i, NodeId v) {
  if (v >= g.node_count()) throw Error(ErrorCode::UnknownNode, "node id " + std::to_string(v));
  const GraphBinding binding(g, p.class_names());
  return binding.node_score(p.row(i), v);
}

}  // namespace hiconform
