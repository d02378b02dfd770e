#include "hiconform/synthgen.hpp"

#include <cmath>
#include <numeric>

#include "hiconform/error.hpp"

namespace hiconform {

namespace {

void check_config_props(std::span<const double> props, std::size_t k, ErrorCode code) {
  if (props.empty()) return;
  if (props.size() != k) {
    throw Error(code, "class_props has " + std::to_string(props.size()) + " entries for " +
                          std::to_string(k) + " leaves");
  }
  double sum = 0.0;
  for (double p : props) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(code, "class_props must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(code, "class_props sum to " + std::to_string(sum));
}

LabelGraph graph_for(const SynthConfig& cfg) {
  if (!cfg.edges.empty()) return LabelGraph::build(cfg.edges);
  if (cfg.tree) {
    const auto edges = balanced_tree_edges(*cfg.tree);
    return LabelGraph::build(edges);
  }
  throw Error(ErrorCode::InvalidConfig, "synthetic config needs edges or a tree shape");
}

}  // namespace

std::vector<Edge> balanced_tree_edges(const TreeShape& shape) {
  if (shape.depth == 0 || shape.branching < 2) {
    throw Error(ErrorCode::InvalidConfig, "tree shape needs depth >= 1 and branching >= 2");
  }
  std::vector<Edge> edges;
  std::vector<std::string> level{"root"};
  for (std::size_t d = 1; d <= shape.depth; ++d) {
    std::vector<std::string> next;
    for (const auto& parent : level) {
      for (std::size_t b = 0; b < shape.branching; ++b) {
        const std::string base = parent == "root" ? std::string{} : parent.substr(parent.find('_') + 1) + ".";
        std::string child = (d == shape.depth ? "leaf_" : "node_") + base + std::to_string(b);
        edges.emplace_back(parent, child);
        next.push_back(std::move(child));
      }
    }
    level = std::move(next);
  }
  return edges;
}

SynthGenerator::SynthGenerator(SynthConfig cfg) : cfg_(std::move(cfg)), graph_(graph_for(cfg_)) {
  if (cfg_.n_features == 0) throw Error(ErrorCode::InvalidConfig, "n_features must be positive");
  if (!(cfg_.class_separation >= 0.0) || !std::isfinite(cfg_.class_separation)) {
    throw Error(ErrorCode::InvalidConfig, "class_separation must be nonnegative");
  }
  class_names_ = node_names(graph_, graph_.leaves());
  check_config_props(cfg_.class_props, class_names_.size(), ErrorCode::InvalidConfig);

  const std::size_t d = cfg_.n_features;
  for (std::size_t j = 0; j < d; ++j) feature_names_.push_back("f" + std::to_string(j));
  for (std::size_t j = 0; j < cfg_.n_noise_features; ++j) feature_names_.push_back("noise" + std::to_string(j));

  // Sibling leaves differ by two independent steps: |step| * sqrt(2) = separation.
  const double step = cfg_.class_separation / std::sqrt(2.0);
  Rng rng = make_rng(cfg_.seed, 0x6E0);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> offset(graph_.node_count(), std::vector<double>(d, 0.0));
  for (NodeId v : graph_.topological_order()) {
    std::vector<double> dir(d);
    double norm = 0.0;
    for (double& x : dir) {
      x = normal(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    const auto parents = graph_.parents(v);
    if (parents.empty()) continue;
    auto& o = offset[v];
    for (NodeId p : parents) {
      for (std::size_t j = 0; j < d; ++j) o[j] += offset[p][j] / static_cast<double>(parents.size());
    }
    for (std::size_t j = 0; j < d; ++j) o[j] += step * dir[j] / norm;
  }
  for (NodeId leaf : graph_.leaves()) means_.insert(means_.end(), offset[leaf].begin(), offset[leaf].end());
}

std::span<const double> SynthGenerator::class_mean(std::size_t k) const {
  const std::size_t d = cfg_.n_features;
  return {means_.data() + k * d, d};
}

SynthSample SynthGenerator::sample(std::size_t n, Rng& rng) const {
  if (cfg_.class_props.empty()) {
    const std::vector<double> uniform(class_names_.size(), 1.0 / static_cast<double>(class_names_.size()));
    return sample(n, uniform, rng);
  }
  return sample(n, cfg_.class_props, rng);
}

SynthSample SynthGenerator::sample(std::size_t n, std::span<const double> props, Rng& rng) const {
  check_config_props(props, class_names_.size(), ErrorCode::InvalidProps);
  if (props.empty()) return sample(n, rng);
  std::discrete_distribution<std::size_t> pick(props.begin(), props.end());
  const std::size_t d = cfg_.n_features;
  const std::size_t width = d + cfg_.n_noise_features;
  std::normal_distribution<double> normal;

  SynthSample s;
  s.features.feature_names = feature_names_;
  s.features.values.resize(n * width);
  s.labels.reserve(n);
  s.label_index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng);
    s.label_index.push_back(k);
    s.labels.push_back(class_names_[k]);
    double* row = s.features.values.data() + i * width;
    const double* mean = means_.data() + k * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = mean[j] + normal(rng);
    for (std::size_t j = d; j < width; ++j) row[j] = normal(rng);
  }
  return s;
}

SynthSample SynthGenerator::sample_counts(std::span<const std::size_t> counts, Rng& rng) const {
  if (counts.size() != class_names_.size()) {
    throw Error(ErrorCode::InvalidProps, "class count vector has the wrong length");
  }
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  const std::size_t d = cfg_.n_features;
  const std::size_t width = d + cfg_.n_noise_features;
  std::normal_distribution<double> normal;
  SynthSample s;
  s.features.feature_names = feature_names_;
  s.features.values.resize(n * width);
  std::size_t i = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t c = 0; c < counts[k]; ++c, ++i) {
      s.label_index.push_back(k);
      s.labels.push_back(class_names_[k]);
      double* row = s.features.values.data() + i * width;
      const double* mean = means_.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) row[j] = mean[j] + normal(rng);
      for (std::size_t j = d; j < width; ++j) row[j] = normal(rng);
    }
  }
  return s;
}

SynthSample generate(const SynthConfig& cfg, std::size_t n) {
  const SynthGenerator gen(cfg);
  Rng rng = make_rng(cfg.seed, 1);
  return gen.sample(n, rng);
}

SynthConfig shift_props(const SynthConfig& cfg, std::span<const double> target) {
  const SynthGenerator gen(cfg);
  if (target.empty()) throw Error(ErrorCode::InvalidProps, "target proportions are empty");
  check_config_props(target, gen.class_names().size(), ErrorCode::InvalidProps);
  SynthConfig out = cfg;
  out.class_props.assign(target.begin(), target.end());
  return out;
}

}  // namespace hiconform
