#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hiconform {

using NodeId = std::uint32_t;

/// Sorted, duplicate-free list of node ids belonging to one LabelGraph.
using NodeSet = std::vector<NodeId>;

/// A directed parent -> child pair.
using Edge = std::pair<std::string, std::string>;

/// Immutable DAG over class labels.
///
/// Leaves (nodes without children) are the predictable classes. When the
/// input has more than one root a synthetic root is added above all of them,
/// so every query has a single connected component and the root's leaf set is
/// always the full leaf set. All queries are const and safe to call from many
/// threads.
class LabelGraph {
 public:
  static constexpr std::string_view kVirtualRootName = "virtual_root";

  /// Validates and freezes an edge list. Duplicate edges are dropped.
  /// Throws Error{EmptyInput} or Error{CycleDetected}.
  static LabelGraph build(std::span<const Edge> edges);

  std::size_t node_count() const noexcept { return names_.size(); }

  std::optional<NodeId> find(std::string_view name) const;
  /// Throws Error{UnknownNode}.
  NodeId id(std::string_view name) const;
  const std::string& name(NodeId v) const;

  NodeId root() const noexcept { return root_; }
  bool has_virtual_root() const noexcept { return virtual_root_; }
  bool is_leaf(NodeId v) const;
  const NodeSet& leaves() const noexcept { return leaves_; }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }

  std::span<const NodeId> parents(NodeId v) const;
  std::span<const NodeId> children(NodeId v) const;
  std::span<const NodeId> topological_order() const noexcept { return topo_; }

  /// Length of the longest directed path from the root.
  std::size_t depth(NodeId v) const;

  NodeSet ancestors(NodeId v, bool reflexive) const;
  /// Ancestors including v itself, without copying.
  const NodeSet& reflexive_ancestors(NodeId v) const;
  NodeSet descendants(NodeId v, bool reflexive) const;
  /// Leaves reachable from v; {v} when v is itself a leaf.
  const NodeSet& leaf_descendants(NodeId v) const;

  /// Shortest path length ignoring edge direction, unit weights.
  std::size_t undirected_distance(NodeId u, NodeId v) const;

  /// Names the smallest group of nodes whose leaf sets together cover exactly
  /// the given leaves. A single node is returned when one node's leaf set
  /// equals the input. Throws Error{EmptySet} or Error{NotLeaves}.
  std::vector<NodeId> summarize_set(std::span<const NodeId> leaves) const;

  NodeSet ancestors(std::string_view v, bool reflexive) const {
    return ancestors(id(v), reflexive);
  }
  const NodeSet& leaf_descendants(std::string_view v) const {
    return leaf_descendants(id(v));
  }
  std::size_t undirected_distance(std::string_view u, std::string_view v) const {
    return undirected_distance(id(u), id(v));
  }

  /// Deduplicated input edges, excluding edges to the virtual root.
  const std::vector<Edge>& edges() const noexcept { return edges_; }

 private:
  LabelGraph() = default;

  void check(NodeId v) const;

  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> topo_;
  std::vector<std::size_t> depth_;
  std::vector<NodeSet> reflexive_ancestors_;
  std::vector<NodeSet> leaf_descendants_;
  NodeSet leaves_;
  // Position of a node in leaves_, or npos for internal nodes.
  std::vector<std::size_t> leaf_position_;
  // Row-major leaf_count x leaf_count distance table.
  std::vector<std::uint32_t> leaf_distance_;
  std::vector<Edge> edges_;
  NodeId root_ = 0;
  bool virtual_root_ = false;
};

/// Parses `parent<TAB>child` lines. Blank lines and lines starting with `#`
/// are skipped. Throws Error{ParseError} on malformed lines.
std::vector<Edge> read_edge_list(std::istream& in);
LabelGraph load_label_graph(const std::filesystem::path& path);

std::vector<std::string> node_names(const LabelGraph& g, std::span<const NodeId> nodes);

}  // namespace hiconform
