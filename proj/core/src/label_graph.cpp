#include "hiconform/label_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <set>

#include "hiconform/error.hpp"

namespace hiconform {

namespace {

constexpr std::size_t kNpos = std::numeric_limits<std::size_t>::max();
constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

void merge_into(NodeSet& dst, const NodeSet& src) {
  NodeSet out;
  out.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
  dst = std::move(out);
}

}  // namespace

LabelGraph LabelGraph::build(std::span<const Edge> edges) {
  if (edges.empty()) throw Error(ErrorCode::EmptyInput, "edge list is empty");

  LabelGraph g;
  auto intern = [&g](const std::string& name) -> NodeId {
    if (name.empty()) throw Error(ErrorCode::EmptyInput, "empty node identifier");
    auto [it, inserted] = g.index_.try_emplace(name, static_cast<NodeId>(g.names_.size()));
    if (inserted) {
      g.names_.push_back(name);
      g.parents_.emplace_back();
      g.children_.emplace_back();
    }
    return it->second;
  };

  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& [parent, child] : edges) {
    const NodeId p = intern(parent);
    const NodeId c = intern(child);
    if (!seen.emplace(p, c).second) continue;
    g.children_[p].push_back(c);
    g.parents_[c].push_back(p);
    g.edges_.emplace_back(parent, child);
  }

  std::vector<NodeId> roots;
  for (NodeId v = 0; v < g.names_.size(); ++v) {
    if (g.parents_[v].empty()) roots.push_back(v);
  }

  // Kahn's algorithm; anything left over sits on a cycle.
  {
    const std::size_t n = g.names_.size();
    std::vector<std::size_t> indegree(n);
    for (NodeId v = 0; v < n; ++v) indegree[v] = g.parents_[v].size();
    std::deque<NodeId> ready(roots.begin(), roots.end());
    while (!ready.empty()) {
      const NodeId v = ready.front();
      ready.pop_front();
      g.topo_.push_back(v);
      for (NodeId c : g.children_[v]) {
        if (--indegree[c] == 0) ready.push_back(c);
      }
    }
    if (g.topo_.size() != n) {
      for (NodeId v = 0; v < n; ++v) {
        if (indegree[v] > 0) {
          throw Error(ErrorCode::CycleDetected, "node '" + g.names_[v] + "' lies on a directed cycle");
        }
      }
    }
  }

  if (roots.size() == 1) {
    g.root_ = roots.front();
  } else {
    std::string name(kVirtualRootName);
    while (g.index_.contains(name)) name.insert(name.begin(), '_');
    const NodeId r = intern(name);
    for (NodeId old_root : roots) {
      g.children_[r].push_back(old_root);
      g.parents_[old_root].push_back(r);
    }
    g.root_ = r;
    g.virtual_root_ = true;
    g.topo_.insert(g.topo_.begin(), r);
  }

  const std::size_t n = g.names_.size();
  g.depth_.assign(n, 0);
  g.reflexive_ancestors_.assign(n, {});
  for (NodeId v : g.topo_) {
    NodeSet& anc = g.reflexive_ancestors_[v];
    for (NodeId p : g.parents_[v]) {
      g.depth_[v] = std::max(g.depth_[v], g.depth_[p] + 1);
      merge_into(anc, g.reflexive_ancestors_[p]);
    }
    anc.insert(std::lower_bound(anc.begin(), anc.end(), v), v);
  }

  g.leaf_position_.assign(n, kNpos);
  for (NodeId v = 0; v < n; ++v) {
    if (g.children_[v].empty()) g.leaves_.push_back(v);
  }
  for (std::size_t i = 0; i < g.leaves_.size(); ++i) g.leaf_position_[g.leaves_[i]] = i;

  g.leaf_descendants_.assign(n, {});
  for (auto it = g.topo_.rbegin(); it != g.topo_.rend(); ++it) {
    const NodeId v = *it;
    if (g.children_[v].empty()) {
      g.leaf_descendants_[v] = {v};
      continue;
    }
    for (NodeId c : g.children_[v]) merge_into(g.leaf_descendants_[v], g.leaf_descendants_[c]);
  }

  const std::size_t k = g.leaves_.size();
  g.leaf_distance_.assign(k * k, kUnreached);
  std::vector<std::uint32_t> dist(n);
  for (std::size_t i = 0; i < k; ++i) {
    std::fill(dist.begin(), dist.end(), kUnreached);
    std::deque<NodeId> queue{g.leaves_[i]};
    dist[g.leaves_[i]] = 0;
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      auto visit = [&](NodeId w) {
        if (dist[w] == kUnreached) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      };
      for (NodeId w : g.parents_[v]) visit(w);
      for (NodeId w : g.children_[v]) visit(w);
    }
    for (std::size_t j = 0; j < k; ++j) g.leaf_distance_[i * k + j] = dist[g.leaves_[j]];
  }

  for (auto& ps : g.parents_) std::sort(ps.begin(), ps.end());
  for (auto& cs : g.children_) std::sort(cs.begin(), cs.end());
  return g;
}

void LabelGraph::check(NodeId v) const {
  if (v >= names_.size()) {
    throw Error(ErrorCode::UnknownNode, "node id " + std::to_string(v) + " out of range");
  }
}

std::optional<NodeId> LabelGraph::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId LabelGraph::id(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw Error(ErrorCode::UnknownNode, "unknown node '" + std::string(name) + "'");
}

const std::string& LabelGraph::name(NodeId v) const {
  check(v);
  return names_[v];
}

bool LabelGraph::is_leaf(NodeId v) const {
  check(v);
  return leaf_position_[v] != kNpos;
}

std::span<const NodeId> LabelGraph::parents(NodeId v) const {
  check(v);
  return parents_[v];
}

std::span<const NodeId> LabelGraph::children(NodeId v) const {
  check(v);
  return children_[v];
}

std::size_t LabelGraph::depth(NodeId v) const {
  check(v);
  return depth_[v];
}

NodeSet LabelGraph::ancestors(NodeId v, bool reflexive) const {
  check(v);
  NodeSet out = reflexive_ancestors_[v];
  if (!reflexive) out.erase(std::lower_bound(out.begin(), out.end(), v));
  return out;
}

const NodeSet& LabelGraph::reflexive_ancestors(NodeId v) const {
  check(v);
  return reflexive_ancestors_[v];
}

NodeSet LabelGraph::descendants(NodeId v, bool reflexive) const {
  check(v);
  std::vector<char> seen(names_.size(), 0);
  std::vector<NodeId> stack{v};
  seen[v] = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId c : children_[u]) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  if (!reflexive) seen[v] = 0;
  NodeSet out;
  for (NodeId u = 0; u < names_.size(); ++u) {
    if (seen[u]) out.push_back(u);
  }
  return out;
}

const NodeSet& LabelGraph::leaf_descendants(NodeId v) const {
  check(v);
  return leaf_descendants_[v];
}

std::size_t LabelGraph::undirected_distance(NodeId u, NodeId v) const {
  check(u);
  check(v);
  if (u == v) return 0;
  const std::size_t iu = leaf_position_[u];
  const std::size_t iv = leaf_position_[v];
  if (iu != kNpos && iv != kNpos) return leaf_distance_[iu * leaves_.size() + iv];

  std::vector<std::uint32_t> dist(names_.size(), kUnreached);
  std::deque<NodeId> queue{u};
  dist[u] = 0;
  while (!queue.empty()) {
    const NodeId x = queue.front();
    queue.pop_front();
    for (const auto* adj : {&parents_[x], &children_[x]}) {
      for (NodeId w : *adj) {
        if (dist[w] != kUnreached) continue;
        dist[w] = dist[x] + 1;
        if (w == v) return dist[w];
        queue.push_back(w);
      }
    }
  }
  return dist[v];
}

std::vector<NodeId> LabelGraph::summarize_set(std::span<const NodeId> leaves) const {
  if (leaves.empty()) throw Error(ErrorCode::EmptySet, "cannot summarize an empty set");
  NodeSet target(leaves.begin(), leaves.end());
  std::sort(target.begin(), target.end());
  target.erase(std::unique(target.begin(), target.end()), target.end());
  for (NodeId v : target) {
    if (!is_leaf(v)) throw Error(ErrorCode::NotLeaves, "'" + names_[v] + "' is not a leaf");
  }

  // Prefer the most specific node among those sharing a leaf set.
  auto better = [this](NodeId a, NodeId b) {
    if (depth_[a] != depth_[b]) return depth_[a] > depth_[b];
    return names_[a] < names_[b];
  };

  std::vector<NodeId> inside;
  std::optional<NodeId> exact;
  for (NodeId v = 0; v < names_.size(); ++v) {
    const NodeSet& lv = leaf_descendants_[v];
    if (!std::includes(target.begin(), target.end(), lv.begin(), lv.end())) continue;
    if (lv.size() == target.size()) {
      if (!exact || better(v, *exact)) exact = v;
    }
    inside.push_back(v);
  }
  if (exact) return {*exact};

  // Nodes whose leaf set is maximal among those contained in the target.
  std::vector<NodeId> maximal;
  for (NodeId v : inside) {
    const NodeSet& lv = leaf_descendants_[v];
    bool dominated = false;
    for (NodeId u : inside) {
      const NodeSet& lu = leaf_descendants_[u];
      if (lu.size() > lv.size() && std::includes(lu.begin(), lu.end(), lv.begin(), lv.end())) {
        dominated = true;
        break;
      }
    }
    if (!dominated) maximal.push_back(v);
  }

  // One representative per distinct leaf set.
  std::sort(maximal.begin(), maximal.end(), [this, &better](NodeId a, NodeId b) {
    if (leaf_descendants_[a] != leaf_descendants_[b]) {
      return leaf_descendants_[a] < leaf_descendants_[b];
    }
    return better(a, b);
  });
  maximal.erase(std::unique(maximal.begin(), maximal.end(),
                            [this](NodeId a, NodeId b) {
                              return leaf_descendants_[a] == leaf_descendants_[b];
                            }),
                maximal.end());

  std::sort(maximal.begin(), maximal.end(), [this](NodeId a, NodeId b) {
    if (leaf_descendants_[a].size() != leaf_descendants_[b].size()) {
      return leaf_descendants_[a].size() > leaf_descendants_[b].size();
    }
    return names_[a] < names_[b];
  });

  // Drop members already covered by the others, smallest first.
  std::vector<char> keep(maximal.size(), 1);
  for (std::size_t i = maximal.size(); i-- > 0;) {
    NodeSet others;
    for (std::size_t j = 0; j < maximal.size(); ++j) {
      if (j != i && keep[j]) merge_into(others, leaf_descendants_[maximal[j]]);
    }
    const NodeSet& li = leaf_descendants_[maximal[i]];
    if (std::includes(others.begin(), others.end(), li.begin(), li.end())) keep[i] = 0;
  }
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < maximal.size(); ++i) {
    if (keep[i]) out.push_back(maximal[i]);
  }
  return out;
}

std::vector<Edge> read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty() || view.front() == '#') continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos || view.find('\t', tab + 1) != std::string_view::npos) {
      throw Error(ErrorCode::ParseError,
                  "edge list line " + std::to_string(lineno) + ": expected parent<TAB>child");
    }
    const auto parent = trim(view.substr(0, tab));
    const auto child = trim(view.substr(tab + 1));
    if (parent.empty() || child.empty()) {
      throw Error(ErrorCode::ParseError,
                  "edge list line " + std::to_string(lineno) + ": empty identifier");
    }
    edges.emplace_back(std::string(parent), std::string(child));
  }
  return edges;
}

LabelGraph load_label_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open edge list " + path.string());
  const auto edges = read_edge_list(in);
  return LabelGraph::build(edges);
}

std::vector<std::string> node_names(const LabelGraph& g, std::span<const NodeId> nodes) {
  std::vector<std::string> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) out.push_back(g.name(v));
  return out;
}

}  // namespace hiconform
