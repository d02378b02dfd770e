#include "hiconform/label_graph.hpp"

#include <gtest/gtest.h>

#include <queue>
#include <sstream>

#include "hiconform/error.hpp"
#include "test_support.hpp"

namespace hiconform {
namespace {

LabelGraph fan() {
  const std::vector<Edge> e{{"a", "b"}, {"a", "c"}};
  return LabelGraph::build(e);
}

NodeSet ids(const LabelGraph& g, std::initializer_list<const char*> names) {
  NodeSet out;
  for (const char* n : names) out.push_back(g.id(n));
  std::sort(out.begin(), out.end());
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ParseError;
}

TEST(LabelGraph, TwoLeafFan) {
  const auto g = fan();
  EXPECT_EQ(g.name(g.root()), "a");
  EXPECT_FALSE(g.has_virtual_root());
  EXPECT_EQ(g.leaves(), ids(g, {"b", "c"}));
  EXPECT_TRUE(g.is_leaf(g.id("b")));
  EXPECT_FALSE(g.is_leaf(g.id("a")));
}

TEST(LabelGraph, CycleRejected) {
  const std::vector<Edge> e{{"a", "b"}, {"b", "a"}};
  EXPECT_EQ(code_of([&] { LabelGraph::build(e); }), ErrorCode::CycleDetected);
  const std::vector<Edge> self{{"a", "a"}};
  EXPECT_EQ(code_of([&] { LabelGraph::build(self); }), ErrorCode::CycleDetected);
  const std::vector<Edge> longer{{"r", "a"}, {"a", "b"}, {"b", "c"}, {"c", "a"}};
  EXPECT_EQ(code_of([&] { LabelGraph::build(longer); }), ErrorCode::CycleDetected);
}

TEST(LabelGraph, EmptyInputRejected) {
  EXPECT_EQ(code_of([] { LabelGraph::build({}); }), ErrorCode::EmptyInput);
  const std::vector<Edge> blank{{"", "b"}};
  EXPECT_EQ(code_of([&] { LabelGraph::build(blank); }), ErrorCode::EmptyInput);
}

TEST(LabelGraph, DuplicateEdgesDropped) {
  const std::vector<Edge> e{{"a", "b"}, {"a", "c"}, {"a", "b"}};
  const auto g = LabelGraph::build(e);
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(g.children(g.id("a")).size(), 2u);
}

TEST(LabelGraph, VirtualRootAddedForForests) {
  const std::vector<Edge> e{{"a", "b"}, {"c", "d"}};
  const auto g = LabelGraph::build(e);
  ASSERT_TRUE(g.has_virtual_root());
  EXPECT_EQ(g.name(g.root()), LabelGraph::kVirtualRootName);
  EXPECT_EQ(g.leaf_descendants(g.root()), g.leaves());
  EXPECT_EQ(g.edges().size(), 2u);
}

TEST(LabelGraph, VirtualRootNameAvoidsCollision) {
  const std::vector<Edge> e{{"virtual_root", "b"}, {"c", "d"}};
  const auto g = LabelGraph::build(e);
  ASSERT_TRUE(g.has_virtual_root());
  EXPECT_NE(g.name(g.root()), "virtual_root");
  EXPECT_EQ(g.leaf_descendants(g.root()).size(), 2u);
}

TEST(LabelGraph, Ancestors) {
  const auto g = fan();
  EXPECT_EQ(g.ancestors("b", false), ids(g, {"a"}));
  EXPECT_EQ(g.ancestors("b", true), ids(g, {"a", "b"}));
  EXPECT_EQ(code_of([&] { g.ancestors("zzz", true); }), ErrorCode::UnknownNode);
}

TEST(LabelGraph, LeafDescendants) {
  const auto g = fan();
  EXPECT_EQ(g.leaf_descendants("a"), ids(g, {"b", "c"}));
  EXPECT_EQ(g.leaf_descendants("b"), ids(g, {"b"}));
  EXPECT_EQ(code_of([&] { g.leaf_descendants("q"); }), ErrorCode::UnknownNode);
}

TEST(LabelGraph, Distances) {
  const auto g = fan();
  EXPECT_EQ(g.undirected_distance("b", "b"), 0u);
  EXPECT_EQ(g.undirected_distance("b", "c"), 2u);
  EXPECT_EQ(g.undirected_distance("b", "a"), 1u);
  EXPECT_EQ(g.undirected_distance("a", "c"), 1u);
}

TEST(LabelGraph, DepthIsLongestPath) {
  const std::vector<Edge> e{{"r", "x"}, {"x", "y"}, {"y", "leaf"}, {"r", "leaf"}};
  const auto g = LabelGraph::build(e);
  EXPECT_EQ(g.depth(g.id("r")), 0u);
  EXPECT_EQ(g.depth(g.id("leaf")), 3u);
}

TEST(LabelGraph, SummarizeSingleNode) {
  const auto g = fan();
  EXPECT_EQ(node_names(g, g.summarize_set(ids(g, {"b"}))), std::vector<std::string>{"b"});
  EXPECT_EQ(node_names(g, g.summarize_set(ids(g, {"b", "c"}))), std::vector<std::string>{"a"});
}

TEST(LabelGraph, SummarizeMultiParentLeafGivesJointAncestors) {
  // A leaf under two ancestors, each with one more leaf of its own.
  const std::vector<Edge> e{{"B cell", "antibody secreting cell"},
                            {"B cell", "mature B cell"},
                            {"antibody secreting cell", "plasmablast"},
                            {"antibody secreting cell", "plasma cell"},
                            {"mature B cell", "plasmablast"},
                            {"mature B cell", "memory B cell"},
                            {"B cell", "naive B cell"}};
  const auto g = LabelGraph::build(e);
  const auto s = ids(g, {"plasmablast", "plasma cell", "memory B cell"});
  auto names = node_names(g, g.summarize_set(s));
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"antibody secreting cell", "mature B cell"}));
}

TEST(LabelGraph, SummarizeErrors) {
  const auto g = fan();
  EXPECT_EQ(code_of([&] { g.summarize_set({}); }), ErrorCode::EmptySet);
  const NodeSet internal{g.id("a")};
  EXPECT_EQ(code_of([&] { g.summarize_set(internal); }), ErrorCode::NotLeaves);
}

TEST(LabelGraph, ReadEdgeList) {
  std::istringstream in("\xEF\xBB\xBF# comment\n\na\tb\r\na\tc\n");
  const auto edges = read_edge_list(in);
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0], (Edge{"a", "b"}));
  std::istringstream bad("a b\n");
  EXPECT_EQ(code_of([&] { read_edge_list(bad); }), ErrorCode::ParseError);
}

TEST(LabelGraph, IleumOntologyHasFifteenCellTypes) {
  const auto g = load_label_graph(HICONFORM_DATA_DIR "/mouse_ileum.tsv");
  const std::set<std::string> expected{"B cell",   "Endothelial", "Enterocyte",      "Goblet",
                                       "ICC",      "Macrophage + DC", "Paneth",      "Pericyte",
                                       "Smooth Muscle", "Stem + TA",   "Stromal",     "T (CD4+)",
                                       "T (CD8+)", "Telocyte",    "Tuft"};
  std::set<std::string> leaves;
  for (NodeId v : g.leaves()) leaves.insert(g.name(v));
  EXPECT_EQ(leaves, expected);
  EXPECT_EQ(g.name(g.root()), "cell");
}

TEST(LabelGraph, EnterocyteAncestorsInEpithelialBranch) {
  const auto g = load_label_graph(HICONFORM_DATA_DIR "/epithelial_subontology.tsv");
  const auto anc = node_names(g, g.ancestors("Enterocyte", false));
  const std::set<std::string> got(anc.begin(), anc.end());
  EXPECT_EQ(got, (std::set<std::string>{"epithelial intestinal cell", "columnar epithelial cell",
                                        "epithelial cell"}));
}

// Property tests over random DAGs.

std::size_t bfs_distance(const std::vector<Edge>& edges, const std::string& s, const std::string& t) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [p, c] : edges) {
    adj[p].push_back(c);
    adj[c].push_back(p);
  }
  std::map<std::string, std::size_t> dist{{s, 0}};
  std::queue<std::string> q;
  q.push(s);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    if (u == t) return dist[u];
    for (const auto& w : adj[u]) {
      if (!dist.count(w)) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
    }
  }
  return std::numeric_limits<std::size_t>::max();
}

class RandomDag : public ::testing::TestWithParam<int> {};

TEST_P(RandomDag, StructuralInvariants) {
  Rng rng = make_rng(1234, static_cast<std::uint64_t>(GetParam()));
  const auto edges = testing::random_dag(rng, 12, 10);
  const auto g = LabelGraph::build(edges);
  const testing::BruteForceSets bf(edges, {});

  // Topological order puts every parent before its children.
  std::vector<std::size_t> pos(g.node_count());
  const auto topo = g.topological_order();
  ASSERT_EQ(topo.size(), g.node_count());
  for (std::size_t i = 0; i < topo.size(); ++i) pos[topo[i]] = i;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    for (NodeId c : g.children(v)) EXPECT_LT(pos[v], pos[c]);
    EXPECT_EQ(g.is_leaf(v), g.children(v).empty());
  }
  EXPECT_EQ(g.leaf_descendants(g.root()), g.leaves());

  for (NodeId v = 0; v < g.node_count(); ++v) {
    // Leaf sets shrink down the ancestry.
    const auto& lv = g.leaf_descendants(v);
    for (NodeId u : g.ancestors(v, false)) {
      const auto& lu = g.leaf_descendants(u);
      EXPECT_TRUE(std::includes(lu.begin(), lu.end(), lv.begin(), lv.end()));
    }
    // Leaf sets agree with an independent search.
    const auto expected = bf.leaves_under(g.name(v));
    const auto got = node_names(g, lv);
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), expected);
  }
}

TEST_P(RandomDag, DistanceIsAMetric) {
  Rng rng = make_rng(99, static_cast<std::uint64_t>(GetParam()));
  const auto edges = testing::random_dag(rng, 20, 25);
  const auto g = LabelGraph::build(edges);
  std::vector<Edge> with_root = edges;
  if (g.has_virtual_root()) {
    for (NodeId r : g.children(g.root())) with_root.emplace_back(g.name(g.root()), g.name(r));
  }
  const auto n = static_cast<NodeId>(g.node_count());
  for (NodeId u = 0; u < n; ++u) {
    EXPECT_EQ(g.undirected_distance(u, u), 0u);
    for (NodeId v = 0; v < n; ++v) {
      const auto d = g.undirected_distance(u, v);
      EXPECT_EQ(d, g.undirected_distance(v, u));
      EXPECT_EQ(d, bfs_distance(with_root, g.name(u), g.name(v)));
      if (u != v) EXPECT_GT(d, 0u);
      for (NodeId w = 0; w < n; w += 3) {
        EXPECT_LE(d, g.undirected_distance(u, w) + g.undirected_distance(w, v));
      }
    }
  }
}

TEST_P(RandomDag, SummaryCoversInput) {
  Rng rng = make_rng(7, static_cast<std::uint64_t>(GetParam()));
  const auto edges = testing::random_dag(rng, 10, 8);
  const auto g = LabelGraph::build(edges);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 20; ++rep) {
    NodeSet s;
    for (NodeId leaf : g.leaves()) {
      if (coin(rng)) s.push_back(leaf);
    }
    if (s.empty()) s.push_back(g.leaves().front());
    const auto summary = g.summarize_set(s);
    ASSERT_FALSE(summary.empty());
    std::set<NodeId> covered;
    for (NodeId v : summary) covered.insert(g.leaf_descendants(v).begin(), g.leaf_descendants(v).end());
    // Every leaf is its own node, so a union of inner nodes can always hit s exactly.
    EXPECT_EQ(NodeSet(covered.begin(), covered.end()), s);
    bool exact_exists = false;
    for (NodeId v = 0; v < g.node_count(); ++v) exact_exists |= g.leaf_descendants(v) == s;
    if (exact_exists) {
      ASSERT_EQ(summary.size(), 1u);
      EXPECT_EQ(g.leaf_descendants(summary[0]), s);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomDag, ::testing::Range(0, 40));

}  // namespace
}  // namespace hiconform
