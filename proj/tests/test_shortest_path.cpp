#include <gtest/gtest.h>

#include <random>

#include "support/test_support.hpp"
#include "teflow/shortest_path.hpp"
#include "teflow/solution.hpp"

using namespace teflow;
using namespace teflow::testing;

namespace {

TEST(ShortestTree, PicksCheaperParallelPath) {
  TimeExpandedGraph g = parallel_paths_instance();
  PathTree tree = shortest_tree(g, make_costs(g), 0);
  EXPECT_DOUBLE_EQ(tree.dist[3], 3.0);
  auto path = extract_path(g, tree, 3);
  ASSERT_EQ(path.size(), 2u);
  EXPECT_DOUBLE_EQ(g.arcs[path[0]].cost, 3.0);
}

TEST(ShortestTree, DualPriceTieBreaksByArcIndex) {
  TimeExpandedGraph g = parallel_paths_instance();
  std::vector<double> prices(g.arcs.size(), 0.0);
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    if (!is_inf(g.arcs[a].capacity)) prices[a] = 2.0;  // capacitated arc now ties
  PathTree tree = shortest_tree(g, make_costs(g, &prices), 0);
  EXPECT_DOUBLE_EQ(tree.dist[3], 5.0);
  // both routes cost 5; the parent at the sink must be the smaller arc index
  int parent = tree.parent_arc[3];
  int alt = -1;
  for (int i = g.in_offset[3]; i < g.in_offset[3 + 1]; ++i)
    if (g.in_arc[i] != parent) alt = g.in_arc[i];
  double via_parent = tree.dist[g.arcs[parent].tail] + g.arcs[parent].cost + prices[parent];
  double via_alt = tree.dist[g.arcs[alt].tail] + g.arcs[alt].cost + prices[alt];
  EXPECT_DOUBLE_EQ(via_parent, via_alt);
  EXPECT_LT(parent, alt);
}

TEST(ShortestTree, IsolatedOrigin) {
  TimeExpandedGraph g = make_te_graph(3, {{1, 2, 1.0, kInf}}, {{0, 2, 1.0}});
  PathTree tree = shortest_tree(g, make_costs(g), 0);
  EXPECT_DOUBLE_EQ(tree.dist[0], 0.0);
  EXPECT_EQ(tree.dist[1], kInf);
  EXPECT_EQ(tree.dist[2], kInf);
}

TEST(ShortestTree, NegativeCostRejected) {
  TimeExpandedGraph g = parallel_paths_instance();
  CostVector costs = make_costs(g);
  costs[0] = -0.5;
  EXPECT_THROW(shortest_tree(g, costs, 0), Error);
}

TEST(ExtractPath, ChainAndIdentity) {
  TimeExpandedGraph g = make_te_graph(3, {{0, 1, 2.0, kInf}, {1, 2, 3.0, kInf}}, {{0, 2, 1.0}});
  PathTree tree = shortest_tree(g, make_costs(g), 0);
  auto path = extract_path(g, tree, 2);
  ASSERT_EQ(path.size(), 2u);
  EXPECT_EQ(g.arcs[path[0]].tail, 0);
  EXPECT_EQ(g.arcs[path[1]].head, 2);
  EXPECT_TRUE(extract_path(g, tree, 0).empty());
  EXPECT_THROW(extract_path(g, shortest_tree(g, make_costs(g), 1), 0), Error);
}

TEST(ExtractPath, CostMatchesLabel) {
  std::mt19937 rng(23);
  for (int it = 0; it < 5; ++it) {
    auto inst = random_instance(rng);
    const TimeExpandedGraph& g = inst.graph;
    CostVector costs = make_costs(g);
    for (const Commodity& c : g.commodities) {
      PathTree tree = shortest_tree(g, costs, c.origin_node);
      if (tree.dist[c.sink_node] == kInf) continue;
      auto path = extract_path(g, tree, c.sink_node);
      EXPECT_NEAR(path_cost(costs, path), tree.dist[c.sink_node], 1e-12);
    }
  }
}

// Exactness against exhaustive path enumeration on small random DAGs.
TEST(ShortestTree, MatchesBruteForceEnumeration) {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    int n = 5 + static_cast<int>(u(rng) * 5);  // 5..9 nodes
    std::vector<TinyArc> arcs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(rng) < 0.45) arcs.push_back({i, j, std::floor(u(rng) * 10) / 2.0, kInf});
    if (arcs.empty()) continue;
    TimeExpandedGraph g = make_te_graph(n, arcs, {{0, n - 1, 1.0}});
    CostVector costs = make_costs(g);
    PathTree tree = shortest_tree(g, costs, 0);
    for (int v = 0; v < n; ++v) {
      double brute = v == 0 ? 0.0 : brute_shortest(g, costs, 0, v);
      if (brute == kInf)
        EXPECT_EQ(tree.dist[v], kInf);
      else
        EXPECT_NEAR(tree.dist[v], brute, 1e-12);
    }
  }
}

// Raising any price never lowers any label.
TEST(ShortestTree, MonotoneUnderPriceIncrease) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto inst = random_instance(rng);
  const TimeExpandedGraph& g = inst.graph;
  std::vector<double> prices(g.arcs.size(), 0.0);
  int origin = g.commodities[0].origin_node;
  PathTree base = shortest_tree(g, make_costs(g, &prices), origin);
  for (int trial = 0; trial < 20; ++trial) {
    int a = static_cast<int>(u(rng) * g.arcs.size());
    prices[a] += u(rng) * 3.0;
    PathTree bumped = shortest_tree(g, make_costs(g, &prices), origin);
    for (std::size_t v = 0; v < g.nodes.size(); ++v)
      EXPECT_GE(bumped.dist[v] + 1e-12, base.dist[v]);
    base = std::move(bumped);
  }
}

// The DAG single-pass backend and Dijkstra agree exactly, parents included.
TEST(ShortestTree, BackendsAgree) {
  std::mt19937 rng(37);
  for (int it = 0; it < 8; ++it) {
    auto inst = random_instance(rng);
    const TimeExpandedGraph& g = inst.graph;
    std::vector<double> prices(g.arcs.size(), 0.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t a = 0; a < g.arcs.size(); ++a)
      if (u(rng) < 0.2) prices[a] = std::floor(u(rng) * 6) / 2.0;
    CostVector costs = make_costs(g, &prices);
    for (auto& [origin, commodities] : origin_groups(g)) {
      (void)commodities;
      PathTree a = shortest_tree(g, costs, origin, SpBackend::Dijkstra);
      PathTree b = shortest_tree(g, costs, origin, SpBackend::DagRelaxation);
      for (std::size_t v = 0; v < g.nodes.size(); ++v) {
        if (a.dist[v] == kInf) {
          EXPECT_EQ(b.dist[v], kInf);
          continue;
        }
        EXPECT_NEAR(a.dist[v], b.dist[v], 1e-12);
        EXPECT_EQ(a.parent_arc[v], b.parent_arc[v]) << "node " << v;
      }
    }
  }
}

}  // namespace
