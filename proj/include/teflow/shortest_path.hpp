#pragma once

#include <algorithm>
#include <queue>
#include <vector>

#include "teflow/common.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

// Effective arc costs: base cost plus a nonnegative dual price per arc.
using CostVector = std::vector<double>;

inline CostVector make_costs(const TimeExpandedGraph& g, const std::vector<double>* prices = nullptr) {
  CostVector c(g.arcs.size());
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    c[a] = g.arcs[a].cost + (prices ? (*prices)[a] : 0.0);
  return c;
}

struct PathTree {
  int origin = -1;
  std::vector<double> dist;      // kInf where unreachable
  std::vector<int> parent_arc;   // -1 at the origin and unreachable nodes
};

enum class SpBackend { Dijkstra, DagRelaxation };

/// Label-setting shortest-path tree from `origin` under the given costs.
/// Ties are broken toward the smaller arc index, so trees are deterministic.
inline PathTree shortest_tree(const TimeExpandedGraph& g, const CostVector& costs, int origin,
                              SpBackend backend = SpBackend::Dijkstra) {
  if (costs.size() != g.arcs.size()) fail("cost vector size mismatch");
  for (double c : costs)
    if (c < 0 || std::isnan(c)) fail("negative cost entry");

  PathTree tree;
  tree.origin = origin;
  tree.dist.assign(g.nodes.size(), kInf);
  tree.parent_arc.assign(g.nodes.size(), -1);
  tree.dist[origin] = 0.0;

  auto relax = [&](int a) {
    const TEArc& arc = g.arcs[a];
    if (tree.dist[arc.tail] == kInf) return false;
    double cand = tree.dist[arc.tail] + costs[a];
    if (cand == kInf) return false;  // masked arc (availability filters use cost = inf)
    if (cand < tree.dist[arc.head] ||
        (cand == tree.dist[arc.head] && tree.parent_arc[arc.head] > a)) {
      tree.dist[arc.head] = cand;
      tree.parent_arc[arc.head] = a;
      return true;
    }
    return false;
  };

  if (backend == SpBackend::DagRelaxation) {
    // Arcs are sorted by tail and tail < head everywhere, so a single pass
    // in arc order relaxes every arc after its tail is final.
    for (int a = 0; a < static_cast<int>(g.arcs.size()); ++a) relax(a);
    return tree;
  }

  using Item = std::pair<double, int>;  // (dist, node)
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  heap.emplace(0.0, origin);
  std::vector<char> settled(g.nodes.size(), 0);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (settled[v] || d > tree.dist[v]) continue;
    settled[v] = 1;
    for (int i = g.out_offset[v]; i < g.out_offset[v + 1]; ++i) {
      int a = g.out_arc[i];
      if (relax(a)) heap.emplace(tree.dist[g.arcs[a].head], g.arcs[a].head);
    }
  }
  return tree;
}

/// Arc sequence origin -> dest; throws if dest is unreachable.
inline std::vector<int> extract_path(const TimeExpandedGraph& g, const PathTree& tree, int dest) {
  if (tree.dist[dest] == kInf) fail("destination unreachable from origin in path extraction");
  std::vector<int> arcs;
  int v = dest;
  while (v != tree.origin) {
    int a = tree.parent_arc[v];
    if (a < 0) fail("internal: broken parent chain in path tree");
    arcs.push_back(a);
    v = g.arcs[a].tail;
  }
  std::reverse(arcs.begin(), arcs.end());
  return arcs;
}

inline double path_cost(const CostVector& costs, const std::vector<int>& arcs) {
  double s = 0;
  for (int a : arcs) s += costs[a];
  return s;
}

}  // namespace teflow
