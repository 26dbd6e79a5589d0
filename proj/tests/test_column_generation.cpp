#include <gtest/gtest.h>

#include <random>

#include "support/test_support.hpp"
#include "teflow/column_generation.hpp"
#include "teflow/lp.hpp"
#include "teflow/toy_instance.hpp"

using namespace teflow;
using namespace teflow::testing;

namespace {

std::vector<int> path_arcs(const TimeExpandedGraph& g, std::initializer_list<std::pair<int, int>> hops) {
  std::vector<int> arcs;
  for (auto [t, h] : hops)
    for (int a = 0; a < static_cast<int>(g.arcs.size()); ++a)
      if (g.arcs[a].tail == t && g.arcs[a].head == h) {
        arcs.push_back(a);
        break;
      }
  return arcs;
}

// The spec's pricing walk-through: a master holding only the cost-5 path has
// sigma = 5 and zero prices, so the cost-3 path prices out at -2.
TEST(RestrictedMaster, PricingExample) {
  TimeExpandedGraph g = parallel_paths_instance();
  CGOptions opt;
  cg_detail::RestrictedMaster master(g, opt);
  auto path_b = path_arcs(g, {{0, 2}, {2, 3}});
  master.add_path_column(0, path_b, 5.0);
  master.solve();
  EXPECT_NEAR(master.sigma(0), 5.0, 1e-9);
  for (std::size_t a = 0; a < g.arcs.size(); ++a) EXPECT_DOUBLE_EQ(master.arc_price(a), 0.0);
  auto path_a = path_arcs(g, {{0, 1}, {1, 3}});
  double reduced = (3.0 + 0.0) - master.sigma(0);
  EXPECT_NEAR(reduced, -2.0, 1e-9);
  EXPECT_FALSE(master.has_path(0, path_a));
  EXPECT_TRUE(master.has_path(0, path_b));
}

TEST(RestrictedMaster, SinglePathMaster) {
  TimeExpandedGraph g = parallel_paths_instance();
  CGOptions opt;
  cg_detail::RestrictedMaster master(g, opt);
  master.add_path_column(0, path_arcs(g, {{0, 2}, {2, 3}}), 5.0);
  master.solve();
  double flow = 0;
  for (const auto& c : master.columns())
    if (c.type == cg_detail::RestrictedMaster::ColType::Path) flow = c.flow;
  EXPECT_NEAR(flow, 2.0, 1e-12);          // x_p = d
  EXPECT_NEAR(master.sigma(0), 5.0, 1e-12);  // sigma = T_p
}

TEST(RestrictedMaster, BothPathsKktPoint) {
  TimeExpandedGraph g = parallel_paths_instance();
  CGOptions opt;
  cg_detail::RestrictedMaster master(g, opt);
  master.add_path_column(0, path_arcs(g, {{0, 1}, {1, 3}}), 3.0);
  master.add_path_column(0, path_arcs(g, {{0, 2}, {2, 3}}), 5.0);
  master.solve();
  double fa = -1, fb = -1;
  for (const auto& c : master.columns()) {
    if (c.type != cg_detail::RestrictedMaster::ColType::Path) continue;
    (c.cost == 3.0 ? fa : fb) = c.flow;
  }
  EXPECT_NEAR(fa, 1.0, 1e-12);
  EXPECT_NEAR(fb, 1.0, 1e-12);
  EXPECT_NEAR(master.sigma(0), 5.0, 1e-12);
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    if (!is_inf(g.arcs[a].capacity)) EXPECT_NEAR(master.arc_price(a), 2.0, 1e-12);
  EXPECT_NEAR(master.objective(false), 8.0, 1e-12);
}

TEST(RestrictedMaster, DegenerateTieIsDeterministic) {
  // two identical-cost routes; the anti-cycling rule must settle identically
  TimeExpandedGraph g = make_te_graph(4,
                                      {{0, 1, 4.0, 1.0, ArcKind::Junction},
                                       {1, 3, 0.0, kInf},
                                       {0, 2, 4.0, 1.0, ArcKind::Junction},
                                       {2, 3, 0.0, kInf}},
                                      {{0, 3, 1.0}});
  Solution a = solve_column_generation(g);
  Solution b = solve_column_generation(g);
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_EQ(a.paths.size(), b.paths.size());
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    EXPECT_EQ(a.paths[i].arcs, b.paths[i].arcs);
    EXPECT_DOUBLE_EQ(a.paths[i].flow, b.paths[i].flow);
  }
  EXPECT_NEAR(a.objective, 4.0, 1e-12);
}

TEST(ColumnGeneration, ParallelPathsExact) {
  TimeExpandedGraph g = parallel_paths_instance();
  Solution sol = solve_column_generation(g);
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.objective, 8.0, 1e-12);
  ASSERT_EQ(sol.paths.size(), 2u);
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    if (!is_inf(g.arcs[a].capacity)) {
      EXPECT_NEAR(sol.arc_flow[a], 1.0, 1e-12);
      EXPECT_NEAR(sol.arc_dual[a], 2.0, 1e-12);
    }
  EXPECT_NEAR(sol.dual_value, 8.0, 1e-9);
  EXPECT_NEAR(sol.duality_gap, 0.0, 1e-9);
}

TEST(ColumnGeneration, ZeroDemands) {
  TimeExpandedGraph g = make_te_graph(2, {{0, 1, 1.0, kInf}}, {});
  Solution sol = solve_column_generation(g);
  EXPECT_TRUE(sol.converged);
  EXPECT_TRUE(sol.paths.empty());
  EXPECT_DOUBLE_EQ(sol.objective, 0.0);
}

TEST(ColumnGeneration, InfeasibleSignalledByArtificials) {
  TimeExpandedGraph g = make_te_graph(
      3, {{0, 1, 1.0, 0.5, ArcKind::Junction}, {1, 2, 1.0, 0.5, ArcKind::Junction}}, {{0, 2, 2.0}});
  Solution sol = solve_column_generation(g);
  EXPECT_FALSE(sol.converged);
  EXPECT_NE(sol.diagnosis.find("infeasible"), std::string::npos);
}

TEST(ColumnGeneration, AgreesWithDenseSimplexOnRandomCorpus) {
  std::mt19937 rng(61);
  int feasible = 0;
  for (int it = 0; it < 25; ++it) {
    auto inst = random_instance(rng);
    SimplexResult oracle = dense_simplex(build_link_lp(inst.graph).lp);
    Solution sol = solve_column_generation(inst.graph);
    if (oracle.status == SimplexResult::Status::Infeasible) {
      EXPECT_FALSE(sol.converged);
      continue;
    }
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.objective, oracle.objective, 1e-9 * std::max(1.0, std::abs(oracle.objective)));
    ++feasible;
  }
  EXPECT_GE(feasible, 10);
}

// At termination every used path of a demand has the same price-adjusted
// cost, equal to the shortest adjusted cost.
TEST(ColumnGeneration, AdjustedCostEqualization) {
  std::mt19937 rng(67);
  for (int it = 0; it < 10; ++it) {
    auto inst = random_instance(rng);
    Solution sol = solve_column_generation(inst.graph);
    if (!sol.converged) continue;
    const TimeExpandedGraph& g = inst.graph;
    CostVector adjusted = make_costs(g, &sol.arc_dual);
    std::map<int, PathTree> trees;
    for (const PathFlow& p : sol.paths) {
      if (p.flow <= 1e-9) continue;
      const Commodity& c = g.commodities[p.commodity];
      auto [t, fresh] = trees.try_emplace(c.origin_node);
      if (fresh) t->second = shortest_tree(g, adjusted, c.origin_node);
      double mine = path_cost(adjusted, p.arcs);
      EXPECT_NEAR(mine, t->second.dist[c.sink_node], 1e-7) << "commodity " << p.commodity;
    }
  }
}

TEST(ColumnGeneration, MasterObjectiveNonincreasing) {
  BottleneckScenario s{300, 30, 20, 540, {2.0, 0.5}};
  ToyInstance toy = build_toy_instance(s, 1.0, 500, 570);
  IterationLog log;
  Solution sol = solve_column_generation(toy.graph, {}, &log);
  ASSERT_TRUE(sol.converged);
  for (std::size_t i = 1; i < log.size(); ++i)
    EXPECT_LE(log[i].primal, log[i - 1].primal + 1e-7 * std::max(1.0, std::abs(log[i - 1].primal)));
}

TEST(ColumnGeneration, RowPruningInvariance) {
  std::mt19937 rng(71);
  for (int it = 0; it < 8; ++it) {
    auto inst = random_instance(rng);
    CGOptions pruned, full;
    full.prune_rows = false;
    Solution a = solve_column_generation(inst.graph, pruned);
    Solution b = solve_column_generation(inst.graph, full);
    ASSERT_EQ(a.converged, b.converged);
    if (a.converged)
      EXPECT_NEAR(a.objective, b.objective, 1e-9 * std::max(1.0, std::abs(a.objective)));
  }
}

TEST(ColumnGeneration, PathsCoverDemandsExactly) {
  std::mt19937 rng(73);
  for (int it = 0; it < 6; ++it) {
    auto inst = random_instance(rng);
    Solution sol = solve_column_generation(inst.graph);
    if (!sol.converged) continue;
    std::vector<double> shipped(inst.graph.commodities.size(), 0.0);
    for (const PathFlow& p : sol.paths) shipped[p.commodity] += p.flow;
    for (std::size_t k = 0; k < shipped.size(); ++k)
      EXPECT_NEAR(shipped[k], inst.graph.commodities[k].volume, 1e-9);
  }
}

}  // namespace
