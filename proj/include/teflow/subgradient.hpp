#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "teflow/audit.hpp"
#include "teflow/column_generation.hpp"  // IterationLog
#include "teflow/common.hpp"
#include "teflow/shortest_path.hpp"
#include "teflow/solution.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

enum class StepRule { SqrtK, Constant, Polyak };

struct SubgradOptions {
  int max_iter = 5000;
  double tol = 1e-3;  // relative duality-gap and capacity-violation target
  StepRule step_rule = StepRule::SqrtK;
  double eta0 = 0.0;  // 0 = calibrate from the first all-or-nothing assignment
  double polyak_target = std::numeric_limits<double>::quiet_NaN();
  double polyak_overshoot = 1e-4;  // relative target lift; keeps steps alive near the optimum
  bool average_tail_only = true;   // restart the ergodic average at powers of two
  bool repair = false;            // final scale-and-reroute pass to a feasible flow
  int threads = 1;
};

/// Lagrangian dual value at prices y: sum_k d_k SP_k(t+y) - sum_e y_e cap_e.
inline double subgradient_dual_value(const TimeExpandedGraph& g, const std::vector<double>& y) {
  CostVector costs = make_costs(g, &y);
  double value = 0;
  for (auto& [origin, commodity_ids] : origin_groups(g)) {
    PathTree tree = shortest_tree(g, costs, origin);
    for (int k : commodity_ids) {
      double d = tree.dist[g.commodities[k].sink_node];
      if (d == kInf) fail("demand unreachable while evaluating the dual");
      value += g.commodities[k].volume * d;
    }
  }
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    if (!is_inf(g.arcs[a].capacity)) value -= y[a] * g.arcs[a].capacity;
  return value;
}

namespace subgrad_detail {

// Weighted running average with an optional doubling restart: the reported
// average always spans at least the most recent half of the iterations.
struct ErgodicAverage {
  bool tail_only;
  double next_restart = 2;
  double w_prev = 0, w_cur = 0;
  std::vector<double> sum_prev, sum_cur;

  ErgodicAverage(std::size_t n, bool tail) : tail_only(tail), sum_prev(n, 0.0), sum_cur(n, 0.0) {}

  void add(const std::vector<double>& x, double weight, int k) {
    if (tail_only && k >= next_restart) {
      next_restart *= 2;
      sum_prev = sum_cur;
      w_prev = w_cur;
      std::fill(sum_cur.begin(), sum_cur.end(), 0.0);
      w_cur = 0;
    }
    for (std::size_t i = 0; i < x.size(); ++i) sum_cur[i] += weight * x[i];
    w_cur += weight;
  }

  std::vector<double> value() const {
    std::vector<double> out(sum_cur.size(), 0.0);
    double w = w_cur + (tail_only ? w_prev : 0.0);
    if (w <= 0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = sum_cur[i];
      if (tail_only) out[i] += sum_prev[i];
      out[i] /= w;
    }
    return out;
  }
};

// Upper bound on any feasible objective: route every demand along its most
// expensive simple path (longest path in the DAG). Any dual value beyond
// this certifies an empty feasible set.
inline double primal_upper_bound(const TimeExpandedGraph& g) {
  double ub = 0;
  for (auto& [origin, commodity_ids] : origin_groups(g)) {
    std::vector<double> longest(g.nodes.size(), -kInf);
    longest[origin] = 0;
    for (const TEArc& a : g.arcs)
      if (longest[a.tail] > -kInf)
        longest[a.head] = std::max(longest[a.head], longest[a.tail] + a.cost);
    for (int k : commodity_ids) {
      double d = longest[g.commodities[k].sink_node];
      if (d > -kInf) ub += g.commodities[k].volume * d;
    }
  }
  return ub;
}

}  // namespace subgrad_detail

/// Projected dual ascent on the capacity multipliers with all-or-nothing
/// primal assignments and ergodic primal averaging.
inline Solution solve_dual_subgradient(const TimeExpandedGraph& g, SubgradOptions opt = {},
                                       IterationLog* log = nullptr) {
  Solution sol;
  sol.method = "dual-subgradient";
  sol.arc_flow.assign(g.arcs.size(), 0.0);
  sol.arc_dual.assign(g.arcs.size(), 0.0);
  auto groups = origin_groups(g);
  for (auto& grp : groups) sol.origin_nodes.push_back(grp.first);

  if (g.commodities.empty()) {
    sol.converged = true;
    sol.iterations = 1;
    return sol;
  }

  const int n_arcs = static_cast<int>(g.arcs.size());
  const int G = static_cast<int>(groups.size());
  std::vector<double> y(n_arcs, 0.0);
  std::vector<char> capacitated(n_arcs, 0);
  for (int a = 0; a < n_arcs; ++a) capacitated[a] = !is_inf(g.arcs[a].capacity);

  subgrad_detail::ErgodicAverage avg(static_cast<std::size_t>(n_arcs) * (1 + G),
                                     opt.average_tail_only);
  std::vector<double> snapshot(static_cast<std::size_t>(n_arcs) * (1 + G), 0.0);

  const double infeasibility_bar = subgrad_detail::primal_upper_bound(g) + 1.0;
  double best_dual = -kInf;
  double eta0 = opt.eta0;
  double free_diameter = 0;

  std::vector<int> touched;
  std::vector<PathTree> trees(G);
  sol.converged = false;

  int k = 0;
  while (k < opt.max_iter) {
    ++k;
    // (1) all-or-nothing assignment under t + y
    CostVector costs = make_costs(g, &y);
    auto solve_group = [&](int i) { trees[i] = shortest_tree(g, costs, groups[i].first); };
    if (opt.threads > 1 && G > 1) {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      int n_threads = std::min(opt.threads, G);
      for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
          for (int i = next++; i < G; i = next++) solve_group(i);
        });
      for (auto& t : pool) t.join();
    } else {
      for (int i = 0; i < G; ++i) solve_group(i);
    }

    std::fill(snapshot.begin(), snapshot.end(), 0.0);
    double* aggregate = snapshot.data();
    double dual = 0;
    double diameter = 0;
    for (int i = 0; i < G; ++i) {
      double* mine = snapshot.data() + static_cast<std::size_t>(n_arcs) * (1 + i);
      for (int kk : groups[i].second) {
        const Commodity& c = g.commodities[kk];
        double dist = trees[i].dist[c.sink_node];
        if (dist == kInf) fail("demand unreachable during subgradient iteration");
        dual += c.volume * dist;
        diameter = std::max(diameter, dist);
        for (int v = c.sink_node; v != groups[i].first;) {
          int a = trees[i].parent_arc[v];
          mine[a] += c.volume;
          aggregate[a] += c.volume;
          v = g.arcs[a].tail;
        }
      }
    }
    for (int a = 0; a < n_arcs; ++a)
      if (capacitated[a] && y[a] > 0) dual -= y[a] * g.arcs[a].capacity;
    best_dual = std::max(best_dual, dual);

    if (best_dual > infeasibility_bar) {
      sol.diagnosis = concat(
          "infeasible: the dual bound ", best_dual, " exceeds every feasible objective (<= ",
          infeasibility_bar - 1.0, "); the demands cannot fit through the capacities in this horizon");
      break;
    }

    // (2) step size
    double excess_norm2 = 0, max_excess = 0;
    for (int a = 0; a < n_arcs; ++a) {
      if (!capacitated[a]) continue;
      if (aggregate[a] <= 0 && y[a] <= 0) continue;
      double e = aggregate[a] - g.arcs[a].capacity;
      excess_norm2 += e * e;
      max_excess = std::max(max_excess, e);
    }
    if (k == 1) {
      free_diameter = diameter;
      if (max_excess <= 0) {
        // uncapacitated shortest routing is feasible: it is the optimum
        avg.add(snapshot, 1.0, k);
        best_dual = dual;
        sol.converged = true;
        break;
      }
      if (eta0 <= 0) eta0 = std::max(1e-12, free_diameter / max_excess);
    }
    double eta = eta0;
    double avg_weight;
    switch (opt.step_rule) {
      case StepRule::SqrtK:
        eta = eta0 / std::sqrt(static_cast<double>(k));
        avg_weight = eta;
        break;
      case StepRule::Constant:
        avg_weight = eta;
        break;
      case StepRule::Polyak:
        if (!std::isnan(opt.polyak_target) && excess_norm2 > 0) {
          double target = opt.polyak_target +
                          opt.polyak_overshoot * std::max(1.0, std::abs(opt.polyak_target));
          eta = std::max(0.0, (target - dual) / excess_norm2);
        } else {
          eta = eta0 / std::sqrt(static_cast<double>(k));
        }
        // steps shrink near the optimum; uniform weights keep the average moving
        avg_weight = 1.0;
        break;
    }

    // (3) ergodic averaging
    avg.add(snapshot, std::max(avg_weight, 1e-300), k);

    // (4) projected multiplier update on touched arcs only
    for (int a = 0; a < n_arcs; ++a) {
      if (!capacitated[a]) continue;
      if (aggregate[a] <= 0 && y[a] <= 0) continue;
      y[a] = std::max(0.0, y[a] + eta * (aggregate[a] - g.arcs[a].capacity));
    }

    // (5) bookkeeping on the averaged primal
    std::vector<double> bar = avg.value();
    double primal = 0, max_rel_violation = 0;
    for (int a = 0; a < n_arcs; ++a) {
      primal += g.arcs[a].cost * bar[a];
      if (capacitated[a]) {
        double cap = g.arcs[a].capacity;
        double viol = bar[a] - cap;
        if (viol > 0) max_rel_violation = std::max(max_rel_violation, viol / std::max(cap, 1e-12));
      }
    }
    double gap = primal - best_dual;
    if (log) log->push_back({k, best_dual, primal, gap, max_rel_violation, eta});
    if (gap <= opt.tol * std::abs(best_dual) + 1e-12 && max_rel_violation <= opt.tol) {
      sol.converged = true;
      break;
    }
  }

  sol.iterations = k;
  std::vector<double> bar = avg.value();
  for (int a = 0; a < n_arcs; ++a) sol.arc_flow[a] = bar[a];
  sol.origin_arc_flow.assign(G, std::vector<double>(n_arcs, 0.0));
  for (int i = 0; i < G; ++i)
    for (int a = 0; a < n_arcs; ++a)
      sol.origin_arc_flow[i][a] = bar[static_cast<std::size_t>(n_arcs) * (1 + i) + a];
  sol.arc_dual = y;
  sol.dual_value = best_dual == -kInf ? 0.0 : best_dual;

  if (opt.repair && sol.diagnosis.empty()) {
    // Scale flows through violated arcs down to capacity, then reroute the
    // unserved remainder along cheapest paths with residual capacity.
    double shrink = 1.0;
    for (int a = 0; a < n_arcs; ++a)
      if (capacitated[a] && sol.arc_flow[a] > g.arcs[a].capacity)
        shrink = std::min(shrink, g.arcs[a].capacity / sol.arc_flow[a]);
    if (shrink < 1.0) {
      for (int i = 0; i < G; ++i) {
        std::vector<PathFlow> paths;
        try {
          paths = flow_decompose(sol.origin_arc_flow[i], groups[i].first, g, 1e-6);
        } catch (const Error& e) {
          sol.diagnosis = concat("repair failed: ", e.what());
          break;
        }
        std::fill(sol.origin_arc_flow[i].begin(), sol.origin_arc_flow[i].end(), 0.0);
        for (PathFlow& p : paths) {
          double keep = p.flow;
          for (int a : p.arcs)
            if (capacitated[a] && bar[a] > g.arcs[a].capacity)
              keep = std::min(keep, p.flow * g.arcs[a].capacity / bar[a]);
          for (int a : p.arcs) sol.origin_arc_flow[i][a] += keep;
        }
      }
      if (sol.diagnosis.empty()) {
        std::fill(sol.arc_flow.begin(), sol.arc_flow.end(), 0.0);
        for (int i = 0; i < G; ++i)
          for (int a = 0; a < n_arcs; ++a) sol.arc_flow[a] += sol.origin_arc_flow[i][a];
        // reroute per-commodity deficits over residual capacity
        for (int i = 0; i < G && sol.diagnosis.empty(); ++i) {
          for (int kk : groups[i].second) {
            const Commodity& c = g.commodities[kk];
            double shipped = 0;
            for (int idx = g.in_offset[c.sink_node]; idx < g.in_offset[c.sink_node + 1]; ++idx)
              shipped += sol.origin_arc_flow[i][g.in_arc[idx]];
            double deficit = c.volume - shipped;
            while (deficit > 1e-9) {
              CostVector residual_costs(g.arcs.size());
              for (int a = 0; a < n_arcs; ++a) {
                double residual = capacitated[a] ? g.arcs[a].capacity - sol.arc_flow[a] : kInf;
                residual_costs[a] = residual > 1e-12 ? g.arcs[a].cost : kInf;
              }
              PathTree tree = shortest_tree(g, residual_costs, groups[i].first);
              if (tree.dist[c.sink_node] == kInf) {
                sol.diagnosis = concat("repair failed: no residual path for commodity ", kk);
                break;
              }
              auto arcs = extract_path(g, tree, c.sink_node);
              double push = deficit;
              for (int a : arcs)
                if (capacitated[a]) push = std::min(push, g.arcs[a].capacity - sol.arc_flow[a]);
              if (push <= 1e-12) {
                sol.diagnosis = concat("repair failed: residual capacity exhausted for commodity ", kk);
                break;
              }
              for (int a : arcs) {
                sol.arc_flow[a] += push;
                sol.origin_arc_flow[i][a] += push;
              }
              deficit -= push;
            }
          }
        }
      }
    }
  }

  sol.objective = total_flow_cost(g, sol.arc_flow);
  sol.duality_gap = sol.objective - sol.dual_value;
  sol.max_violation = max_capacity_violation(g, sol.arc_flow);
  if (!sol.converged && sol.diagnosis.empty()) {
    // the repair pass may have met the targets even though the loop did not
    double rel_violation = 0;
    for (int a = 0; a < n_arcs; ++a)
      if (capacitated[a] && sol.arc_flow[a] > g.arcs[a].capacity)
        rel_violation = std::max(
            rel_violation, (sol.arc_flow[a] - g.arcs[a].capacity) / std::max(g.arcs[a].capacity, 1e-12));
    if (sol.duality_gap <= opt.tol * std::abs(sol.dual_value) + 1e-12 && rel_violation <= opt.tol)
      sol.converged = true;
  }
  if (!sol.converged && sol.diagnosis.empty()) {
    double rel = 0;
    for (int a = 0; a < n_arcs; ++a)
      if (capacitated[a] && sol.arc_flow[a] > g.arcs[a].capacity)
        rel = std::max(rel, (sol.arc_flow[a] - g.arcs[a].capacity) / std::max(g.arcs[a].capacity, 1e-12));
    sol.diagnosis = concat("stopped at max_iter=", opt.max_iter, " with relative gap ",
                           sol.dual_value != 0 ? sol.duality_gap / std::abs(sol.dual_value) : sol.duality_gap,
                           " and relative violation ", rel,
                           rel > 10 * opt.tol ? "; persistent infeasibility suggests an empty feasible set" : "");
  }
  return sol;
}

}  // namespace teflow
