#pragma once

#include <cmath>

#include "teflow/common.hpp"
#include "teflow/demand.hpp"

namespace teflow {

// Single origin, single destination, one bottleneck of throughput `cap`
// midway along a road with free-flow time `t_free`. All drivers want to
// arrive at `t_desired`.
struct BottleneckScenario {
  double n_cars = 0.0;     // N
  double cap = 1.0;        // vehicles per time unit through the bottleneck
  double t_free = 1.0;     // free-flow travel time
  double t_desired = 0.0;  // desired arrival time
  ArrivalCostParams params;

  void validate() const {
    if (n_cars < 0) fail("n_cars must be nonnegative");
    if (!(cap > 0)) fail("cap must be positive");
    if (!(t_free > 0)) fail("t_free must be positive");
    params.validate();
  }
};

// Departure-time equilibrium with queueing: every driver pays the same cost.
struct AnalyticEquilibrium {
  double t1 = 0;  // first departure
  double t2 = 0;  // punctual driver's departure
  double t3 = 0;  // last departure
  double n1 = 0;  // departure rate on [t1, t2)
  double n2 = 0;  // departure rate on [t2, t3)
  double cost_per_driver = 0;
};

// Queue-free schedule that minimizes total cost: arrivals metered at `cap`
// over [window_start, window_end].
struct SystemOptimum {
  double window_start = 0;
  double window_end = 0;
  double early_span = 0;  // E = t_desired - window_start
  double late_span = 0;   // L = window_end - t_desired
  double total_cost = 0;  // car-minutes, travel included
};

inline AnalyticEquilibrium solve_analytic(const BottleneckScenario& s) {
  s.validate();
  if (s.params.beta >= 1.0)
    fail("beta must be < 1: the early-side departure rate cap/(1-beta) is undefined for beta >= 1");
  const double a = s.params.alpha, b = s.params.beta;
  const double spread = s.n_cars / s.cap;  // time for N cars to pass the bottleneck
  AnalyticEquilibrium eq;
  eq.t1 = s.t_desired - s.t_free - a / (a + b) * spread;
  eq.t3 = s.t_desired - s.t_free + b / (a + b) * spread;
  eq.t2 = s.t_desired - s.t_free - a * b / (a + b) * spread;
  eq.n1 = s.cap / (1.0 - b);
  eq.n2 = s.cap / (1.0 + a);
  eq.cost_per_driver = s.t_free + b * (s.t_desired - eq.t1 - s.t_free);
  return eq;
}

/// Piecewise-constant equilibrium departure rate n(t).
inline double departure_rate(const BottleneckScenario& s, double t) {
  AnalyticEquilibrium eq = solve_analytic(s);
  if (t < eq.t1 || t >= eq.t3) return 0.0;
  return t < eq.t2 ? eq.n1 : eq.n2;
}

// Marginal early/late costs balance at the window edges: beta*E = alpha*L,
// E + L = N/cap. Total cost integrates the metered arrival schedule.
inline SystemOptimum system_optimum(const BottleneckScenario& s) {
  s.validate();
  const double a = s.params.alpha, b = s.params.beta;
  const double spread = s.n_cars / s.cap;
  SystemOptimum so;
  so.early_span = a / (a + b) * spread;
  so.late_span = b / (a + b) * spread;
  so.window_start = s.t_desired - so.early_span;
  so.window_end = s.t_desired + so.late_span;
  so.total_cost = s.n_cars * s.t_free +
                  s.cap * (b * so.early_span * so.early_span + a * so.late_span * so.late_span) / 2.0;
  return so;
}

}  // namespace teflow
