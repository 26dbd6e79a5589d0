#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "teflow/common.hpp"
#include "teflow/shortest_path.hpp"
#include "teflow/solution.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

struct AuditOptions {
  double tol_feas = 1e-6;   // flow-space slack (absolute, per constraint)
  double tol_cost = 1e-6;   // cost slack for Wardrop comparisons
  double tol_avail = -1.0;  // residual above which an arc counts available; <0 = auto
  double gap_allowance = 0.0;  // extra flow-weighted cost slack for inexact solvers

  double effective_avail(const TimeExpandedGraph& g) const {
    if (tol_avail >= 0) return tol_avail;
    std::vector<double> caps;
    for (const TEArc& a : g.arcs)
      if (!is_inf(a.capacity)) caps.push_back(a.capacity);
    if (caps.empty()) return 1e-9;
    std::nth_element(caps.begin(), caps.begin() + caps.size() / 2, caps.end());
    return 1e-6 * std::max(1e-3, caps[caps.size() / 2]);
  }
};

struct AuditReport {
  struct CapacityViolation {
    int arc;
    double excess;
  };
  struct DemandViolation {
    int sink;  // TE node
    double demanded, shipped;
  };
  struct ConservationViolation {
    int origin_group;
    int node;
    double residual;
  };
  struct WardropViolation {
    int commodity;
    double flow;
    double used_cost;
    double best_available;
    double improvable;  // cost saved by the largest shift the residual admits
  };

  bool feasibility_checked = false;
  bool wardrop_checked = false;
  std::vector<CapacityViolation> capacity_violations;
  std::vector<DemandViolation> demand_violations;
  std::vector<ConservationViolation> conservation_violations;
  std::vector<WardropViolation> wardrop_violations;
  std::vector<std::string> errors;

  double objective = 0.0;
  double path_link_cost_gap = 0.0;  // |sum_p x_p T_p - sum_e t_e x_e|
  double max_wardrop_gap = 0.0;     // max used-path excess over best available
  double weighted_wardrop_excess = 0.0;
  double gap_allowance_used = 0.0;

  bool pass() const {
    if (!errors.empty()) return false;
    if (!capacity_violations.empty() || !demand_violations.empty() ||
        !conservation_violations.empty())
      return false;
    return wardrop_violations.empty();
  }

  void merge(const AuditReport& other) {
    feasibility_checked |= other.feasibility_checked;
    wardrop_checked |= other.wardrop_checked;
    capacity_violations.insert(capacity_violations.end(), other.capacity_violations.begin(),
                               other.capacity_violations.end());
    demand_violations.insert(demand_violations.end(), other.demand_violations.begin(),
                             other.demand_violations.end());
    conservation_violations.insert(conservation_violations.end(),
                                   other.conservation_violations.begin(),
                                   other.conservation_violations.end());
    wardrop_violations.insert(wardrop_violations.end(), other.wardrop_violations.begin(),
                              other.wardrop_violations.end());
    errors.insert(errors.end(), other.errors.begin(), other.errors.end());
    objective = std::max(objective, other.objective);
    path_link_cost_gap = std::max(path_link_cost_gap, other.path_link_cost_gap);
    max_wardrop_gap = std::max(max_wardrop_gap, other.max_wardrop_gap);
    weighted_wardrop_excess += other.weighted_wardrop_excess;
    gap_allowance_used = std::max(gap_allowance_used, other.gap_allowance_used);
  }
};

/// Total travel cost sum_e t_e x_e; when paths are present the path reading
/// sum_p x_p T_p is computed as well and `path_gap` receives the difference.
inline double total_cost(const Solution& sol, const TimeExpandedGraph& g, double* path_gap = nullptr) {
  double link_cost = total_flow_cost(g, sol.arc_flow);
  if (path_gap) *path_gap = 0.0;
  if (!sol.paths.empty()) {
    double path_cost = 0;
    for (const PathFlow& p : sol.paths) {
      double t = 0;
      for (int a : p.arcs) t += g.arcs[a].cost;
      path_cost += p.flow * t;
    }
    if (path_gap) *path_gap = std::abs(path_cost - link_cost);
  }
  return link_cost;
}

/// Greedy peeling of one origin's conserving link flows into path flows.
/// Throws when conservation fails at some node (the offending node is named).
inline std::vector<PathFlow> flow_decompose(const std::vector<double>& origin_flow, int origin_node,
                                            const TimeExpandedGraph& g, double tol = 1e-9) {
  std::map<int, int> commodity_at_sink;
  for (int k = 0; k < static_cast<int>(g.commodities.size()); ++k)
    if (g.commodities[k].origin_node == origin_node)
      commodity_at_sink[g.commodities[k].sink_node] = k;

  // conservation precheck: interior divergence must vanish
  double total_out = 0;
  {
    std::vector<double> div(g.nodes.size(), 0.0);
    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
      div[g.arcs[a].tail] += origin_flow[a];
      div[g.arcs[a].head] -= origin_flow[a];
    }
    for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
      if (v == origin_node) {
        total_out = div[v];
        continue;
      }
      if (commodity_at_sink.count(v)) continue;  // sinks absorb
      if (std::abs(div[v]) > tol)
        fail("flow does not conserve at node ", g.node_name(v), " (residual ", div[v], ")");
    }
  }

  std::vector<double> residual = origin_flow;
  std::vector<int> cursor(g.nodes.size(), 0);  // skip exhausted out-arcs
  std::vector<PathFlow> paths;
  const double peel_eps = std::max(tol, 1e-12 * std::max(1.0, total_out));
  double peeled = 0;
  while (peeled < total_out - std::max(tol, 1e-9 * std::max(1.0, total_out))) {
    // walk from the origin along positive residuals (smallest arc index first)
    std::vector<int> arcs;
    int v = origin_node;
    double bottleneck = kInf;
    while (true) {
      int next = -1;
      for (int i = g.out_offset[v] + cursor[v]; i < g.out_offset[v + 1]; ++i) {
        int a = g.out_arc[i];
        if (residual[a] > peel_eps) {
          next = a;
          break;
        }
        cursor[v]++;  // permanently exhausted (residuals only decrease)
      }
      if (next < 0) break;
      arcs.push_back(next);
      bottleneck = std::min(bottleneck, residual[next]);
      v = g.arcs[next].head;
    }
    if (arcs.empty()) fail("flow decomposition stalled at the origin with ", total_out - peeled,
                           " vehicles unpeeled");
    auto it = commodity_at_sink.find(v);
    if (it == commodity_at_sink.end())
      fail("decomposed flow terminates at non-sink node ", g.node_name(v));
    for (int a : arcs) residual[a] -= bottleneck;
    peeled += bottleneck;
    PathFlow p;
    p.commodity = it->second;
    p.arcs = std::move(arcs);
    p.flow = bottleneck;
    for (int a : p.arcs) p.cost += g.arcs[a].cost;
    paths.push_back(std::move(p));
  }
  return paths;
}

/// Nonnegativity, capacities, demand satisfaction, and (when per-origin
/// flows are present) Kirchhoff conservation.
inline AuditReport check_feasibility(const Solution& sol, const TimeExpandedGraph& g,
                                     const AuditOptions& opt = {}) {
  AuditReport rep;
  rep.feasibility_checked = true;
  rep.objective = total_cost(sol, g, &rep.path_link_cost_gap);

  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    if (sol.arc_flow[a] < -opt.tol_feas)
      rep.errors.push_back(concat("negative flow ", sol.arc_flow[a], " on arc ", a));
    if (!is_inf(g.arcs[a].capacity)) {
      double excess = sol.arc_flow[a] - g.arcs[a].capacity;
      if (excess > opt.tol_feas * std::max(1.0, g.arcs[a].capacity))
        rep.capacity_violations.push_back({static_cast<int>(a), excess});
    }
  }

  // demand satisfaction per sink
  std::map<int, double> demanded;
  for (const Commodity& c : g.commodities) demanded[c.sink_node] += c.volume;
  for (auto& [sink, volume] : demanded) {
    double shipped = 0;
    for (int i = g.in_offset[sink]; i < g.in_offset[sink + 1]; ++i)
      shipped += sol.arc_flow[g.in_arc[i]];
    if (std::abs(shipped - volume) > opt.tol_feas * std::max(1.0, volume))
      rep.demand_violations.push_back({sink, volume, shipped});
  }

  // per-origin conservation when the solution carries origin flows
  for (std::size_t k = 0; k < sol.origin_arc_flow.size(); ++k) {
    const std::vector<double>& flow = sol.origin_arc_flow[k];
    int origin = sol.origin_nodes[k];
    std::map<int, double> sink_volume;
    for (const Commodity& c : g.commodities)
      if (c.origin_node == origin) sink_volume[c.sink_node] += c.volume;
    double out_total = 0;
    for (auto& kv : sink_volume) out_total += kv.second;
    std::vector<double> div(g.nodes.size(), 0.0);
    for (std::size_t a = 0; a < g.arcs.size(); ++a) {
      div[g.arcs[a].tail] += flow[a];
      div[g.arcs[a].head] -= flow[a];
    }
    for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
      double want = 0;
      if (v == origin) want = out_total;
      auto it = sink_volume.find(v);
      if (it != sink_volume.end()) want -= it->second;
      if (std::abs(div[v] - want) > opt.tol_feas * std::max(1.0, std::abs(want)))
        rep.conservation_violations.push_back({static_cast<int>(k), v, div[v] - want});
    }
  }
  return rep;
}

/// First Wardrop principle on the loaded network: every used path costs no
/// more than the best path that still has residual capacity throughout.
inline AuditReport check_wardrop(const Solution& sol, const TimeExpandedGraph& g,
                                 const AuditOptions& opt = {}) {
  AuditReport rep;
  rep.wardrop_checked = true;
  rep.gap_allowance_used = opt.gap_allowance;

  std::vector<PathFlow> paths = sol.paths;
  if (paths.empty() && !sol.origin_arc_flow.empty()) {
    try {
      for (std::size_t k = 0; k < sol.origin_arc_flow.size(); ++k) {
        auto part = flow_decompose(sol.origin_arc_flow[k], sol.origin_nodes[k], g,
                                   std::max(1e-9, 10 * opt.tol_feas));
        paths.insert(paths.end(), part.begin(), part.end());
      }
    } catch (const Error& e) {
      rep.errors.push_back(concat("cannot recover path flows: ", e.what()));
      return rep;
    }
  }
  if (paths.empty() && !g.commodities.empty()) {
    rep.errors.push_back("no path flows available and none recoverable; Wardrop check impossible");
    return rep;
  }

  const double avail = opt.effective_avail(g);
  CostVector masked(g.arcs.size());
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    bool available = is_inf(g.arcs[a].capacity) || g.arcs[a].capacity - sol.arc_flow[a] > avail;
    masked[a] = available ? g.arcs[a].cost : kInf;
  }

  std::map<int, PathTree> tree_at_origin;
  std::map<int, double> shipped;
  for (const PathFlow& p : paths) shipped[p.commodity] += p.flow;
  for (const PathFlow& p : paths) {
    if (p.flow <= opt.tol_feas) continue;
    const Commodity& c = g.commodities[p.commodity];
    auto [it, fresh] = tree_at_origin.try_emplace(c.origin_node);
    if (fresh) it->second = shortest_tree(g, masked, c.origin_node);
    double best = it->second.dist[c.sink_node];
    if (best == kInf) {
      if (shipped[p.commodity] < c.volume - opt.tol_feas)
        rep.errors.push_back(concat("commodity ", p.commodity,
                                    " has unrouted demand and no available path"));
      continue;  // no available alternative: the complementarity clause is vacuous
    }
    double used_cost = 0;
    for (int a : p.arcs) used_cost += g.arcs[a].cost;
    double excess = used_cost - best;
    if (excess > opt.tol_cost) {
      rep.max_wardrop_gap = std::max(rep.max_wardrop_gap, excess);
      rep.weighted_wardrop_excess += p.flow * excess;
      rep.wardrop_violations.push_back({p.commodity, p.flow, used_cost, best});
    }
  }
  // Inexact solutions are judged by total flow-weighted excess against the
  // solver's own duality gap.
  if (opt.gap_allowance > 0 && !rep.wardrop_violations.empty() &&
      rep.weighted_wardrop_excess <= opt.gap_allowance + opt.tol_cost)
    rep.wardrop_violations.clear();
  return rep;
}

inline AuditReport audit_solution(const Solution& sol, const TimeExpandedGraph& g,
                                  AuditOptions opt = {}) {
  AuditReport rep = check_feasibility(sol, g, opt);
  rep.merge(check_wardrop(sol, g, opt));
  if (rep.path_link_cost_gap > opt.tol_cost * std::max(1.0, rep.objective))
    rep.errors.push_back(concat("path/link cost disagreement: ", rep.path_link_cost_gap));
  return rep;
}

inline nlohmann::ordered_json to_json(const AuditReport& rep, const TimeExpandedGraph& g) {
  nlohmann::ordered_json doc;
  doc["verdict"] = rep.pass() ? "pass" : "fail";
  doc["feasibility_checked"] = rep.feasibility_checked;
  doc["wardrop_checked"] = rep.wardrop_checked;
  doc["objective"] = rep.objective;
  doc["path_link_cost_gap"] = rep.path_link_cost_gap;
  doc["max_wardrop_gap"] = rep.max_wardrop_gap;
  doc["weighted_wardrop_excess"] = rep.weighted_wardrop_excess;
  doc["gap_allowance"] = rep.gap_allowance_used;
  doc["capacity_violations"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.capacity_violations)
    doc["capacity_violations"].push_back(
        {{"arc", v.arc}, {"tail", g.node_name(g.arcs[v.arc].tail)},
         {"head", g.node_name(g.arcs[v.arc].head)}, {"excess", v.excess}});
  doc["demand_violations"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.demand_violations)
    doc["demand_violations"].push_back({{"sink", g.node_name(v.sink)},
                                        {"demanded", v.demanded},
                                        {"shipped", v.shipped}});
  doc["conservation_violations"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.conservation_violations)
    doc["conservation_violations"].push_back(
        {{"origin_group", v.origin_group}, {"node", g.node_name(v.node)}, {"residual", v.residual}});
  doc["wardrop_violations"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.wardrop_violations)
    doc["wardrop_violations"].push_back({{"commodity", v.commodity},
                                         {"flow", v.flow},
                                         {"used_cost", v.used_cost},
                                         {"best_available", v.best_available}});
  doc["errors"] = rep.errors;
  return doc;
}

}  // namespace teflow
