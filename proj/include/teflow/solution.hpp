#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "teflow/common.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

struct PathFlow {
  int commodity = -1;
  std::vector<int> arcs;  // arc indices, origin -> sink
  double flow = 0.0;
  double cost = 0.0;  // sum of arc costs
};

struct Solution {
  std::string method;
  bool converged = false;
  int iterations = 0;
  std::string diagnosis;

  double objective = 0.0;      // cost of the reported flows
  double dual_value = 0.0;     // best dual bound (equals objective for exact solvers)
  double duality_gap = 0.0;    // objective - dual_value
  double max_violation = 0.0;  // max over arcs of (flow - capacity)+

  std::vector<double> arc_flow;  // aggregate flow per arc
  std::vector<double> arc_dual;  // congestion price y_e >= 0 per arc

  // Optional per-origin flows: origin_nodes[k] is a timeless-origin TE node,
  // origin_arc_flow[k] its arc flows. Exact solvers fill these for auditing.
  std::vector<int> origin_nodes;
  std::vector<std::vector<double>> origin_arc_flow;

  std::vector<PathFlow> paths;  // optional (column generation fills these)
};

/// Distinct commodity origins in deterministic (TE node) order, with the
/// commodities each one serves.
inline std::vector<std::pair<int, std::vector<int>>> origin_groups(const TimeExpandedGraph& g) {
  std::map<int, std::vector<int>> by_origin;
  for (int k = 0; k < static_cast<int>(g.commodities.size()); ++k)
    by_origin[g.commodities[k].origin_node].push_back(k);
  return {by_origin.begin(), by_origin.end()};
}

inline double total_flow_cost(const TimeExpandedGraph& g, const std::vector<double>& arc_flow) {
  double s = 0;
  for (std::size_t a = 0; a < g.arcs.size(); ++a) s += g.arcs[a].cost * arc_flow[a];
  return s;
}

inline double max_capacity_violation(const TimeExpandedGraph& g, const std::vector<double>& arc_flow) {
  double v = 0;
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    if (!is_inf(g.arcs[a].capacity)) v = std::max(v, arc_flow[a] - g.arcs[a].capacity);
  return v;
}

namespace detail {
inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}
}  // namespace detail

inline nlohmann::ordered_json write_solution_json(const Solution& sol, const TimeExpandedGraph& g) {
  nlohmann::ordered_json doc;
  doc["method"] = sol.method;
  doc["converged"] = sol.converged;
  doc["iterations"] = sol.iterations;
  if (!sol.diagnosis.empty()) doc["diagnosis"] = sol.diagnosis;
  doc["objective"] = sol.objective;
  doc["dual_value"] = sol.dual_value;
  doc["duality_gap"] = sol.duality_gap;
  doc["max_violation"] = sol.max_violation;
  doc["graph_fingerprint"] = detail::hex64(g.fingerprint());
  doc["T"] = g.T();
  doc["dt"] = g.grid.dt;
  doc["horizon_start"] = g.grid.horizon_start;

  doc["commodities"] = nlohmann::ordered_json::array();
  for (const Commodity& c : g.commodities) {
    const TENode& sink = g.nodes[c.sink_node];
    doc["commodities"].push_back({{"origin", g.base_ids[g.nodes[c.origin_node].base]},
                                  {"destination", g.base_ids[sink.base]},
                                  {"desired_minutes", g.minutes(sink.t)},
                                  {"volume", c.volume}});
  }

  doc["arcs"] = nlohmann::ordered_json::array();
  for (int a = 0; a < static_cast<int>(g.arcs.size()); ++a) {
    const TEArc& arc = g.arcs[a];
    double flow = a < static_cast<int>(sol.arc_flow.size()) ? sol.arc_flow[a] : 0.0;
    double dual = a < static_cast<int>(sol.arc_dual.size()) ? sol.arc_dual[a] : 0.0;
    if (std::abs(flow) <= 1e-12 && is_inf(arc.capacity) && dual <= 1e-12) continue;
    const TENode& tn = g.nodes[arc.tail];
    const TENode& hn = g.nodes[arc.head];
    nlohmann::ordered_json ja;
    ja["id"] = a;
    ja["kind"] = to_string(arc.kind);
    ja["tail_base"] = g.base_ids[tn.base];
    ja["tail_t"] = tn.t;
    ja["tail_layer"] = to_string(tn.layer);
    ja["head_base"] = g.base_ids[hn.base];
    ja["head_t"] = hn.t;
    ja["head_layer"] = to_string(hn.layer);
    ja["enter_t"] = arc.enter_t;
    ja["cost"] = arc.cost;
    if (is_inf(arc.capacity))
      ja["capacity"] = "inf";
    else
      ja["capacity"] = arc.capacity;
    ja["flow"] = flow;
    if (dual > 1e-12) ja["dual"] = dual;
    if (!sol.origin_arc_flow.empty()) {
      nlohmann::ordered_json of;
      for (std::size_t k = 0; k < sol.origin_nodes.size(); ++k) {
        double f = sol.origin_arc_flow[k][a];
        if (std::abs(f) > 1e-12) of[g.base_ids[g.nodes[sol.origin_nodes[k]].base]] = f;
      }
      if (!of.empty()) ja["origin_flow"] = std::move(of);
    }
    doc["arcs"].push_back(std::move(ja));
  }

  doc["paths"] = nlohmann::ordered_json::array();
  for (const PathFlow& p : sol.paths) {
    const Commodity& c = g.commodities[p.commodity];
    const TENode& sink = g.nodes[c.sink_node];
    nlohmann::ordered_json jp;
    jp["origin"] = g.base_ids[g.nodes[c.origin_node].base];
    jp["destination"] = g.base_ids[sink.base];
    jp["desired_minutes"] = g.minutes(sink.t);
    if (!p.arcs.empty()) {
      const TEArc& first = g.arcs[p.arcs.front()];
      jp["departure_minutes"] = g.minutes(first.enter_t);
    }
    jp["arcs"] = p.arcs;
    jp["flow"] = p.flow;
    jp["cost"] = p.cost;
    doc["paths"].push_back(std::move(jp));
  }
  return doc;
}

/// Rehydrates a Solution written by write_solution_json; the graph must be
/// the same build (checked via fingerprint).
inline Solution read_solution_json(const nlohmann::json& doc, const TimeExpandedGraph& g) {
  if (doc.value("graph_fingerprint", std::string()) != detail::hex64(g.fingerprint()))
    fail("solution file was produced for a different graph (fingerprint mismatch)");
  Solution sol;
  sol.method = doc.value("method", std::string());
  sol.converged = doc.value("converged", false);
  sol.iterations = doc.value("iterations", 0);
  sol.diagnosis = doc.value("diagnosis", std::string());
  sol.objective = doc.value("objective", 0.0);
  sol.dual_value = doc.value("dual_value", 0.0);
  sol.duality_gap = doc.value("duality_gap", 0.0);
  sol.max_violation = doc.value("max_violation", 0.0);
  sol.arc_flow.assign(g.arcs.size(), 0.0);
  sol.arc_dual.assign(g.arcs.size(), 0.0);

  std::map<std::string, int> origin_index;
  for (auto& [node, commodities] : origin_groups(g)) {
    (void)commodities;
    origin_index[g.base_ids[g.nodes[node].base]] = static_cast<int>(sol.origin_nodes.size());
    sol.origin_nodes.push_back(node);
  }

  bool any_origin_flow = false;
  for (const auto& ja : doc.at("arcs")) {
    int a = ja.at("id").get<int>();
    if (a < 0 || a >= static_cast<int>(g.arcs.size())) fail("solution arc id ", a, " out of range");
    sol.arc_flow[a] = ja.at("flow").get<double>();
    if (ja.contains("dual")) sol.arc_dual[a] = ja.at("dual").get<double>();
    if (ja.contains("origin_flow")) any_origin_flow = true;
  }
  if (any_origin_flow) {
    sol.origin_arc_flow.assign(sol.origin_nodes.size(), std::vector<double>(g.arcs.size(), 0.0));
    for (const auto& ja : doc.at("arcs")) {
      if (!ja.contains("origin_flow")) continue;
      int a = ja.at("id").get<int>();
      for (auto it = ja.at("origin_flow").begin(); it != ja.at("origin_flow").end(); ++it) {
        auto oi = origin_index.find(it.key());
        if (oi == origin_index.end()) fail("solution references unknown origin '", it.key(), "'");
        sol.origin_arc_flow[oi->second][a] = it.value().get<double>();
      }
    }
  }
  if (doc.contains("paths")) {
    std::map<std::tuple<std::string, std::string, double>, int> commodity_index;
    for (int k = 0; k < static_cast<int>(g.commodities.size()); ++k) {
      const Commodity& c = g.commodities[k];
      const TENode& sink = g.nodes[c.sink_node];
      commodity_index[{g.base_ids[g.nodes[c.origin_node].base], g.base_ids[sink.base],
                       g.minutes(sink.t)}] = k;
    }
    for (const auto& jp : doc.at("paths")) {
      PathFlow p;
      auto key = std::make_tuple(jp.at("origin").get<std::string>(),
                                 jp.at("destination").get<std::string>(),
                                 jp.at("desired_minutes").get<double>());
      auto it = commodity_index.find(key);
      if (it == commodity_index.end()) fail("solution path references unknown commodity");
      p.commodity = it->second;
      p.arcs = jp.at("arcs").get<std::vector<int>>();
      p.flow = jp.at("flow").get<double>();
      p.cost = jp.at("cost").get<double>();
      sol.paths.push_back(std::move(p));
    }
  }
  return sol;
}

}  // namespace teflow
