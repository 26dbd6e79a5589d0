#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "teflow/common.hpp"
#include "teflow/demand.hpp"
#include "teflow/network.hpp"

namespace teflow {

struct TimeGrid {
  double dt = 1.0;             // physical duration of one quant (minutes)
  double horizon_start = 0.0;  // physical time of index 0
  double horizon_end = 0.0;
  int T = 0;                   // timepoints, indices 0..T-1

  static TimeGrid make(double dt, double start, double end) {
    if (!(dt > 0)) fail("dt must be positive");
    if (!(end > start)) fail("horizon end must exceed horizon start");
    TimeGrid g;
    g.dt = dt;
    g.horizon_start = start;
    g.horizon_end = end;
    g.T = static_cast<int>(std::floor((end - start) / dt + 1e-9)) + 1;
    if (g.T < 2) fail("horizon shorter than one time quant");
    return g;
  }

  double minutes(int t) const { return horizon_start + t * dt; }
};

struct QuantizedDemand {
  int origin = -1;      // node index in the expanded network
  int dest = -1;        // node index in the expanded network
  int t_desired = -1;   // grid index
  double volume = 0.0;  // vehicles
  ArrivalCostParams params;
};

struct QuantizedInstance {
  TransportNetwork net;  // expanded network
  TimeGrid grid;
  std::vector<int> link_time;    // quants per link, >= 1
  std::vector<double> link_cap;  // vehicles per quant
  std::vector<QuantizedDemand> demands;
  ArrivalCostParams global_params;
  Diagnostics warnings;
};

/// Converts physical times to grid quanta (ceil, min 1) and capacities to
/// vehicles per quant. Desired arrivals snap to the nearest grid point,
/// ties toward later.
inline QuantizedInstance quantize(const TransportNetwork& net, const DemandTable& demands,
                                  const TimeGrid& grid) {
  if (!net.expanded) fail("quantize expects an expanded network (call expand_junctions first)");
  QuantizedInstance qi;
  qi.net = net;
  qi.grid = grid;
  qi.global_params = demands.params;
  qi.link_time.resize(net.links.size());
  qi.link_cap.resize(net.links.size());

  double min_time = kInf;
  for (const Link& l : net.links) min_time = std::min(min_time, l.free_flow_time);
  if (!net.links.empty() && grid.dt > min_time + 1e-12)
    qi.warnings.push_back({Severity::Warning, "dt-too-coarse",
                           concat("dt=", grid.dt, " exceeds the smallest free-flow time ", min_time,
                                  "; quantization will stretch travel times")});

  for (std::size_t e = 0; e < net.links.size(); ++e) {
    const Link& l = net.links[e];
    int q = std::max(1, static_cast<int>(std::ceil(l.free_flow_time / grid.dt - 1e-9)));
    qi.link_time[e] = q;
    double err = std::abs(q * grid.dt - l.free_flow_time);
    if (err > 0.10 * l.free_flow_time + 1e-12)
      qi.warnings.push_back(
          {Severity::Warning, "rounding",
           concat("free-flow time of link ", net.nodes[l.tail].id, " -> ", net.nodes[l.head].id,
                  " rounds from ", l.free_flow_time, " to ", q * grid.dt, " (",
                  static_cast<int>(std::round(100.0 * err / l.free_flow_time)), "% change)")});
    qi.link_cap[e] = is_inf(l.capacity) ? kInf : l.capacity * grid.dt;
  }

  for (const Demand& d : demands.records) {
    QuantizedDemand q;
    q.origin = net.node_index(d.origin);
    q.dest = net.node_index(d.destination);
    if (q.origin < 0 || q.dest < 0) fail("demand references node missing from the expanded network");
    double x = (d.desired_arrival - grid.horizon_start) / grid.dt;
    q.t_desired = static_cast<int>(std::floor(x + 0.5));  // ties toward later
    if (q.t_desired < 0 || q.t_desired >= grid.T)
      fail("desired arrival ", d.desired_arrival, " outside horizon [", grid.horizon_start, ", ",
           grid.horizon_end, "]");
    if (std::abs(grid.minutes(q.t_desired) - d.desired_arrival) > 1e-9)
      qi.warnings.push_back({Severity::Warning, "arrival-snapped",
                             concat("desired arrival ", d.desired_arrival, " snapped to grid point ",
                                    grid.minutes(q.t_desired))});
    q.volume = d.volume;
    q.params = d.params;
    qi.demands.push_back(q);
  }
  return qi;
}

enum class Layer { Origin, Physical, DestActual, DestDesired };
enum class ArcKind { Road, Junction, Wait, OriginConnector, ArrivalCost };

inline const char* to_string(Layer l) {
  switch (l) {
    case Layer::Origin: return "origin";
    case Layer::Physical: return "physical";
    case Layer::DestActual: return "destination-actual";
    case Layer::DestDesired: return "destination-desired";
  }
  return "?";
}

inline const char* to_string(ArcKind k) {
  switch (k) {
    case ArcKind::Road: return "road";
    case ArcKind::Junction: return "junction";
    case ArcKind::Wait: return "wait";
    case ArcKind::OriginConnector: return "origin-connector";
    case ArcKind::ArrivalCost: return "arrival-cost";
  }
  return "?";
}

struct TENode {
  int base = -1;  // node index in the expanded network (-1 never occurs)
  int t = -1;     // grid index; -1 for timeless origins
  Layer layer = Layer::Physical;
  int pclass = 0;  // arrival-cost parameter class, DestDesired only
};

struct TEArc {
  int tail = -1, head = -1;  // TE node indices; tail < head always (topological)
  ArcKind kind = ArcKind::Road;
  double cost = 0.0;      // physical time-equivalent units (minutes)
  double capacity = kInf;  // vehicles per quant
  int link = -1;          // originating network link, -1 for wait/arrival arcs
  int enter_t = -1;       // entry/departure grid index (for profiles)
};

struct Commodity {
  int origin_node = -1;  // TE node (timeless origin)
  int sink_node = -1;    // TE node (destination-desired copy)
  double volume = 0.0;
  int demand_index = -1;
};

struct BuildOptions {
  bool literal_road_expansion = false;  // quadratic road rule instead of wait arcs
  int arrival_window = -1;              // max |t'-t| in quants for arrival arcs; -1 = full horizon
};

class TimeExpandedGraph {
 public:
  TimeGrid grid;
  std::vector<TENode> nodes;
  std::vector<TEArc> arcs;
  std::vector<Commodity> commodities;
  std::vector<ArrivalCostParams> classes;

  // Copied from the network so the graph is self-contained.
  std::vector<std::string> base_ids;
  std::vector<NodeKind> base_kinds;

  // CSR adjacency (arc indices).
  std::vector<int> out_offset, out_arc;
  std::vector<int> in_offset, in_arc;

  int T() const { return grid.T; }
  double minutes(int t) const { return grid.minutes(t); }

  std::string node_name(int v) const {
    const TENode& n = nodes[v];
    switch (n.layer) {
      case Layer::Origin: return base_ids[n.base];
      case Layer::Physical: return concat(base_ids[n.base], "@", n.t);
      case Layer::DestActual: return concat(base_ids[n.base], "'@", n.t);
      case Layer::DestDesired:
        return classes.size() > 1 ? concat(base_ids[n.base], "!", n.t, "#", n.pclass)
                                  : concat(base_ids[n.base], "!", n.t);
    }
    return "?";
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a(static_cast<std::int64_t>(T()), 1469598103934665603ull);
    h = fnv1a(grid.dt, h);
    for (const TEArc& a : arcs) {
      h = fnv1a(static_cast<std::int64_t>(a.tail), h);
      h = fnv1a(static_cast<std::int64_t>(a.head), h);
      h = fnv1a(static_cast<std::int64_t>(static_cast<int>(a.kind)), h);
      h = fnv1a(a.cost, h);
      h = fnv1a(is_inf(a.capacity) ? -1.0 : a.capacity, h);
    }
    for (const Commodity& c : commodities) {
      h = fnv1a(static_cast<std::int64_t>(c.origin_node), h);
      h = fnv1a(static_cast<std::int64_t>(c.sink_node), h);
      h = fnv1a(c.volume, h);
    }
    return h;
  }

  void build_adjacency() {
    out_offset.assign(nodes.size() + 1, 0);
    in_offset.assign(nodes.size() + 1, 0);
    for (const TEArc& a : arcs) {
      out_offset[a.tail + 1]++;
      in_offset[a.head + 1]++;
    }
    for (std::size_t i = 1; i < out_offset.size(); ++i) {
      out_offset[i] += out_offset[i - 1];
      in_offset[i] += in_offset[i - 1];
    }
    out_arc.resize(arcs.size());
    in_arc.resize(arcs.size());
    std::vector<int> op(out_offset.begin(), out_offset.end() - 1);
    std::vector<int> ip(in_offset.begin(), in_offset.end() - 1);
    for (int a = 0; a < static_cast<int>(arcs.size()); ++a) {
      out_arc[op[arcs[a].tail]++] = a;
      in_arc[ip[arcs[a].head]++] = a;
    }
  }
};

/// Recomputes an arc's cost from its structure; physical arcs cost the time
/// they span, arrival arcs cost the schedule-deviation penalty.
inline double arc_cost(const TimeExpandedGraph& g, int arc) {
  const TEArc& a = g.arcs[arc];
  const TENode& tail = g.nodes[a.tail];
  const TENode& head = g.nodes[a.head];
  switch (a.kind) {
    case ArcKind::Road:
    case ArcKind::Junction:
    case ArcKind::Wait:
      return (head.t - tail.t) * g.grid.dt;
    case ArcKind::OriginConnector:
      return a.cost;  // tail is timeless; traversal time was fixed at build
    case ArcKind::ArrivalCost:
      return arrival_penalty(g.minutes(tail.t), g.minutes(head.t), g.classes[head.pclass]);
  }
  return a.cost;
}

/// Builds the time-expanded graph: road/junction arcs per feasible entry
/// time, unit wait arcs at artificial-in nodes (the point queue), timeless
/// origins fanned out to every copy of their neighbours, actual-arrival
/// destination copies, and arrival-cost arcs into the desired-arrival copies.
inline TimeExpandedGraph build_time_expanded(const QuantizedInstance& qi, BuildOptions opt = {},
                                             Diagnostics* diags = nullptr) {
  const TransportNetwork& net = qi.net;
  if (!net.expanded) fail("build_time_expanded expects an expanded network");
  const int T = qi.grid.T;

  TimeExpandedGraph g;
  g.grid = qi.grid;
  for (const Node& n : net.nodes) {
    g.base_ids.push_back(n.id);
    g.base_kinds.push_back(n.kind);
  }

  // Parameter classes, sorted for determinism. Class 0 always exists.
  std::map<std::pair<double, double>, int> class_of;
  class_of[{qi.global_params.alpha, qi.global_params.beta}] = 0;
  for (const QuantizedDemand& d : qi.demands) class_of[{d.params.alpha, d.params.beta}] = 0;
  {
    int c = 0;
    for (auto& kv : class_of) kv.second = c++;
  }
  g.classes.resize(class_of.size());
  for (const auto& kv : class_of) g.classes[kv.second] = ArrivalCostParams{kv.first.first, kv.first.second};

  // Node layout, in topological blocks:
  //   [origins] [physical x T by (t, base)] [actual x T by (t, base)]
  //   [desired by (class, base, t)]
  std::vector<int> origin_te(net.nodes.size(), -1);
  std::vector<int> phys_rank(net.nodes.size(), -1), dest_rank(net.nodes.size(), -1);
  int n_phys = 0, n_dest = 0;
  for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v) {
    switch (net.nodes[v].kind) {
      case NodeKind::Origin:
        origin_te[v] = static_cast<int>(g.nodes.size());
        g.nodes.push_back(TENode{v, -1, Layer::Origin, 0});
        break;
      case NodeKind::ArtificialIn:
      case NodeKind::ArtificialOut:
        phys_rank[v] = n_phys++;
        break;
      case NodeKind::Destination:
        dest_rank[v] = n_dest++;
        break;
      case NodeKind::Junction:
        fail("junction node survived expansion");  // unreachable by contract
    }
  }
  const int phys_start = static_cast<int>(g.nodes.size());
  for (int t = 0; t < T; ++t)
    for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v)
      if (phys_rank[v] >= 0) g.nodes.push_back(TENode{v, t, Layer::Physical, 0});
  const int actual_start = static_cast<int>(g.nodes.size());
  for (int t = 0; t < T; ++t)
    for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v)
      if (dest_rank[v] >= 0) g.nodes.push_back(TENode{v, t, Layer::DestActual, 0});
  const int desired_start = static_cast<int>(g.nodes.size());
  const int n_classes = static_cast<int>(g.classes.size());
  for (int c = 0; c < n_classes; ++c)
    for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v)
      if (dest_rank[v] >= 0)
        for (int t = 0; t < T; ++t) g.nodes.push_back(TENode{v, t, Layer::DestDesired, c});

  auto phys_node = [&](int base, int t) { return phys_start + t * n_phys + phys_rank[base]; };
  auto actual_node = [&](int base, int t) { return actual_start + t * n_dest + dest_rank[base]; };
  auto desired_node = [&](int c, int base, int t) {
    return desired_start + (c * n_dest + dest_rank[base]) * T + t;
  };

  auto warn = [&](std::string code, std::string msg) {
    if (diags) diags->push_back({Severity::Warning, std::move(code), std::move(msg)});
  };

  // Arc emission.
  const double dt = qi.grid.dt;
  for (int e = 0; e < static_cast<int>(net.links.size()); ++e) {
    const Link& l = net.links[e];
    const int tau = qi.link_time[e];
    const double cap = qi.link_cap[e];
    const NodeKind tk = net.nodes[l.tail].kind, hk = net.nodes[l.head].kind;

    if (hk == NodeKind::Origin) {
      warn("link-into-origin", concat("link into origin '", net.nodes[l.head].id, "' ignored"));
      continue;
    }
    if (tk == NodeKind::Destination) {
      warn("link-out-of-destination",
           concat("link out of destination '", net.nodes[l.tail].id, "' ignored"));
      continue;
    }

    if (tk == NodeKind::Origin) {
      // Timeless origin to every copy of the neighbour it was connected to.
      for (int t = tau; t < T; ++t) {
        int head = hk == NodeKind::Destination ? actual_node(l.head, t) : phys_node(l.head, t);
        g.arcs.push_back(TEArc{origin_te[l.tail], head, ArcKind::OriginConnector, tau * dt, cap, e, t - tau});
      }
      continue;
    }

    // Physical tail.
    if (hk == NodeKind::Destination) {
      for (int t = 0; t + tau < T; ++t)
        g.arcs.push_back(
            TEArc{phys_node(l.tail, t), actual_node(l.head, t + tau), ArcKind::Road, tau * dt, cap, e, t});
      continue;
    }

    if (l.klass == LinkClass::Junction) {
      for (int t = 0; t + tau < T; ++t)
        g.arcs.push_back(
            TEArc{phys_node(l.tail, t), phys_node(l.head, t + tau), ArcKind::Junction, tau * dt, cap, e, t});
    } else if (opt.literal_road_expansion && l.klass == LinkClass::Road) {
      // Literal quadratic rule: one arc per (t1, t2), t2 - t1 >= tau.
      for (int t1 = 0; t1 < T; ++t1)
        for (int t2 = t1 + tau; t2 < T; ++t2)
          g.arcs.push_back(TEArc{phys_node(l.tail, t1), phys_node(l.head, t2), ArcKind::Road,
                                 (t2 - t1) * dt, cap, e, t1});
    } else {
      for (int t = 0; t + tau < T; ++t)
        g.arcs.push_back(
            TEArc{phys_node(l.tail, t), phys_node(l.head, t + tau), ArcKind::Road, tau * dt, cap, e, t});
    }
  }

  // Point queue: unit wait arcs at artificial-in (junction-tail) nodes.
  if (!opt.literal_road_expansion) {
    for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v)
      if (net.nodes[v].kind == NodeKind::ArtificialIn)
        for (int t = 0; t + 1 < T; ++t)
          g.arcs.push_back(TEArc{phys_node(v, t), phys_node(v, t + 1), ArcKind::Wait, dt, kInf, -1, t});
  }

  // Arrival-cost arcs (j', t') -> (j, t).
  const int W = opt.arrival_window < 0 ? T : opt.arrival_window;
  for (int c = 0; c < n_classes; ++c) {
    const ArrivalCostParams& p = g.classes[c];
    for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v) {
      if (dest_rank[v] < 0) continue;
      for (int ta = 0; ta < T; ++ta) {  // actual arrival
        const int lo = std::max(0, ta - W), hi = std::min(T - 1, ta + W);
        for (int td = lo; td <= hi; ++td)  // desired arrival
          g.arcs.push_back(TEArc{actual_node(v, ta), desired_node(c, v, td), ArcKind::ArrivalCost,
                                 arrival_penalty(g.minutes(ta), g.minutes(td), p), kInf, -1, ta});
      }
    }
  }

  // Canonical deterministic order, also topological (tail < head throughout).
  std::stable_sort(g.arcs.begin(), g.arcs.end(), [](const TEArc& a, const TEArc& b) {
    return a.tail != b.tail ? a.tail < b.tail : a.head < b.head;
  });
  for (const TEArc& a : g.arcs)
    if (a.tail >= a.head) fail("internal: time-expanded arc violates topological order");
  g.build_adjacency();

  // Commodities; error out if the horizon cannot route some positive demand.
  for (int d = 0; d < static_cast<int>(qi.demands.size()); ++d) {
    const QuantizedDemand& q = qi.demands[d];
    Commodity c;
    c.origin_node = origin_te[q.origin];
    if (c.origin_node < 0) fail("demand origin '", net.nodes[q.origin].id, "' is not an origin node");
    if (dest_rank[q.dest] < 0) fail("demand destination '", net.nodes[q.dest].id, "' is not a destination");
    int cls = class_of.at({q.params.alpha, q.params.beta});
    c.sink_node = desired_node(cls, q.dest, q.t_desired);
    c.volume = q.volume;
    c.demand_index = d;
    g.commodities.push_back(c);
  }
  {
    // Reachability sweep per origin over the DAG (arcs sorted by tail).
    std::vector<char> reach(g.nodes.size(), 0);
    for (const Commodity& c : g.commodities) {
      std::fill(reach.begin(), reach.end(), 0);
      reach[c.origin_node] = 1;
      for (const TEArc& a : g.arcs)
        if (reach[a.tail]) reach[a.head] = 1;
      if (!reach[c.sink_node])
        fail("horizon too short: demand ", g.base_ids[qi.demands[c.demand_index].origin], " -> ",
             g.base_ids[qi.demands[c.demand_index].dest], " (t=",
             g.minutes(qi.demands[c.demand_index].t_desired), ") cannot be routed");
    }
  }
  return g;
}

/// Deterministic JSON dump of the graph (debugging aid).
inline nlohmann::ordered_json dump_graph(const TimeExpandedGraph& g) {
  nlohmann::ordered_json doc;
  doc["T"] = g.T();
  doc["dt"] = g.grid.dt;
  doc["horizon_start"] = g.grid.horizon_start;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (int v = 0; v < static_cast<int>(g.nodes.size()); ++v) {
    const TENode& n = g.nodes[v];
    doc["nodes"].push_back({{"id", v},
                            {"name", g.node_name(v)},
                            {"base", g.base_ids[n.base]},
                            {"t", n.t},
                            {"layer", to_string(n.layer)}});
  }
  doc["links"] = nlohmann::ordered_json::array();
  for (const TEArc& a : g.arcs) {
    nlohmann::ordered_json ja{{"tail", a.tail}, {"head", a.head}, {"class", to_string(a.kind)}, {"cost", a.cost}};
    if (is_inf(a.capacity))
      ja["capacity"] = "inf";
    else
      ja["capacity"] = a.capacity;
    doc["links"].push_back(std::move(ja));
  }
  return doc;
}

}  // namespace teflow
