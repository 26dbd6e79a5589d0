#pragma once

#include "teflow/bottleneck.hpp"
#include "teflow/common.hpp"
#include "teflow/demand.hpp"
#include "teflow/network.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

// Discretization of the single-bottleneck scenario: origin -> bottleneck
// junction -> destination, with the junction link carrying the capacity and
// the connectors splitting the remaining free-flow time.
struct ToyInstance {
  TransportNetwork net;  // expanded
  DemandTable demands;
  TimeGrid grid;
  QuantizedInstance quantized;
  TimeExpandedGraph graph;
};

inline ToyInstance build_toy_instance(const BottleneckScenario& s, double dt, double horizon_start,
                                      double horizon_end, BuildOptions bopt = {}) {
  s.validate();
  ToyInstance toy;
  int quanta = std::max(3, static_cast<int>(std::round(s.t_free / dt)));
  double turn_time = dt;
  double time_in = std::ceil((quanta - 1) / 2.0) * dt;
  double time_out = s.t_free - turn_time - time_in;
  if (time_out <= 0) time_out = dt;  // t_free < 3*dt: stretched, quantize warns

  TransportNetwork raw;
  raw.add_node("res", NodeKind::Origin);
  raw.add_node("neck", NodeKind::Junction);
  raw.add_node("work", NodeKind::Destination);
  raw.add_link("res", "neck", LinkClass::Connector, kInf, time_in);
  raw.add_link("neck", "work", LinkClass::Connector, kInf, time_out);
  raw.add_turn("neck", "res", "work", s.cap, turn_time);
  toy.net = expand_junctions(raw);

  toy.demands.params = s.params;
  Demand d;
  d.origin = "res";
  d.destination = "work";
  d.desired_arrival = s.t_desired;
  d.volume = s.n_cars;
  d.params = s.params;
  if (d.volume > 0) toy.demands.records.push_back(d);

  toy.grid = TimeGrid::make(dt, horizon_start, horizon_end);
  toy.quantized = quantize(toy.net, toy.demands, toy.grid);
  toy.graph = build_time_expanded(toy.quantized, bopt);
  return toy;
}

}  // namespace teflow
