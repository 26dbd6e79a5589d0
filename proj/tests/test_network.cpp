#include <gtest/gtest.h>

#include "teflow/network.hpp"

using namespace teflow;

namespace {

const char* kMinimalDoc = R"({
  "nodes": [{"id": "a", "kind": "origin"}, {"id": "b", "kind": "destination"}],
  "links": [{"tail": "a", "head": "b", "class": "connector", "capacity": "inf", "free_flow_time": 5}]
})";

TEST(LoadNetwork, MinimalDocument) {
  TransportNetwork net = load_network(kMinimalDoc);
  EXPECT_EQ(net.nodes.size(), 2u);
  EXPECT_EQ(net.links.size(), 1u);
  EXPECT_TRUE(is_inf(net.links[0].capacity));
  EXPECT_DOUBLE_EQ(net.links[0].free_flow_time, 5.0);
}

TEST(LoadNetwork, NegativeCapacityRejected) {
  const char* doc = R"({
    "nodes": [{"id": "a", "kind": "origin"}, {"id": "b", "kind": "destination"}],
    "links": [{"tail": "a", "head": "b", "class": "connector", "capacity": -3, "free_flow_time": 5}]
  })";
  try {
    load_network(doc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("negative capacity"), std::string::npos);
  }
}

TEST(LoadNetwork, ValidationErrors) {
  EXPECT_THROW(load_network("not json"), Error);
  EXPECT_THROW(load_network(R"({"links": []})"), Error);   // missing nodes
  EXPECT_NO_THROW(load_network(R"({"nodes": [], "links": []})"));
}

TEST(LoadNetwork, DuplicateIdRejected) {
  const char* doc = R"({
    "nodes": [{"id": "a", "kind": "origin"}, {"id": "a", "kind": "destination"}],
    "links": []
  })";
  EXPECT_THROW(load_network(doc), Error);
}

TEST(LoadNetwork, NonpositiveFreeFlowTimeRejected) {
  const char* doc = R"({
    "nodes": [{"id": "a", "kind": "origin"}, {"id": "b", "kind": "destination"}],
    "links": [{"tail": "a", "head": "b", "class": "connector", "free_flow_time": 0}]
  })";
  EXPECT_THROW(load_network(doc), Error);
}

TEST(LoadNetwork, FiniteRoadCapacityRejected) {
  const char* doc = R"({
    "nodes": [{"id": "a", "kind": "junction"}, {"id": "b", "kind": "junction"}],
    "links": [{"tail": "a", "head": "b", "class": "road", "capacity": 30, "free_flow_time": 1}]
  })";
  EXPECT_THROW(load_network(doc), Error);
}

TEST(LoadNetwork, SelfLoopRejected) {
  TransportNetwork net;
  net.add_node("a", NodeKind::Junction);
  EXPECT_THROW(net.add_link("a", "a", LinkClass::Road), Error);
}

// Fig. 1-style four-approach junction with an explicit turn table.
const char* kJunctionDoc = R"({
  "nodes": [
    {"id": "a", "kind": "origin"}, {"id": "b", "kind": "origin"},
    {"id": "c", "kind": "destination"}, {"id": "d", "kind": "destination"},
    {"id": "J", "kind": "junction"}
  ],
  "links": [
    {"tail": "a", "head": "J", "class": "connector", "free_flow_time": 2},
    {"tail": "b", "head": "J", "class": "connector", "free_flow_time": 2},
    {"tail": "J", "head": "c", "class": "connector", "free_flow_time": 2},
    {"tail": "J", "head": "d", "class": "connector", "free_flow_time": 2}
  ],
  "turns": [
    {"junction": "J", "in_link": "a", "out_link": "c", "capacity": 10, "time": 1},
    {"junction": "J", "in_link": "a", "out_link": "d", "capacity": 10, "time": 1},
    {"junction": "J", "in_link": "b", "out_link": "c", "capacity": 5, "time": 1}
  ]
})";

TEST(LoadNetwork, JunctionDocument) {
  TransportNetwork net = load_network(kJunctionDoc);
  int j = net.node_index("J");
  ASSERT_GE(j, 0);
  EXPECT_EQ(net.nodes[j].kind, NodeKind::Junction);
  int degree = 0;
  for (const Link& l : net.links) degree += (l.tail == j) + (l.head == j);
  EXPECT_EQ(degree, 4);
  EXPECT_EQ(net.turns.size(), 3u);
  EXPECT_FALSE(net.expanded);
}

TEST(ExpandJunctions, SingleTurn) {
  TransportNetwork raw;
  raw.add_node("v1", NodeKind::Origin);
  raw.add_node("v2", NodeKind::Junction);
  raw.add_node("v3", NodeKind::Destination);
  raw.add_link("v1", "v2", LinkClass::Road, kInf, 3.0);
  raw.add_link("v2", "v3", LinkClass::Road, kInf, 4.0);
  raw.add_turn("v2", "v1", "v3", 7.0, 1.5);

  TransportNetwork net = expand_junctions(raw);
  EXPECT_TRUE(net.expanded);
  EXPECT_EQ(net.nodes.size(), 4u);  // v1, v3 + two artificial
  EXPECT_EQ(net.nodes_of_kind(NodeKind::ArtificialIn).size(), 1u);
  EXPECT_EQ(net.nodes_of_kind(NodeKind::ArtificialOut).size(), 1u);
  ASSERT_EQ(net.links.size(), 3u);

  int in_node = net.nodes_of_kind(NodeKind::ArtificialIn)[0];
  int out_node = net.nodes_of_kind(NodeKind::ArtificialOut)[0];
  int e_in = net.find_link(net.node_index("v1"), in_node);
  int e_turn = net.find_link(in_node, out_node);
  int e_out = net.find_link(out_node, net.node_index("v3"));
  ASSERT_GE(e_in, 0);
  ASSERT_GE(e_turn, 0);
  ASSERT_GE(e_out, 0);
  EXPECT_EQ(net.links[e_in].klass, LinkClass::Road);
  EXPECT_EQ(net.links[e_turn].klass, LinkClass::Junction);
  EXPECT_EQ(net.links[e_out].klass, LinkClass::Road);
  EXPECT_DOUBLE_EQ(net.links[e_turn].capacity, 7.0);
  EXPECT_DOUBLE_EQ(net.links[e_turn].free_flow_time, 1.5);
  EXPECT_EQ(net.nodes_of_kind(NodeKind::Junction).size(), 0u);
}

TEST(ExpandJunctions, TwoByTwoAllTurns) {
  TransportNetwork raw;
  raw.add_node("a", NodeKind::Origin);
  raw.add_node("b", NodeKind::Origin);
  raw.add_node("J", NodeKind::Junction);
  raw.add_node("c", NodeKind::Destination);
  raw.add_node("d", NodeKind::Destination);
  raw.add_link("a", "J", LinkClass::Connector, kInf, 1);
  raw.add_link("b", "J", LinkClass::Connector, kInf, 1);
  raw.add_link("J", "c", LinkClass::Connector, kInf, 1);
  raw.add_link("J", "d", LinkClass::Connector, kInf, 1);
  for (const char* in : {"a", "b"})
    for (const char* out : {"c", "d"}) raw.add_turn("J", in, out, 3.0, 1.0);

  TransportNetwork net = expand_junctions(raw);
  EXPECT_EQ(net.nodes_of_kind(NodeKind::ArtificialIn).size(), 2u);
  EXPECT_EQ(net.nodes_of_kind(NodeKind::ArtificialOut).size(), 2u);
  int junction_links = 0;
  for (const Link& l : net.links) junction_links += l.klass == LinkClass::Junction;
  EXPECT_EQ(junction_links, 4);
}

TEST(ExpandJunctions, NoJunctionsIsIdentity) {
  TransportNetwork raw = load_network(kMinimalDoc);
  TransportNetwork net = expand_junctions(raw);
  EXPECT_EQ(net.nodes.size(), raw.nodes.size());
  EXPECT_EQ(net.links.size(), raw.links.size());
  EXPECT_TRUE(net.expanded);
}

TEST(ExpandJunctions, Idempotent) {
  TransportNetwork once = expand_junctions(load_network(kJunctionDoc));
  TransportNetwork twice = expand_junctions(once);
  EXPECT_EQ(to_json(once).dump(), to_json(twice).dump());
}

TEST(ExpandJunctions, EmptyTurnSetWarns) {
  TransportNetwork raw;
  raw.add_node("a", NodeKind::Origin);
  raw.add_node("J", NodeKind::Junction);
  raw.add_node("c", NodeKind::Destination);
  raw.add_link("a", "J", LinkClass::Connector, kInf, 1);
  raw.add_link("J", "c", LinkClass::Connector, kInf, 1);
  Diagnostics diags;
  TransportNetwork net = expand_junctions(raw, &diags);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].code, "empty-turn-set");
  int junction_links = 0;
  for (const Link& l : net.links) junction_links += l.klass == LinkClass::Junction;
  EXPECT_EQ(junction_links, 0);
}

TEST(ExpandJunctions, TurnReferencingMissingLink) {
  TransportNetwork raw;
  raw.add_node("a", NodeKind::Origin);
  raw.add_node("J", NodeKind::Junction);
  raw.add_node("c", NodeKind::Destination);
  raw.add_link("a", "J", LinkClass::Connector, kInf, 1);
  raw.add_link("J", "c", LinkClass::Connector, kInf, 1);
  EXPECT_THROW(raw.add_turn("J", "c", "a"), Error);  // neither link exists in that direction
}

TEST(ExpandJunctions, DefaultTurnCapacityAndTime) {
  TransportNetwork raw;
  raw.add_node("a", NodeKind::Origin);
  raw.add_node("J", NodeKind::Junction);
  raw.add_node("c", NodeKind::Destination);
  raw.add_link("a", "J", LinkClass::Connector, 12.0, 1);
  raw.add_link("J", "c", LinkClass::Connector, kInf, 1);
  raw.add_turn("J", "a", "c");  // no capacity/time given
  EXPECT_DOUBLE_EQ(raw.turns[0].capacity, 12.0);  // min of incident capacities
  EXPECT_DOUBLE_EQ(raw.turns[0].time, 1.0);
}

TEST(ExpandJunctions, LinkClassPartition) {
  TransportNetwork net = expand_junctions(load_network(kJunctionDoc));
  std::size_t roads = 0, junctions = 0, connectors = 0;
  for (const Link& l : net.links) {
    roads += l.klass == LinkClass::Road;
    junctions += l.klass == LinkClass::Junction;
    connectors += l.klass == LinkClass::Connector;
  }
  EXPECT_EQ(roads + junctions + connectors, net.links.size());
  EXPECT_EQ(junctions, 3u);
  // every junction link connects artificial-in to artificial-out
  for (const Link& l : net.links)
    if (l.klass == LinkClass::Junction) {
      EXPECT_EQ(net.nodes[l.tail].kind, NodeKind::ArtificialIn);
      EXPECT_EQ(net.nodes[l.head].kind, NodeKind::ArtificialOut);
    }
}

// For every allowed turn in the raw network the expanded network has the
// corresponding three-link path, and junction links exist only for allowed
// turns.
TEST(ExpandJunctions, PathPreservation) {
  TransportNetwork raw = load_network(kJunctionDoc);
  TransportNetwork net = expand_junctions(raw);
  auto has_turn_path = [&](const char* from, const char* to) {
    int v1 = net.node_index(from), v3 = net.node_index(to);
    for (const Link& l : net.links) {
      if (l.klass != LinkClass::Junction) continue;
      int e_in = -1, e_out = -1;
      for (int e = 0; e < static_cast<int>(net.links.size()); ++e) {
        if (net.links[e].head == l.tail && net.links[e].tail == v1) e_in = e;
        if (net.links[e].tail == l.head && net.links[e].head == v3) e_out = e;
      }
      if (e_in >= 0 && e_out >= 0) return true;
    }
    return false;
  };
  EXPECT_TRUE(has_turn_path("a", "c"));
  EXPECT_TRUE(has_turn_path("a", "d"));
  EXPECT_TRUE(has_turn_path("b", "c"));
  EXPECT_FALSE(has_turn_path("b", "d"));  // turn not allowed
}

TEST(ValidateNetwork, CleanNetworkHasNoDiagnostics) {
  TransportNetwork net = expand_junctions(load_network(kJunctionDoc));
  EXPECT_TRUE(validate_network(net).empty());
}

TEST(ValidateNetwork, IsolatedOrigin) {
  TransportNetwork net;
  net.add_node("o", NodeKind::Origin);
  net.add_node("d", NodeKind::Destination);
  net.expanded = true;
  Diagnostics diags = validate_network(net);
  bool found = false;
  for (const Diagnostic& d : diags) found |= d.code == "origin-isolated";
  EXPECT_TRUE(found);
}

TEST(ValidateNetwork, ZeroCapacityCut) {
  TransportNetwork raw;
  raw.add_node("a", NodeKind::Origin);
  raw.add_node("J", NodeKind::Junction);
  raw.add_node("c", NodeKind::Destination);
  raw.add_link("a", "J", LinkClass::Connector, kInf, 1);
  raw.add_link("J", "c", LinkClass::Connector, kInf, 1);
  raw.add_turn("J", "a", "c", 0.0, 1.0);
  TransportNetwork net = expand_junctions(raw);
  Diagnostics diags = validate_network(net);
  bool found = false;
  for (const Diagnostic& d : diags) found |= d.code == "zero-capacity-cut";
  EXPECT_TRUE(found);
}

TEST(NetworkJson, RoundTrip) {
  TransportNetwork net = load_network(kJunctionDoc);
  std::string dumped = to_json(net).dump(2);
  TransportNetwork reloaded = load_network(dumped);
  EXPECT_EQ(to_json(reloaded).dump(2), dumped);
}

}  // namespace
