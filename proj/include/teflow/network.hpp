#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "teflow/common.hpp"

namespace teflow {

enum class NodeKind { Junction, Origin, Destination, ArtificialIn, ArtificialOut };
enum class LinkClass { Road, Junction, Connector };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Junction: return "junction";
    case NodeKind::Origin: return "origin";
    case NodeKind::Destination: return "destination";
    case NodeKind::ArtificialIn: return "artificial-in";
    case NodeKind::ArtificialOut: return "artificial-out";
  }
  return "?";
}

inline const char* to_string(LinkClass c) {
  switch (c) {
    case LinkClass::Road: return "road";
    case LinkClass::Junction: return "junction";
    case LinkClass::Connector: return "connector";
  }
  return "?";
}

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Junction;
};

struct Link {
  int tail = -1;          // node index
  int head = -1;          // node index
  LinkClass klass = LinkClass::Road;
  double capacity = kInf;        // vehicles per physical time unit
  double free_flow_time = 1.0;   // physical time units, > 0
};

// Allowed movement (in-link, out-link) through a junction. Links are
// identified by the far node of the incident link; the graph is simple,
// so (in_tail, junction) and (junction, out_head) pin them down.
struct Turn {
  int junction = -1;   // node index
  int in_link = -1;    // link index, head == junction
  int out_link = -1;   // link index, tail == junction
  double capacity = kInf;
  double time = 1.0;
};

class TransportNetwork {
 public:
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Turn> turns;
  bool expanded = false;

  int node_index(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? -1 : it->second;
  }

  const Node& node(std::string_view id) const {
    int i = node_index(id);
    if (i < 0) fail("unknown node id '", id, "'");
    return nodes[i];
  }

  int add_node(std::string id, NodeKind kind) {
    if (id.empty()) fail("empty node id");
    if (node_index(id) >= 0) fail("duplicate node id '", id, "'");
    nodes.push_back(Node{id, kind});
    by_id_.emplace(std::move(id), static_cast<int>(nodes.size()) - 1);
    return static_cast<int>(nodes.size()) - 1;
  }

  int add_link(std::string_view tail, std::string_view head, LinkClass klass,
               double capacity = kInf, double free_flow_time = 1.0) {
    int t = node_index(tail), h = node_index(head);
    if (t < 0) fail("link references unknown node '", tail, "'");
    if (h < 0) fail("link references unknown node '", head, "'");
    if (t == h) fail("self-loop on node '", tail, "'");
    if (find_link(t, h) >= 0) fail("parallel link ", tail, " -> ", head, " (graph must be simple)");
    if (!(free_flow_time > 0)) fail("nonpositive free-flow time on link ", tail, " -> ", head);
    if (capacity < 0 || std::isnan(capacity)) fail("negative capacity on link ", tail, " -> ", head);
    if (klass == LinkClass::Road && !is_inf(capacity))
      fail("finite capacity on road link ", tail, " -> ", head,
           "; model mid-road capacity changes with an artificial junction");
    links.push_back(Link{t, h, klass, capacity, free_flow_time});
    by_endpoint_.emplace(key(t, h), static_cast<int>(links.size()) - 1);
    return static_cast<int>(links.size()) - 1;
  }

  // capacity/time < 0 means "not given"; defaults are resolved here:
  // time 1 physical unit, capacity = min of the incident links' capacities.
  int add_turn(std::string_view junction, std::string_view in_tail, std::string_view out_head,
               double capacity = -1.0, double time = -1.0) {
    int v = node_index(junction);
    if (v < 0) fail("turn references unknown junction '", junction, "'");
    if (nodes[v].kind != NodeKind::Junction) fail("turn on non-junction node '", junction, "'");
    int it = node_index(in_tail), oh = node_index(out_head);
    int in_link = it < 0 ? -1 : find_link(it, v);
    int out_link = oh < 0 ? -1 : find_link(v, oh);
    if (in_link < 0) fail("turn at '", junction, "' references missing in-link ", in_tail, " -> ", junction);
    if (out_link < 0) fail("turn at '", junction, "' references missing out-link ", junction, " -> ", out_head);
    for (const Turn& existing : turns)
      if (existing.in_link == in_link && existing.out_link == out_link)
        fail("duplicate turn (", in_tail, ", ", junction, ", ", out_head, ")");
    Turn turn;
    turn.junction = v;
    turn.in_link = in_link;
    turn.out_link = out_link;
    if (time >= 0 && !(time > 0)) fail("nonpositive turn time at '", junction, "'");
    if (capacity >= 0 && std::isnan(capacity)) fail("bad turn capacity at '", junction, "'");
    turn.capacity = capacity < 0 ? std::min(links[in_link].capacity, links[out_link].capacity) : capacity;
    turn.time = time < 0 ? 1.0 : time;
    turns.push_back(turn);
    return static_cast<int>(turns.size()) - 1;
  }

  int find_link(int tail, int head) const {
    auto it = by_endpoint_.find(key(tail, head));
    return it == by_endpoint_.end() ? -1 : it->second;
  }

  std::vector<int> nodes_of_kind(NodeKind k) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
      if (nodes[i].kind == k) out.push_back(i);
    return out;
  }

  std::vector<int> origins() const { return nodes_of_kind(NodeKind::Origin); }
  std::vector<int> destinations() const { return nodes_of_kind(NodeKind::Destination); }

  std::vector<std::vector<int>> out_links_per_node() const {
    std::vector<std::vector<int>> out(nodes.size());
    for (int e = 0; e < static_cast<int>(links.size()); ++e) out[links[e].tail].push_back(e);
    return out;
  }

  std::vector<std::vector<int>> in_links_per_node() const {
    std::vector<std::vector<int>> in(nodes.size());
    for (int e = 0; e < static_cast<int>(links.size()); ++e) in[links[e].head].push_back(e);
    return in;
  }

 private:
  static std::int64_t key(int tail, int head) {
    return (static_cast<std::int64_t>(tail) << 32) | static_cast<std::uint32_t>(head);
  }
  std::unordered_map<std::string, int> by_id_;
  std::unordered_map<std::int64_t, int> by_endpoint_;
};

namespace detail {

inline NodeKind parse_node_kind(const std::string& s) {
  if (s == "junction") return NodeKind::Junction;
  if (s == "origin") return NodeKind::Origin;
  if (s == "destination") return NodeKind::Destination;
  if (s == "artificial-in") return NodeKind::ArtificialIn;
  if (s == "artificial-out") return NodeKind::ArtificialOut;
  fail("unknown node kind '", s, "'");
}

inline LinkClass parse_link_class(const std::string& s) {
  if (s == "road") return LinkClass::Road;
  if (s == "junction") return LinkClass::Junction;
  if (s == "connector") return LinkClass::Connector;
  fail("unknown link class '", s, "'");
}

// capacity fields accept a number or the sentinel "inf".
inline double parse_capacity(const nlohmann::json& j, const char* where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    fail("bad capacity string in ", where, " (only \"inf\" is accepted)");
  }
  if (!j.is_number()) fail("capacity in ", where, " must be a number or \"inf\"");
  double v = j.get<double>();
  if (v < 0) fail("negative capacity in ", where);
  return v;
}

}  // namespace detail

/// Parses and validates the network document (see README for the schema).
/// Junctions are not yet split; call expand_junctions for that.
inline TransportNetwork load_network(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("network document is not valid JSON: ", e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links"))
    fail("network document must be an object with 'nodes' and 'links'");

  TransportNetwork net;
  for (const auto& jn : doc.at("nodes")) {
    if (!jn.is_object() || !jn.contains("id") || !jn.contains("kind"))
      fail("each node needs 'id' and 'kind'");
    net.add_node(jn.at("id").get<std::string>(), detail::parse_node_kind(jn.at("kind").get<std::string>()));
  }
  for (const auto& jl : doc.at("links")) {
    if (!jl.is_object() || !jl.contains("tail") || !jl.contains("head") || !jl.contains("class"))
      fail("each link needs 'tail', 'head' and 'class'");
    LinkClass klass = detail::parse_link_class(jl.at("class").get<std::string>());
    double cap = kInf;
    if (jl.contains("capacity")) {
      const std::string where = concat("link ", jl.at("tail").get<std::string>(), " -> ", jl.at("head").get<std::string>());
      cap = detail::parse_capacity(jl.at("capacity"), where.c_str());
    }
    double fft = jl.contains("free_flow_time") ? jl.at("free_flow_time").get<double>() : 1.0;
    net.add_link(jl.at("tail").get<std::string>(), jl.at("head").get<std::string>(), klass, cap, fft);
  }
  if (doc.contains("turns")) {
    for (const auto& jt : doc.at("turns")) {
      if (!jt.is_object() || !jt.contains("junction") || !jt.contains("in_link") || !jt.contains("out_link"))
        fail("each turn needs 'junction', 'in_link' and 'out_link'");
      double cap = -1.0, time = -1.0;
      if (jt.contains("capacity"))
        cap = detail::parse_capacity(jt.at("capacity"), "turn");
      if (jt.contains("time")) time = jt.at("time").get<double>();
      net.add_turn(jt.at("junction").get<std::string>(), jt.at("in_link").get<std::string>(),
                   jt.at("out_link").get<std::string>(), cap, time);
    }
  }
  net.expanded = net.nodes_of_kind(NodeKind::Junction).empty();
  return net;
}

inline nlohmann::ordered_json to_json(const TransportNetwork& net) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const Node& n : net.nodes) doc["nodes"].push_back({{"id", n.id}, {"kind", to_string(n.kind)}});
  doc["links"] = nlohmann::ordered_json::array();
  for (const Link& l : net.links) {
    nlohmann::ordered_json jl{{"tail", net.nodes[l.tail].id},
                              {"head", net.nodes[l.head].id},
                              {"class", to_string(l.klass)}};
    if (is_inf(l.capacity))
      jl["capacity"] = "inf";
    else
      jl["capacity"] = l.capacity;
    jl["free_flow_time"] = l.free_flow_time;
    doc["links"].push_back(std::move(jl));
  }
  doc["turns"] = nlohmann::ordered_json::array();
  for (const Turn& t : net.turns) {
    nlohmann::ordered_json jt{{"junction", net.nodes[t.junction].id},
                              {"in_link", net.nodes[net.links[t.in_link].tail].id},
                              {"out_link", net.nodes[net.links[t.out_link].head].id}};
    if (is_inf(t.capacity))
      jt["capacity"] = "inf";
    else
      jt["capacity"] = t.capacity;
    jt["time"] = t.time;
    doc["turns"].push_back(std::move(jt));
  }
  return doc;
}

/// Splits every junction node: in-links are re-headed to a per-link
/// artificial-in node, out-links re-tailed to a per-link artificial-out
/// node, and each allowed turn becomes a junction-class link between them.
/// Already-expanded networks pass through unchanged.
inline TransportNetwork expand_junctions(const TransportNetwork& raw, Diagnostics* diags = nullptr) {
  std::vector<int> junctions = raw.nodes_of_kind(NodeKind::Junction);
  if (junctions.empty()) {
    TransportNetwork copy = raw;
    copy.expanded = true;
    return copy;
  }

  TransportNetwork net;
  // Node ids for the split: "<tail>><head>:in" / ":out". '>' cannot appear
  // in a schema-valid id that also names a turn endpoint, but collisions are
  // checked by add_node anyway.
  auto in_node_id = [&](const Link& l) {
    return concat(raw.nodes[l.tail].id, ">", raw.nodes[l.head].id, ":in");
  };
  auto out_node_id = [&](const Link& l) {
    return concat(raw.nodes[l.tail].id, ">", raw.nodes[l.head].id, ":out");
  };

  std::unordered_set<int> is_junction(junctions.begin(), junctions.end());
  for (const Node& n : raw.nodes)
    if (n.kind != NodeKind::Junction) net.add_node(n.id, n.kind);

  // Per raw link: the ids its endpoints map to after the split.
  std::vector<std::string> tail_id(raw.links.size()), head_id(raw.links.size());
  for (std::size_t e = 0; e < raw.links.size(); ++e) {
    const Link& l = raw.links[e];
    tail_id[e] = raw.nodes[l.tail].id;
    head_id[e] = raw.nodes[l.head].id;
    if (is_junction.count(l.tail)) {
      tail_id[e] = out_node_id(l);
      net.add_node(tail_id[e], NodeKind::ArtificialOut);
    }
    if (is_junction.count(l.head)) {
      head_id[e] = in_node_id(l);
      net.add_node(head_id[e], NodeKind::ArtificialIn);
    }
  }
  for (std::size_t e = 0; e < raw.links.size(); ++e) {
    const Link& l = raw.links[e];
    net.add_link(tail_id[e], head_id[e], l.klass, l.capacity, l.free_flow_time);
  }
  std::vector<int> turns_at(raw.nodes.size(), 0);
  for (const Turn& t : raw.turns) {
    turns_at[t.junction]++;
    net.add_link(head_id[t.in_link], tail_id[t.out_link], LinkClass::Junction, t.capacity, t.time);
  }
  if (diags) {
    for (int v : junctions)
      if (turns_at[v] == 0)
        diags->push_back({Severity::Warning, "empty-turn-set",
                          concat("junction '", raw.nodes[v].id, "' allows no turns; it is now a trap")});
  }
  net.expanded = true;
  return net;
}

/// Structural diagnostics: isolated origins, unreachable destinations,
/// zero-capacity junction cuts, dangling nodes. Never throws.
inline Diagnostics validate_network(const TransportNetwork& net) {
  Diagnostics out;
  auto out_links = net.out_links_per_node();
  auto in_links = net.in_links_per_node();

  for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v) {
    const Node& n = net.nodes[v];
    if (n.kind == NodeKind::Origin && out_links[v].empty())
      out.push_back({Severity::Warning, "origin-isolated", concat("origin '", n.id, "' has no outgoing link")});
    if (out_links[v].empty() && in_links[v].empty())
      out.push_back({Severity::Warning, "dangling-node", concat("node '", n.id, "' has no incident links")});
  }

  // Reachability from the set of origins.
  std::vector<char> seen(net.nodes.size(), 0);
  std::deque<int> queue;
  for (int v : net.origins()) {
    seen[v] = 1;
    queue.push_back(v);
  }
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int e : out_links[v]) {
      int h = net.links[e].head;
      if (!seen[h]) {
        seen[h] = 1;
        queue.push_back(h);
      }
    }
  }
  for (int v : net.destinations())
    if (!seen[v])
      out.push_back({Severity::Warning, "destination-unreachable",
                     concat("destination '", net.nodes[v].id, "' is unreachable from every origin")});

  if (net.expanded) {
    // A former junction is a cut if some artificial-in node has no way out
    // with positive capacity.
    for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v) {
      if (net.nodes[v].kind != NodeKind::ArtificialIn) continue;
      bool any_positive = false;
      bool any_junction_link = false;
      for (int e : out_links[v]) {
        if (net.links[e].klass != LinkClass::Junction) continue;
        any_junction_link = true;
        if (net.links[e].capacity > 0) any_positive = true;
      }
      if (any_junction_link && !any_positive)
        out.push_back({Severity::Warning, "zero-capacity-cut",
                       concat("every junction link out of '", net.nodes[v].id, "' has zero capacity")});
      if (!any_junction_link && !out_links[v].empty())
        ;  // non-junction outgoing links exist; not a junction head
    }
  } else {
    for (int v : net.nodes_of_kind(NodeKind::Junction)) {
      bool any_positive = false, any_turn = false;
      for (const Turn& t : net.turns)
        if (t.junction == v) {
          any_turn = true;
          if (t.capacity > 0) any_positive = true;
        }
      if (any_turn && !any_positive)
        out.push_back({Severity::Warning, "zero-capacity-cut",
                       concat("every turn at junction '", net.nodes[v].id, "' has zero capacity")});
    }
  }
  return out;
}

}  // namespace teflow
