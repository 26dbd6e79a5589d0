#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "teflow/common.hpp"
#include "teflow/network.hpp"

namespace teflow {

// Schedule-deviation cost slopes, in travel-time units per time unit
// (value of travel time is normalized to 1).
struct ArrivalCostParams {
  double alpha = 1.0;  // per time unit late
  double beta = 1.0;   // per time unit early

  void validate() const {
    if (!(alpha > 0)) fail("alpha must be positive");
    if (!(beta > 0)) fail("beta must be positive");
  }
};

/// tau(actual, desired) = alpha*max(0, actual-desired) + beta*max(0, desired-actual).
inline double arrival_penalty(double actual, double desired, const ArrivalCostParams& p) {
  return p.alpha * std::max(0.0, actual - desired) + p.beta * std::max(0.0, desired - actual);
}

struct Demand {
  std::string origin;
  std::string destination;
  double desired_arrival = 0.0;  // physical time (minutes)
  double volume = 0.0;           // vehicles, > 0
  ArrivalCostParams params;      // per-record override of the global values
};

struct DemandTable {
  std::vector<Demand> records;
  ArrivalCostParams params;  // global alpha/beta

  double total_volume() const {
    double s = 0;
    for (const Demand& d : records) s += d.volume;
    return s;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    // trim
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline double parse_number(const std::string& s, int lineno, const char* col) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail("malformed row ", lineno, ": bad ", col, " value '", s, "'");
  }
}

}  // namespace detail

/// Reads the demands CSV (header: origin,destination,desired_arrival,volume[,alpha,beta]).
/// Rows with the same (origin, destination, desired_arrival, alpha, beta) are
/// aggregated by summing volumes. Node ids are checked against `net`.
inline DemandTable load_demands(const std::string& csv, const ArrivalCostParams& global,
                                const TransportNetwork& net) {
  global.validate();
  DemandTable table;
  table.params = global;

  std::istringstream is(csv);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  bool has_param_cols = false;
  // aggregation key -> index in records
  std::map<std::tuple<std::string, std::string, double, double, double>, std::size_t> index;

  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv_row(line);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() < 4 || cells[0] != "origin" || cells[1] != "destination" ||
          cells[2] != "desired_arrival" || cells[3] != "volume")
        fail("demands CSV header must be origin,destination,desired_arrival,volume[,alpha,beta]");
      if (cells.size() == 6 && cells[4] == "alpha" && cells[5] == "beta")
        has_param_cols = true;
      else if (cells.size() != 4)
        fail("demands CSV header must be origin,destination,desired_arrival,volume[,alpha,beta]");
      continue;
    }
    if (cells.size() != (has_param_cols ? 6u : 4u))
      fail("malformed row ", lineno, ": expected ", has_param_cols ? 6 : 4, " cells, got ", cells.size());

    Demand d;
    d.origin = cells[0];
    d.destination = cells[1];
    d.desired_arrival = detail::parse_number(cells[2], lineno, "desired_arrival");
    d.volume = detail::parse_number(cells[3], lineno, "volume");
    d.params = global;
    if (has_param_cols) {
      if (!cells[4].empty()) d.params.alpha = detail::parse_number(cells[4], lineno, "alpha");
      if (!cells[5].empty()) d.params.beta = detail::parse_number(cells[5], lineno, "beta");
      d.params.validate();
    }
    if (!(d.volume > 0)) fail("nonpositive volume in row ", lineno);

    int o = net.node_index(d.origin);
    if (o < 0) fail("unknown node id '", d.origin, "' in row ", lineno);
    if (net.nodes[o].kind != NodeKind::Origin) fail("'", d.origin, "' is not an origin (row ", lineno, ")");
    int t = net.node_index(d.destination);
    if (t < 0) fail("unknown node id '", d.destination, "' in row ", lineno);
    if (net.nodes[t].kind != NodeKind::Destination)
      fail("'", d.destination, "' is not a destination (row ", lineno, ")");

    auto key = std::make_tuple(d.origin, d.destination, d.desired_arrival, d.params.alpha, d.params.beta);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, table.records.size());
      table.records.push_back(std::move(d));
    } else {
      table.records[it->second].volume += d.volume;
    }
  }
  if (!header_seen) fail("demands CSV is empty");
  return table;
}

}  // namespace teflow
