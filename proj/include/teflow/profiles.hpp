#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "teflow/common.hpp"

namespace teflow {

// Plot-ready CSV profiles derived from a solution document alone (the arc
// records carry enough structure that the graph is not needed).
struct ProfileCsvs {
  std::string departures;  // t, vehicles leaving each origin
  std::string arrivals;    // t, vehicles reaching each destination
  std::string loading;     // one row per recorded arc
};

namespace detail {
inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace detail

inline ProfileCsvs build_profiles(const nlohmann::json& doc) {
  if (!doc.contains("arcs") || !doc.contains("T")) fail("malformed solution file: missing arcs/T");
  const int T = doc.at("T").get<int>();
  const double dt = doc.at("dt").get<double>();
  const double start = doc.at("horizon_start").get<double>();

  std::set<std::string> origins, destinations;
  if (doc.contains("commodities"))
    for (const auto& c : doc.at("commodities")) {
      origins.insert(c.at("origin").get<std::string>());
      destinations.insert(c.at("destination").get<std::string>());
    }
  std::map<std::pair<std::string, int>, double> dep, arr;
  for (const auto& ja : doc.at("arcs")) {
    double flow = ja.at("flow").get<double>();
    if (flow <= 1e-12) continue;
    if (ja.at("kind") == "origin-connector") {
      std::string o = ja.at("tail_base").get<std::string>();
      origins.insert(o);
      dep[{o, ja.at("enter_t").get<int>()}] += flow;
    }
    if (ja.at("head_layer") == "destination-actual") {
      std::string d = ja.at("head_base").get<std::string>();
      destinations.insert(d);
      arr[{d, ja.at("head_t").get<int>()}] += flow;
    }
  }

  ProfileCsvs out;
  auto table = [&](const std::set<std::string>& names,
                   const std::map<std::pair<std::string, int>, double>& data) {
    std::string s = "t";
    for (const std::string& n : names) s += "," + n;
    s += "\n";
    for (int t = 0; t < T; ++t) {
      s += detail::csv_num(start + t * dt);
      for (const std::string& n : names) {
        auto it = data.find({n, t});
        s += "," + detail::csv_num(it == data.end() ? 0.0 : it->second);
      }
      s += "\n";
    }
    return s;
  };
  out.departures = table(origins, dep);
  out.arrivals = table(destinations, arr);

  out.loading = "arc,kind,tail,tail_t,head,head_t,enter_minutes,cost,capacity,flow,dual\n";
  for (const auto& ja : doc.at("arcs")) {
    out.loading += detail::csv_num(ja.at("id").get<int>());
    out.loading += "," + ja.at("kind").get<std::string>();
    out.loading += "," + ja.at("tail_base").get<std::string>();
    out.loading += "," + detail::csv_num(ja.at("tail_t").get<int>());
    out.loading += "," + ja.at("head_base").get<std::string>();
    out.loading += "," + detail::csv_num(ja.at("head_t").get<int>());
    int enter = ja.at("enter_t").get<int>();
    out.loading += "," + (enter >= 0 ? detail::csv_num(start + enter * dt) : std::string(""));
    out.loading += "," + detail::csv_num(ja.at("cost").get<double>());
    out.loading += "," + (ja.at("capacity").is_string() ? std::string("inf")
                                                        : detail::csv_num(ja.at("capacity").get<double>()));
    out.loading += "," + detail::csv_num(ja.at("flow").get<double>());
    out.loading += "," + detail::csv_num(ja.contains("dual") ? ja.at("dual").get<double>() : 0.0);
    out.loading += "\n";
  }
  return out;
}

}  // namespace teflow
