#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teflow/common.hpp"
#include "teflow/solution.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

struct Triplet {
  int row = 0, col = 0;
  double value = 0.0;
};

// Minimization LP: min c'x + c0  s.t.  Ax {<=,=,>=} b,  lb <= x <= ub.
struct StandardFormLP {
  int nrows = 0, ncols = 0;
  std::vector<double> obj;
  double obj_constant = 0.0;
  std::vector<Triplet> entries;
  std::vector<char> sense;  // 'E', 'L', 'G'
  std::vector<double> rhs;
  std::vector<double> lb, ub;
  std::vector<std::string> row_name, col_name;

  int add_row(char s, double b, std::string name) {
    sense.push_back(s);
    rhs.push_back(b);
    row_name.push_back(std::move(name));
    return nrows++;
  }
  int add_col(double c, std::string name, double lower = 0.0, double upper = kInf) {
    obj.push_back(c);
    lb.push_back(lower);
    ub.push_back(upper);
    col_name.push_back(std::move(name));
    return ncols++;
  }
  void add_entry(int r, int c, double v) {
    if (v != 0.0) entries.push_back(Triplet{r, c, v});
  }
  std::size_t nonzeros() const { return entries.size(); }
};

inline nlohmann::ordered_json lp_build_report(const StandardFormLP& lp) {
  return {{"rows", lp.nrows}, {"cols", lp.ncols}, {"nonzeros", lp.nonzeros()}};
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex. A desk-scale oracle: exact, deterministic, guarded.
// ---------------------------------------------------------------------------

struct SimplexOptions {
  double tol_pivot = 1e-9;
  double tol_opt = 1e-9;
  double tol_feas = 1e-7;
  int col_guard = 5000;   // structural-column guard
  int bland_after = 40;   // consecutive degenerate pivots before Bland's rule
  int max_pivots = 0;     // 0 = auto
};

struct SimplexResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Optimal;
  std::vector<double> x;  // structural variables
  std::vector<double> y;  // duals of the original rows
  double objective = 0.0;
  int pivots = 0;
};

inline SimplexResult dense_simplex(const StandardFormLP& input, SimplexOptions opt = {}) {
  if (input.ncols > opt.col_guard)
    fail("dense simplex guard: ", input.ncols, " columns exceeds the limit of ", opt.col_guard);

  // Normalize bounds: shift finite lower bounds to zero, turn finite upper
  // bounds into extra <= rows. The core then solves min c'x, Ax ~ b, x >= 0.
  const int n = input.ncols;
  const int m0 = input.nrows;
  std::vector<double> shift(n, 0.0);
  double obj_constant = input.obj_constant;
  std::vector<double> rhs(input.rhs);
  std::vector<char> sense(input.sense);
  std::vector<Triplet> entries(input.entries);
  for (int c = 0; c < n; ++c) {
    double l = input.lb[c];
    if (std::isinf(l)) fail("dense simplex does not support free variables (column ", input.col_name[c], ")");
    shift[c] = l;
    obj_constant += input.obj[c] * l;
  }
  if (std::any_of(shift.begin(), shift.end(), [](double s) { return s != 0.0; })) {
    for (const Triplet& t : entries) rhs[t.row] -= t.value * shift[t.col];
  }
  int m = m0;
  std::vector<int> ub_row_col;  // which column each appended bound row caps
  for (int c = 0; c < n; ++c) {
    double u = input.ub[c];
    if (is_inf(u)) continue;
    entries.push_back(Triplet{m, c, 1.0});
    rhs.push_back(u - shift[c]);
    sense.push_back('L');
    ub_row_col.push_back(c);
    ++m;
  }
  // Make every RHS nonnegative.
  std::vector<double> row_sign(m, 1.0);
  for (int r = 0; r < m; ++r) {
    if (rhs[r] < 0) {
      row_sign[r] = -1.0;
      rhs[r] = -rhs[r];
      sense[r] = sense[r] == 'L' ? 'G' : (sense[r] == 'G' ? 'L' : 'E');
    }
  }

  // Column layout: [structural | slack/surplus | artificial], then RHS.
  int n_slack = 0, n_art = 0;
  for (int r = 0; r < m; ++r) {
    if (sense[r] != 'E') ++n_slack;
    if (sense[r] != 'L') ++n_art;
  }
  const int slack_base = n;
  const int art_base = n + n_slack;
  const int total = n + n_slack + n_art;
  const int rhs_col = total;

  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Mat tab = Mat::Zero(m, total + 1);
  for (const Triplet& t : entries) tab(t.row, t.col) += row_sign[t.row] * t.value;
  std::vector<int> basis(m, -1);
  std::vector<int> id_col(m, -1);  // the row's original identity column (slack or artificial)
  {
    int s = slack_base, a = art_base;
    for (int r = 0; r < m; ++r) {
      if (sense[r] == 'L') {
        tab(r, s) = 1.0;
        basis[r] = s;
        id_col[r] = s++;
      } else if (sense[r] == 'G') {
        tab(r, s) = -1.0;
        ++s;
        tab(r, a) = 1.0;
        basis[r] = a;
        id_col[r] = a++;
      } else {
        tab(r, a) = 1.0;
        basis[r] = a;
        id_col[r] = a++;
      }
      tab(r, rhs_col) = rhs[r];
    }
  }

  Eigen::RowVectorXd objrow = Eigen::RowVectorXd::Zero(total + 1);
  std::vector<char> enterable(total, 1);
  std::vector<char> in_basis(total, 0);
  for (int r = 0; r < m; ++r) in_basis[basis[r]] = 1;
  SimplexResult res;
  const int max_pivots = opt.max_pivots > 0 ? opt.max_pivots : 2000 + 60 * (m + n);

  auto run = [&](double tol_opt) -> char {
    // Returns 'O' optimal, 'U' unbounded, 'X' pivot-limit.
    int degenerate_streak = 0;
    bool bland = false;
    while (true) {
      int enter = -1;
      double best = -tol_opt;
      for (int c = 0; c < total; ++c) {
        if (!enterable[c] || in_basis[c]) continue;
        double rc = objrow(c);
        if (rc < best) {
          if (bland) {
            enter = c;
            break;
          }
          best = rc;
          enter = c;
        }
      }
      if (enter < 0) return 'O';
      int leave = -1;
      double best_ratio = kInf;
      for (int r = 0; r < m; ++r) {
        double a = tab(r, enter);
        if (a > opt.tol_pivot) {
          double ratio = tab(r, rhs_col) / a;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && (leave < 0 || basis[r] < basis[leave]))) {
            best_ratio = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return 'U';
      if (++res.pivots > max_pivots) return 'X';
      degenerate_streak = best_ratio < 1e-12 ? degenerate_streak + 1 : 0;
      if (degenerate_streak > opt.bland_after) bland = true;
      if (degenerate_streak == 0) bland = false;

      double piv = tab(leave, enter);
      tab.row(leave) /= piv;
      for (int r = 0; r < m; ++r) {
        if (r == leave) continue;
        double f = tab(r, enter);
        if (f != 0.0) tab.row(r) -= f * tab.row(leave);
      }
      double f = objrow(enter);
      if (f != 0.0) objrow -= f * tab.row(leave);
      in_basis[basis[leave]] = 0;
      in_basis[enter] = 1;
      basis[leave] = enter;
    }
  };

  // Phase 1.
  if (n_art > 0) {
    for (int c = art_base; c < total; ++c) objrow(c) = 1.0;
    for (int r = 0; r < m; ++r)
      if (basis[r] >= art_base) objrow -= tab.row(r);
    char st = run(opt.tol_opt);
    if (st == 'X') fail("dense simplex exceeded the pivot limit in phase 1");
    double infeas = -objrow(rhs_col);
    if (st == 'U' || infeas > opt.tol_feas) {
      res.status = SimplexResult::Status::Infeasible;
      return res;
    }
    // Pivot remaining zero-level artificials out where possible; rows that
    // cannot pivot are redundant and stay put harmlessly.
    for (int r = 0; r < m; ++r) {
      if (basis[r] < art_base) continue;
      int enter = -1;
      for (int c = 0; c < art_base; ++c)
        if (std::abs(tab(r, c)) > opt.tol_pivot) {
          enter = c;
          break;
        }
      if (enter < 0) continue;
      double piv = tab(r, enter);
      tab.row(r) /= piv;
      for (int r2 = 0; r2 < m; ++r2) {
        if (r2 == r) continue;
        double f = tab(r2, enter);
        if (f != 0.0) tab.row(r2) -= f * tab.row(r);
      }
      double f = objrow(enter);
      if (f != 0.0) objrow -= f * tab.row(r);
      in_basis[basis[r]] = 0;
      in_basis[enter] = 1;
      basis[r] = enter;
      ++res.pivots;
    }
    for (int c = art_base; c < total; ++c) enterable[c] = 0;
  }

  // Phase 2.
  objrow.setZero();
  for (int c = 0; c < n; ++c) objrow(c) = input.obj[c];
  for (int r = 0; r < m; ++r) {
    int b = basis[r];
    if (b < n && input.obj[b] != 0.0) objrow -= input.obj[b] * tab.row(r);
  }
  char st = run(opt.tol_opt);
  if (st == 'X') fail("dense simplex exceeded the pivot limit in phase 2");
  if (st == 'U') {
    res.status = SimplexResult::Status::Unbounded;
    return res;
  }

  res.status = SimplexResult::Status::Optimal;
  res.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (basis[r] < n) res.x[basis[r]] = tab(r, rhs_col);
  for (int c = 0; c < n; ++c) res.x[c] += shift[c];
  res.objective = obj_constant;
  for (int c = 0; c < n; ++c) res.objective += input.obj[c] * (res.x[c] - shift[c]);
  // Duals: the reduced cost of each row's identity column is -y_i (its
  // phase-2 cost is zero), corrected for the row sign flip.
  res.y.assign(m0, 0.0);
  for (int r = 0; r < m0; ++r) res.y[r] = -objrow(id_col[r]) * row_sign[r];
  return res;
}

// ---------------------------------------------------------------------------
// Link-based LP of the time-expanded graph.
// ---------------------------------------------------------------------------

struct LinkLPColumn {
  int origin_group = -1;  // -1 for aggregate columns
  int arc = -1;
};

struct LinkLPRow {
  enum class Kind { Conservation, Aggregation, Capacity };
  Kind kind = Kind::Conservation;
  int origin_group = -1;  // Conservation only
  int node = -1;          // Conservation only
  int arc = -1;           // Aggregation/Capacity
};

struct LinkLP {
  StandardFormLP lp;
  std::vector<LinkLPColumn> cols;
  std::vector<LinkLPRow> rows;
  std::vector<std::pair<int, std::vector<int>>> groups;  // origin TE node -> commodity ids
  bool presolved = true;
};

/// Materializes the per-origin link-flow LP: conservation at every node,
/// aggregation x_e = sum_i x_ei and a capacity row for each capacitated arc.
/// With presolve on, arcs a given origin cannot route flow over (not forward-
/// reachable from it, or not backward-reachable from its demand sinks) get
/// no variable; this never changes the optimum.
inline LinkLP build_link_lp(const TimeExpandedGraph& g, bool presolve = true) {
  LinkLP out;
  out.presolved = presolve;
  out.groups = origin_groups(g);
  const int n_arcs = static_cast<int>(g.arcs.size());
  const int n_nodes = static_cast<int>(g.nodes.size());
  const int K = static_cast<int>(out.groups.size());

  // Usable arcs per origin group.
  std::vector<std::vector<char>> usable(K, std::vector<char>(n_arcs, 1));
  for (int k = 0; k < K; ++k) {
    if (!presolve) break;
    std::vector<char> reach(n_nodes, 0), coreach(n_nodes, 0);
    reach[out.groups[k].first] = 1;
    for (const TEArc& a : g.arcs)
      if (reach[a.tail]) reach[a.head] = 1;
    for (int c : out.groups[k].second) coreach[g.commodities[c].sink_node] = 1;
    for (int a = n_arcs - 1; a >= 0; --a)
      if (coreach[g.arcs[a].head]) coreach[g.arcs[a].tail] = 1;
    for (int a = 0; a < n_arcs; ++a)
      usable[k][a] = reach[g.arcs[a].tail] && coreach[g.arcs[a].head];
  }

  StandardFormLP& lp = out.lp;
  // Columns: per-origin arc variables, then aggregates for capacitated arcs.
  std::vector<std::vector<int>> xcol(K, std::vector<int>(n_arcs, -1));
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < n_arcs; ++a)
      if (usable[k][a]) {
        xcol[k][a] = lp.add_col(g.arcs[a].cost, concat("X", k, "_", a));
        out.cols.push_back(LinkLPColumn{k, a});
      }
  std::vector<int> acol(n_arcs, -1);
  for (int a = 0; a < n_arcs; ++a) {
    if (is_inf(g.arcs[a].capacity)) continue;
    bool used = false;
    for (int k = 0; k < K; ++k) used |= xcol[k][a] >= 0;
    if (!used) continue;
    acol[a] = lp.add_col(0.0, concat("A", a));
    out.cols.push_back(LinkLPColumn{-1, a});
  }

  // Conservation rows per origin group over nodes incident to usable arcs,
  // plus the origin and sink nodes themselves.
  for (int k = 0; k < K; ++k) {
    std::vector<char> touched(n_nodes, 0);
    touched[out.groups[k].first] = 1;
    std::map<int, double> sink_volume;
    for (int c : out.groups[k].second) {
      touched[g.commodities[c].sink_node] = 1;
      sink_volume[g.commodities[c].sink_node] += g.commodities[c].volume;
    }
    for (int a = 0; a < n_arcs; ++a)
      if (xcol[k][a] >= 0) touched[g.arcs[a].tail] = touched[g.arcs[a].head] = 1;

    std::vector<int> node_row(n_nodes, -1);
    double out_volume = 0;
    for (auto& kv : sink_volume) out_volume += kv.second;
    for (int v = 0; v < n_nodes; ++v) {
      if (!touched[v]) continue;
      double b = 0;
      if (v == out.groups[k].first) b = out_volume;
      auto it = sink_volume.find(v);
      if (it != sink_volume.end()) b -= it->second;  // sink (origin == sink never occurs)
      node_row[v] = lp.add_row('E', b, concat("N", k, "_", v));
      out.rows.push_back(LinkLPRow{LinkLPRow::Kind::Conservation, k, v, -1});
    }
    for (int a = 0; a < n_arcs; ++a) {
      if (xcol[k][a] < 0) continue;
      lp.add_entry(node_row[g.arcs[a].tail], xcol[k][a], 1.0);
      lp.add_entry(node_row[g.arcs[a].head], xcol[k][a], -1.0);
    }
  }

  // Aggregation and capacity rows.
  for (int a = 0; a < n_arcs; ++a) {
    if (acol[a] < 0) continue;
    int agg = lp.add_row('E', 0.0, concat("G", a));
    out.rows.push_back(LinkLPRow{LinkLPRow::Kind::Aggregation, -1, -1, a});
    for (int k = 0; k < K; ++k)
      if (xcol[k][a] >= 0) lp.add_entry(agg, xcol[k][a], 1.0);
    lp.add_entry(agg, acol[a], -1.0);
    int cap = lp.add_row('L', g.arcs[a].capacity, concat("K", a));
    out.rows.push_back(LinkLPRow{LinkLPRow::Kind::Capacity, -1, -1, a});
    lp.add_entry(cap, acol[a], 1.0);
  }
  return out;
}

/// Converts a simplex result on a link LP back to flow space.
inline Solution link_lp_solution(const LinkLP& llp, const SimplexResult& sr, const TimeExpandedGraph& g) {
  Solution sol;
  sol.method = "dense-simplex";
  sol.converged = sr.status == SimplexResult::Status::Optimal;
  sol.iterations = sr.pivots;
  sol.arc_flow.assign(g.arcs.size(), 0.0);
  sol.arc_dual.assign(g.arcs.size(), 0.0);
  if (!sol.converged) {
    sol.diagnosis = sr.status == SimplexResult::Status::Infeasible
                        ? "infeasible: demand exceeds what the horizon and capacities admit"
                        : "unbounded (malformed instance)";
    return sol;
  }
  for (auto& grp : llp.groups) sol.origin_nodes.push_back(grp.first);
  sol.origin_arc_flow.assign(llp.groups.size(), std::vector<double>(g.arcs.size(), 0.0));
  for (std::size_t c = 0; c < llp.cols.size(); ++c) {
    const LinkLPColumn& col = llp.cols[c];
    if (col.origin_group < 0) continue;
    sol.origin_arc_flow[col.origin_group][col.arc] += sr.x[c];
    sol.arc_flow[col.arc] += sr.x[c];
  }
  for (std::size_t r = 0; r < llp.rows.size(); ++r)
    if (llp.rows[r].kind == LinkLPRow::Kind::Capacity)
      sol.arc_dual[llp.rows[r].arc] = std::max(0.0, -sr.y[r]);
  sol.objective = sr.objective;
  sol.dual_value = sr.objective;
  sol.duality_gap = 0.0;
  sol.max_violation = max_capacity_violation(g, sol.arc_flow);
  return sol;
}

// ---------------------------------------------------------------------------
// MPS writer/reader (fixed format, 8-character names; free-format toggle).
// ---------------------------------------------------------------------------

struct MpsNameChange {
  std::string original, exported;
};

struct MpsWriteReport {
  std::vector<MpsNameChange> renamed_rows, renamed_cols;
};

namespace detail {

inline std::string format_mps_value(double v) {
  char buf[40];
  for (int prec : {6, 8, 10, 12, 15, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::vector<std::string> mangle_names(const std::vector<std::string>& names,
                                             std::vector<MpsNameChange>* changes) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const std::string& name : names) {
    std::string cand = name.substr(0, 8);
    int counter = 0;
    while (used.count(cand)) {
      std::string code = std::to_string(counter++);
      cand = name.substr(0, std::max<std::size_t>(1, 7 - code.size())) + "~" + code;
    }
    used.insert(cand);
    if (cand != name && changes) changes->push_back({name, cand});
    out.push_back(std::move(cand));
  }
  return out;
}

inline void mps_pair_line(std::string& s, const std::string& f2, const std::string& f3,
                          const std::string& v3, const std::string* f5, const std::string* v5,
                          bool fixed) {
  auto pad = [&](const std::string& t, std::size_t w) {
    s += t;
    if (fixed && t.size() < w) s.append(w - t.size(), ' ');
  };
  s += "    ";
  pad(f2, 10);
  pad(f3, 10);
  if (f5) {
    pad(v3, 15);
    pad(*f5, 10);
    s += *v5;
  } else {
    s += v3;
  }
  s += '\n';
}

}  // namespace detail

/// Serializes the LP as MPS. Fixed format truncates names to 8 characters
/// with deterministic de-duplication (reported via `report`).
inline std::string export_mps(const StandardFormLP& lp, const std::string& name,
                              bool free_format = false, MpsWriteReport* report = nullptr) {
  std::vector<std::string> rn = lp.row_name, cn = lp.col_name;
  if (!free_format) {
    rn = detail::mangle_names(rn, report ? &report->renamed_rows : nullptr);
    cn = detail::mangle_names(cn, report ? &report->renamed_cols : nullptr);
  }
  std::string s;
  s += "NAME          " + name + "\n";
  s += "ROWS\n";
  s += " N  COST\n";
  for (int r = 0; r < lp.nrows; ++r) {
    s += " ";
    s += lp.sense[r];
    s += "  " + rn[r] + "\n";
  }
  s += "COLUMNS\n";
  // Entries grouped per column, rows in index order.
  std::vector<std::vector<std::pair<int, double>>> by_col(lp.ncols);
  for (const Triplet& t : lp.entries) by_col[t.col].push_back({t.row, t.value});
  for (int c = 0; c < lp.ncols; ++c) {
    auto& v = by_col[c];
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    // merge duplicates
    std::vector<std::pair<std::string, double>> cells;
    if (lp.obj[c] != 0.0 || v.empty()) cells.push_back({"COST", lp.obj[c]});
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      double sum = 0;
      while (j < v.size() && v[j].first == v[i].first) sum += v[j++].second;
      cells.push_back({rn[v[i].first], sum});
      i = j;
    }
    for (std::size_t i = 0; i < cells.size(); i += 2) {
      std::string v3 = detail::format_mps_value(cells[i].second);
      if (i + 1 < cells.size()) {
        std::string v5 = detail::format_mps_value(cells[i + 1].second);
        detail::mps_pair_line(s, cn[c], cells[i].first, v3, &cells[i + 1].first, &v5, !free_format);
      } else {
        detail::mps_pair_line(s, cn[c], cells[i].first, v3, nullptr, nullptr, !free_format);
      }
    }
  }
  s += "RHS\n";
  {
    std::vector<std::pair<std::string, double>> cells;
    for (int r = 0; r < lp.nrows; ++r)
      if (lp.rhs[r] != 0.0) cells.push_back({rn[r], lp.rhs[r]});
    if (lp.obj_constant != 0.0) cells.push_back({"COST", -lp.obj_constant});
    for (std::size_t i = 0; i < cells.size(); i += 2) {
      std::string v3 = detail::format_mps_value(cells[i].second);
      if (i + 1 < cells.size()) {
        std::string v5 = detail::format_mps_value(cells[i + 1].second);
        detail::mps_pair_line(s, "RHS", cells[i].first, v3, &cells[i + 1].first, &v5, !free_format);
      } else {
        detail::mps_pair_line(s, "RHS", cells[i].first, v3, nullptr, nullptr, !free_format);
      }
    }
  }
  s += "RANGES\n";
  s += "BOUNDS\n";
  for (int c = 0; c < lp.ncols; ++c) {
    if (lp.lb[c] == 0.0 && is_inf(lp.ub[c])) continue;
    if (lp.lb[c] == lp.ub[c]) {
      s += " FX BND       " + cn[c] + "  " + detail::format_mps_value(lp.lb[c]) + "\n";
      continue;
    }
    if (lp.lb[c] != 0.0)
      s += " LO BND       " + cn[c] + "  " + detail::format_mps_value(lp.lb[c]) + "\n";
    if (!is_inf(lp.ub[c]))
      s += " UP BND       " + cn[c] + "  " + detail::format_mps_value(lp.ub[c]) + "\n";
  }
  s += "ENDATA\n";
  return s;
}

/// Parses MPS text (both fixed and free layout; whitespace-tokenized).
inline StandardFormLP read_mps(const std::string& text) {
  StandardFormLP lp;
  std::map<std::string, int> row_of, col_of;
  std::string obj_row_name;
  enum Section { None, Rows, Columns, Rhs, Ranges, Bounds, Done } section = None;

  auto get_col = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it != col_of.end()) return it->second;
    int c = lp.add_col(0.0, name);
    col_of.emplace(name, c);
    return c;
  };

  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<int, double>> ranges;  // applied at the end
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty()) continue;

    if (line[0] != ' ') {  // section header
      const std::string& h = tok[0];
      if (h == "NAME")
        section = None;
      else if (h == "ROWS")
        section = Rows;
      else if (h == "COLUMNS")
        section = Columns;
      else if (h == "RHS")
        section = Rhs;
      else if (h == "RANGES")
        section = Ranges;
      else if (h == "BOUNDS")
        section = Bounds;
      else if (h == "ENDATA")
        section = Done;
      else
        fail("unknown MPS section '", h, "'");
      continue;
    }
    switch (section) {
      case Rows: {
        if (tok.size() != 2) fail("bad ROWS line: ", line);
        char sense = static_cast<char>(std::toupper(tok[0][0]));
        if (sense == 'N') {
          if (obj_row_name.empty())
            obj_row_name = tok[1];
          else
            fail("multiple objective (N) rows");
        } else if (sense == 'E' || sense == 'L' || sense == 'G') {
          row_of.emplace(tok[1], lp.add_row(sense, 0.0, tok[1]));
        } else {
          fail("bad row sense in: ", line);
        }
        break;
      }
      case Columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") fail("integer sections are unsupported");
        if (tok.size() != 3 && tok.size() != 5) fail("bad COLUMNS line: ", line);
        int c = get_col(tok[0]);
        for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
          double v = std::strtod(tok[i + 1].c_str(), nullptr);
          if (tok[i] == obj_row_name) {
            lp.obj[c] += v;
          } else {
            auto it = row_of.find(tok[i]);
            if (it == row_of.end()) fail("COLUMNS references unknown row '", tok[i], "'");
            lp.add_entry(it->second, c, v);
          }
        }
        break;
      }
      case Rhs: {
        if (tok.size() != 3 && tok.size() != 5) fail("bad RHS line: ", line);
        for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
          double v = std::strtod(tok[i + 1].c_str(), nullptr);
          if (tok[i] == obj_row_name) {
            lp.obj_constant = -v;
          } else {
            auto it = row_of.find(tok[i]);
            if (it == row_of.end()) fail("RHS references unknown row '", tok[i], "'");
            lp.rhs[it->second] = v;
          }
        }
        break;
      }
      case Ranges: {
        if (tok.size() != 3 && tok.size() != 5) fail("bad RANGES line: ", line);
        for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
          auto it = row_of.find(tok[i]);
          if (it == row_of.end()) fail("RANGES references unknown row '", tok[i], "'");
          ranges.push_back({it->second, std::strtod(tok[i + 1].c_str(), nullptr)});
        }
        break;
      }
      case Bounds: {
        if (tok.size() < 3) fail("bad BOUNDS line: ", line);
        const std::string& kind = tok[0];
        if ((kind == "UP" || kind == "LO" || kind == "FX") && tok.size() < 4)
          fail("bound line needs a value: ", line);
        int c = get_col(tok[2]);
        double v = tok.size() > 3 ? std::strtod(tok[3].c_str(), nullptr) : 0.0;
        if (kind == "UP")
          lp.ub[c] = v;
        else if (kind == "LO")
          lp.lb[c] = v;
        else if (kind == "FX")
          lp.lb[c] = lp.ub[c] = v;
        else if (kind == "PL")
          lp.ub[c] = kInf;
        else if (kind == "MI")
          lp.lb[c] = -kInf;
        else
          fail("unsupported bound type '", kind, "'");
        break;
      }
      case None:
      case Done:
      default:
        break;
    }
  }
  if (obj_row_name.empty()) fail("MPS file has no objective row");
  // Range rows expand into a mirror row bounding the other side.
  for (auto& [r, range] : ranges) {
    double lo, hi;
    if (lp.sense[r] == 'L') {
      hi = lp.rhs[r];
      lo = hi - std::abs(range);
    } else if (lp.sense[r] == 'G') {
      lo = lp.rhs[r];
      hi = lo + std::abs(range);
    } else {
      lo = lp.rhs[r] + std::min(0.0, range);
      hi = lp.rhs[r] + std::max(0.0, range);
    }
    lp.sense[r] = 'L';
    lp.rhs[r] = hi;
    int mirror = lp.add_row('G', lo, lp.row_name[r] + "__lo");
    for (const Triplet& t : std::vector<Triplet>(lp.entries))
      if (t.row == r) lp.add_entry(mirror, t.col, t.value);
  }
  return lp;
}

}  // namespace teflow
