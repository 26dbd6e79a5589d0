#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teflow/common.hpp"
#include "teflow/shortest_path.hpp"
#include "teflow/solution.hpp"
#include "teflow/time_expansion.hpp"

namespace teflow {

struct IterationLogRow {
  int k = 0;
  double dual = 0, primal = 0, gap = 0, max_violation = 0, step = 0;
};

using IterationLog = std::vector<IterationLogRow>;

inline std::string iteration_log_csv(const IterationLog& log) {
  std::string s = "k,dual,primal,gap,max_violation,step\n";
  char buf[160];
  for (const IterationLogRow& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.k, r.dual, r.primal,
                  r.gap, r.max_violation, r.step);
    s += buf;
  }
  return s;
}

struct CGOptions {
  double tol_reduced_cost = 1e-9;  // pricing optimality tolerance
  double tol_feas = 1e-7;          // artificial flow at termination => infeasible
  int max_rounds = 100000;
  int evict_after = 20;    // master solves a column may stay at zero flow
  bool prune_rows = true;  // capacity rows only for arcs active paths touch
  int bland_after = 40;
  int refactor_every = 64;
};

namespace cg_detail {

// Restricted master: equality rows (one per commodity, one per active
// capacitated arc with an explicit slack), columns = artificials + paths +
// slacks. Solved by a small revised simplex with a dense basis inverse.
class RestrictedMaster {
 public:
  enum class ColType { Artificial, Path, Slack };
  struct Column {
    ColType type;
    int commodity = -1;       // Artificial/Path
    int cap_arc = -1;         // Slack: the arc of its capacity row
    double cost = 0.0;
    std::vector<int> arcs;    // Path only
    std::vector<int> cap_arcs;  // capacitated arcs on the path
    int zero_streak = 0;
    bool basic = false;
    double flow = 0.0;
  };

  RestrictedMaster(const TimeExpandedGraph& g, const CGOptions& opt) : g_(g), opt_(opt) {
    const int K = static_cast<int>(g.commodities.size());
    double worst = 1.0;
    for (const ArrivalCostParams& p : g.classes) worst = std::max({worst, p.alpha, p.beta});
    big_m_ = 10.0 * g.T() * g.grid.dt * (1.0 + worst);
    for (int k = 0; k < K; ++k) {
      Column art;
      art.type = ColType::Artificial;
      art.commodity = k;
      art.cost = big_m_;
      art.basic = true;
      cols_.push_back(art);
      basis_.push_back(k);
    }
    if (!opt.prune_rows) {
      for (int a = 0; a < static_cast<int>(g.arcs.size()); ++a)
        if (!is_inf(g.arcs[a].capacity)) add_capacity_row(a);
    }
    refactorize();
  }

  int rows() const { return static_cast<int>(g_.commodities.size() + cap_rows_.size()); }
  double big_m() const { return big_m_; }
  const std::vector<Column>& columns() const { return cols_; }

  // price of capacitated arc a under the current duals (0 if not rowed)
  double arc_price(int a) const {
    auto it = cap_row_of_.find(a);
    if (it == cap_row_of_.end()) return 0.0;
    return std::max(0.0, -y_[g_.commodities.size() + it->second]);
  }
  double sigma(int k) const { return y_[k]; }

  void add_path_column(int commodity, std::vector<int> arcs, double cost) {
    Column col;
    col.type = ColType::Path;
    col.commodity = commodity;
    col.cost = cost;
    col.arcs = std::move(arcs);
    for (int a : col.arcs)
      if (!is_inf(g_.arcs[a].capacity)) {
        col.cap_arcs.push_back(a);
        if (!cap_row_of_.count(a)) add_capacity_row(a);
      }
    cols_.push_back(std::move(col));
  }

  bool has_path(int commodity, const std::vector<int>& arcs) const {
    for (const Column& c : cols_)
      if (c.type == ColType::Path && c.commodity == commodity && c.arcs == arcs) return true;
    return false;
  }

  // Solves the master to optimality; returns pivot count.
  int solve() {
    refactorize();
    int pivots = 0, degenerate_streak = 0;
    bool bland = false;
    const int m = rows();
    while (true) {
      compute_duals();
      int enter = -1;
      double best = -opt_.tol_reduced_cost;
      for (int c = 0; c < static_cast<int>(cols_.size()); ++c) {
        if (cols_[c].basic) continue;
        double rc = cols_[c].cost - dual_dot(cols_[c]);
        if (rc < best) {
          enter = c;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) break;
      Eigen::VectorXd a = dense_column(cols_[enter]);
      Eigen::VectorXd d = binv_ * a;
      int leave = -1;
      double best_ratio = kInf;
      for (int r = 0; r < m; ++r) {
        if (d(r) > 1e-9) {
          double ratio = xb_(r) / d(r);
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && (leave < 0 || basis_[r] < basis_[leave]))) {
            best_ratio = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) fail("restricted master is unbounded (internal error)");
      if (++pivots > 2000 + 40 * m + static_cast<int>(cols_.size()))
        fail("restricted master cycling guard tripped");
      degenerate_streak = best_ratio < 1e-12 ? degenerate_streak + 1 : 0;
      bland = degenerate_streak > opt_.bland_after;

      // elementary row update of the basis inverse
      Eigen::VectorXd brow = binv_.row(leave);
      double piv = d(leave);
      binv_.row(leave) /= piv;
      xb_(leave) /= piv;
      for (int r = 0; r < m; ++r) {
        if (r == leave || d(r) == 0.0) continue;
        binv_.row(r) -= d(r) * binv_.row(leave);
        xb_(r) -= d(r) * xb_(leave);
      }
      cols_[basis_[leave]].basic = false;
      cols_[enter].basic = true;
      basis_[leave] = enter;
      if (pivots % opt_.refactor_every == 0) refactorize();
    }
    // publish flows
    for (Column& c : cols_) c.flow = 0.0;
    for (int r = 0; r < m; ++r) cols_[basis_[r]].flow = std::max(0.0, xb_(r));
    compute_duals();
    return pivots;
  }

  double objective(bool include_artificials) const {
    double s = 0;
    for (const Column& c : cols_)
      if (include_artificials || c.type != ColType::Artificial) s += c.cost * c.flow;
    return s;
  }

  double artificial_flow() const {
    double s = 0;
    for (const Column& c : cols_)
      if (c.type == ColType::Artificial) s += c.flow;
    return s;
  }

  // Drops long-unused nonbasic path columns and capacity rows no pool path
  // touches; the basis itself is never disturbed.
  void evict() {
    bool any = false;
    for (Column& c : cols_) {
      if (c.type != ColType::Path) continue;
      c.zero_streak = c.flow > 1e-12 || c.basic ? 0 : c.zero_streak + 1;
      any |= !c.basic && c.zero_streak >= opt_.evict_after;
    }
    if (!any && !opt_.prune_rows) return;
    if (any) {
      std::vector<Column> kept;
      std::vector<int> new_index(cols_.size(), -1);
      for (int c = 0; c < static_cast<int>(cols_.size()); ++c) {
        if (cols_[c].type == ColType::Path && !cols_[c].basic &&
            cols_[c].zero_streak >= opt_.evict_after)
          continue;
        new_index[c] = static_cast<int>(kept.size());
        kept.push_back(std::move(cols_[c]));
      }
      cols_ = std::move(kept);
      for (int& b : basis_) b = new_index[b];
    }

    if (opt_.prune_rows) {
      // A capacity row whose arc no pool path uses is removable: its slack is
      // then the only column covering the row, hence necessarily basic.
      std::vector<char> arc_used(g_.arcs.size(), 0);
      for (const Column& c : cols_)
        if (c.type == ColType::Path)
          for (int a : c.cap_arcs) arc_used[a] = 1;
      for (auto it = cap_row_of_.begin(); it != cap_row_of_.end();) {
        if (arc_used[it->first]) {
          ++it;
          continue;
        }
        int slack_col = -1;
        for (int c = 0; c < static_cast<int>(cols_.size()); ++c)
          if (cols_[c].type == ColType::Slack && cols_[c].cap_arc == it->first) slack_col = c;
        int slack_pos = -1;
        for (int p = 0; p < static_cast<int>(basis_.size()); ++p)
          if (basis_[p] == slack_col) slack_pos = p;
        if (slack_col < 0 || slack_pos < 0) {  // cannot happen with a sane basis
          ++it;
          continue;
        }
        basis_.erase(basis_.begin() + slack_pos);
        std::vector<int> idx(cols_.size(), -1);
        int w = 0;
        for (int c = 0; c < static_cast<int>(cols_.size()); ++c)
          if (c != slack_col) idx[c] = w++;
        cols_.erase(cols_.begin() + slack_col);
        for (int& b : basis_) b = idx[b];
        int gone = it->second;
        cap_rows_.erase(cap_rows_.begin() + gone);
        it = cap_row_of_.erase(it);
        for (auto& kv : cap_row_of_)
          if (kv.second > gone) kv.second--;
      }
    }
    refactorize();
  }

 private:
  void add_capacity_row(int arc) {
    cap_row_of_[arc] = static_cast<int>(cap_rows_.size());
    cap_rows_.push_back(arc);
    Column slack;
    slack.type = ColType::Slack;
    slack.cap_arc = arc;
    slack.cost = 0.0;
    slack.basic = true;
    cols_.push_back(slack);
    basis_.push_back(static_cast<int>(cols_.size()) - 1);
  }

  Eigen::VectorXd dense_column(const Column& c) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(rows());
    const int K = static_cast<int>(g_.commodities.size());
    switch (c.type) {
      case ColType::Artificial:
      case ColType::Path:
        a(c.commodity) = 1.0;
        for (int arc : c.cap_arcs) a(K + cap_row_of_.at(arc)) = 1.0;
        break;
      case ColType::Slack:
        a(K + cap_row_of_.at(c.cap_arc)) = 1.0;
        break;
    }
    return a;
  }

  double dual_dot(const Column& c) const {
    const int K = static_cast<int>(g_.commodities.size());
    double s = 0;
    switch (c.type) {
      case ColType::Artificial:
      case ColType::Path:
        s = y_[c.commodity];
        for (int arc : c.cap_arcs) s += y_[K + cap_row_of_.at(arc)];
        break;
      case ColType::Slack:
        s = y_[K + cap_row_of_.at(c.cap_arc)];
        break;
    }
    return s;
  }

  void compute_duals() {
    const int m = rows();
    Eigen::VectorXd cb(m);
    for (int r = 0; r < m; ++r) cb(r) = cols_[basis_[r]].cost;
    Eigen::VectorXd y = binv_.transpose() * cb;
    y_.assign(y.data(), y.data() + m);
  }

  void refactorize() {
    const int m = rows();
    Eigen::MatrixXd B(m, m);
    for (int r = 0; r < m; ++r) B.col(r) = dense_column(cols_[basis_[r]]);
    binv_ = B.partialPivLu().inverse();
    Eigen::VectorXd b(m);
    const int K = static_cast<int>(g_.commodities.size());
    for (int k = 0; k < K; ++k) b(k) = g_.commodities[k].volume;
    for (int r = 0; r < static_cast<int>(cap_rows_.size()); ++r)
      b(K + r) = g_.arcs[cap_rows_[r]].capacity;
    xb_ = binv_ * b;
  }

  const TimeExpandedGraph& g_;
  CGOptions opt_;
  double big_m_ = 0;
  std::vector<Column> cols_;
  std::vector<int> basis_;  // basis_[row] = column index
  std::vector<int> cap_rows_;  // row -> arc
  std::map<int, int> cap_row_of_;  // arc -> cap row rank
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  std::vector<double> y_;
};

}  // namespace cg_detail

/// Path-based column generation (restricted-master simplex with shortest-path
/// pricing). Returns native path flows.
inline Solution solve_column_generation(const TimeExpandedGraph& g, CGOptions opt = {},
                                        IterationLog* log = nullptr) {
  cg_detail::RestrictedMaster master(g, opt);
  Solution sol;
  sol.method = "column-generation";
  sol.arc_flow.assign(g.arcs.size(), 0.0);
  sol.arc_dual.assign(g.arcs.size(), 0.0);
  auto groups = origin_groups(g);
  for (auto& grp : groups) sol.origin_nodes.push_back(grp.first);

  if (g.commodities.empty()) {
    sol.converged = true;
    return sol;
  }

  double total_volume = 0;
  for (const Commodity& c : g.commodities) total_volume += c.volume;

  int round = 0;
  double lagrangian = -kInf;
  for (round = 1; round <= opt.max_rounds; ++round) {
    master.solve();

    // Pricing: per-origin trees under base + current congestion prices.
    CostVector costs(g.arcs.size());
    for (std::size_t a = 0; a < g.arcs.size(); ++a) costs[a] = g.arcs[a].cost + master.arc_price(a);
    int added = 0;
    double price_bound = 0;  // Lagrangian value at these prices
    for (std::size_t a = 0; a < g.arcs.size(); ++a)
      if (!is_inf(g.arcs[a].capacity)) price_bound -= master.arc_price(a) * g.arcs[a].capacity;
    bool all_reachable = true;
    for (auto& [origin, commodity_ids] : groups) {
      PathTree tree = shortest_tree(g, costs, origin);
      for (int k : commodity_ids) {
        const Commodity& c = g.commodities[k];
        if (tree.dist[c.sink_node] == kInf) {
          all_reachable = false;
          continue;
        }
        price_bound += c.volume * tree.dist[c.sink_node];
        double rc = tree.dist[c.sink_node] - master.sigma(k);
        if (rc < -opt.tol_reduced_cost) {
          std::vector<int> arcs = extract_path(g, tree, c.sink_node);
          double base_cost = 0;
          for (int a : arcs) base_cost += g.arcs[a].cost;  // T_p without prices
          if (!master.has_path(k, arcs)) {
            master.add_path_column(k, std::move(arcs), base_cost);
            ++added;
          }
        }
      }
    }
    if (all_reachable) lagrangian = std::max(lagrangian, price_bound);
    if (log) {
      // the full master objective (artificials included) is the monotone one
      double primal = master.objective(true);
      log->push_back({round, lagrangian, primal, primal - lagrangian, 0.0,
                      static_cast<double>(added)});
    }
    if (added == 0) break;
    master.evict();
  }

  // Harvest the final master.
  double artificial = master.artificial_flow();
  sol.iterations = round;
  for (const auto& col : master.columns()) {
    if (col.type != cg_detail::RestrictedMaster::ColType::Path || col.flow <= 1e-12) continue;
    PathFlow p;
    p.commodity = col.commodity;
    p.arcs = col.arcs;
    p.flow = col.flow;
    p.cost = col.cost;
    sol.paths.push_back(p);
    for (int a : col.arcs) sol.arc_flow[a] += col.flow;
  }
  std::map<int, int> group_of_origin;
  for (int k = 0; k < static_cast<int>(groups.size()); ++k) group_of_origin[groups[k].first] = k;
  sol.origin_arc_flow.assign(groups.size(), std::vector<double>(g.arcs.size(), 0.0));
  for (const PathFlow& p : sol.paths) {
    int grp = group_of_origin.at(g.commodities[p.commodity].origin_node);
    for (int a : p.arcs) sol.origin_arc_flow[grp][a] += p.flow;
  }
  for (std::size_t a = 0; a < g.arcs.size(); ++a) sol.arc_dual[a] = master.arc_price(static_cast<int>(a));
  sol.objective = master.objective(false);
  sol.dual_value = lagrangian == -kInf ? sol.objective : lagrangian;
  sol.duality_gap = sol.objective - sol.dual_value;
  sol.max_violation = max_capacity_violation(g, sol.arc_flow);

  if (artificial > opt.tol_feas * std::max(1.0, total_volume)) {
    sol.converged = false;
    sol.diagnosis = concat("infeasible: ", artificial,
                           " vehicles could not be routed (artificial columns remain basic)");
  } else {
    sol.converged = true;
  }
  return sol;
}

}  // namespace teflow
