// teflow: user-equilibrium dynamic traffic assignment on time-expanded
// networks. Subcommands: expand, solve, audit, toy, export-lp, report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "teflow/audit.hpp"
#include "teflow/bottleneck.hpp"
#include "teflow/column_generation.hpp"
#include "teflow/demand.hpp"
#include "teflow/lp.hpp"
#include "teflow/network.hpp"
#include "teflow/profiles.hpp"
#include "teflow/solution.hpp"
#include "teflow/subgradient.hpp"
#include "teflow/time_expansion.hpp"
#include "teflow/toy_instance.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) teflow::fail("file not found: ", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) teflow::fail("cannot write ", path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

void spill_json(const fs::path& path, const ordered_json& doc) { spill(path, doc.dump(2)); }

int env_threads() {
  const char* v = std::getenv("TEFLOW_THREADS");
  if (!v) return 1;
  int n = std::atoi(v);
  return n > 0 ? n : 1;
}

void print_diagnostics(const teflow::Diagnostics& diags) {
  for (const teflow::Diagnostic& d : diags)
    std::cerr << (d.severity == teflow::Severity::Error ? "error" : "warning") << " [" << d.code
              << "] " << d.message << "\n";
}

struct RunConfig {
  std::string network_path;
  std::string demands_path;
  double dt = 1.0;
  std::vector<double> horizon;  // start, end (minutes)
  double alpha = 2.0;
  double beta = 0.5;
  std::string method = "dual-subgradient";
  bool exact = false;
  int max_iter = 5000;
  double tol = 1e-3;
  std::string out_dir = ".";
  unsigned seed = 0;  // reserved: every current method is deterministic
  int arrival_window = -1;
  bool repair = false;
  std::string step_rule = "sqrt";
  double eta0 = 0.0;
  double polyak_target = std::numeric_limits<double>::quiet_NaN();

  void add_instance_flags(CLI::App* cmd, bool demands_required = true) {
    cmd->add_option("-n,--network", network_path, "network JSON document")->required();
    cmd->add_option("-d,--demands", demands_path, "demands CSV")->required(demands_required);
    cmd->add_option("--dt", dt, "time quant in minutes")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", horizon, "horizon start and end, minutes")->expected(2)->required();
    cmd->add_option("--alpha", alpha, "cost per minute late");
    cmd->add_option("--beta", beta, "cost per minute early");
    cmd->add_option("--arrival-window", arrival_window,
                    "max |actual-desired| in quants for arrival arcs (-1 = full horizon)");
  }

  void add_solver_flags(CLI::App* cmd) {
    cmd->add_option("-m,--method", method, "dual-subgradient | column-generation | dense-simplex")
        ->check(CLI::IsMember({"dual-subgradient", "column-generation", "dense-simplex"}));
    cmd->add_flag("--exact", exact, "prefer the dense simplex when the size guard permits");
    cmd->add_option("--max-iter", max_iter, "subgradient iteration budget");
    cmd->add_option("--tol", tol, "relative gap/violation tolerance");
    cmd->add_option("--seed", seed, "reserved; current methods are deterministic");
    cmd->add_flag("--repair", repair, "subgradient: repair the averaged flows to feasibility");
    cmd->add_option("--step-rule", step_rule, "subgradient step rule: sqrt | constant | polyak")
        ->check(CLI::IsMember({"sqrt", "constant", "polyak"}));
    cmd->add_option("--eta0", eta0, "subgradient base step (0 = auto calibration)");
    cmd->add_option("--polyak-target", polyak_target, "dual target for the polyak step rule");
  }

  struct Instance {
    teflow::TransportNetwork expanded;
    teflow::DemandTable demands;
    teflow::TimeGrid grid;
    teflow::QuantizedInstance quantized;
    teflow::TimeExpandedGraph graph;
  };

  Instance build(bool literal_roads = false) const {
    Instance inst;
    teflow::TransportNetwork raw = teflow::load_network(slurp(network_path));
    teflow::Diagnostics diags;
    inst.expanded = teflow::expand_junctions(raw, &diags);
    print_diagnostics(diags);
    inst.demands.params = {alpha, beta};
    if (!demands_path.empty())
      inst.demands = teflow::load_demands(slurp(demands_path), {alpha, beta}, inst.expanded);
    inst.grid = teflow::TimeGrid::make(dt, horizon[0], horizon[1]);
    inst.quantized = teflow::quantize(inst.expanded, inst.demands, inst.grid);
    print_diagnostics(inst.quantized.warnings);
    teflow::BuildOptions bopt;
    bopt.literal_road_expansion = literal_roads;
    bopt.arrival_window = arrival_window;
    teflow::Diagnostics build_diags;
    inst.graph = teflow::build_time_expanded(inst.quantized, bopt, &build_diags);
    print_diagnostics(build_diags);
    return inst;
  }
};

teflow::Solution dispatch_solve(const RunConfig& cfg, const teflow::TimeExpandedGraph& graph,
                                teflow::IterationLog* log) {
  std::string method = cfg.method;
  if (cfg.exact) {
    // column count of the link LP decides whether the oracle may run
    teflow::LinkLP probe = teflow::build_link_lp(graph);
    if (probe.lp.ncols <= 5000) method = "dense-simplex";
  }
  if (method == "dense-simplex") {
    teflow::LinkLP llp = teflow::build_link_lp(graph);
    teflow::SimplexResult res = teflow::dense_simplex(llp.lp);
    teflow::Solution sol = teflow::link_lp_solution(llp, res, graph);
    if (log)
      log->push_back({res.pivots, sol.dual_value, sol.objective, sol.duality_gap, sol.max_violation, 0.0});
    return sol;
  }
  if (method == "column-generation") {
    teflow::CGOptions opt;
    opt.max_rounds = cfg.max_iter > 0 ? std::max(cfg.max_iter, 1000) : 100000;
    return teflow::solve_column_generation(graph, opt, log);
  }
  teflow::SubgradOptions opt;
  opt.max_iter = cfg.max_iter;
  opt.tol = cfg.tol;
  opt.repair = cfg.repair;
  opt.eta0 = cfg.eta0;
  opt.threads = env_threads();
  opt.polyak_target = cfg.polyak_target;
  if (cfg.step_rule == "constant") opt.step_rule = teflow::StepRule::Constant;
  if (cfg.step_rule == "polyak") opt.step_rule = teflow::StepRule::Polyak;
  return teflow::solve_dual_subgradient(graph, opt, log);
}

teflow::AuditOptions audit_options_for(const teflow::Solution& sol, double tol_feas, double tol_cost,
                                       double tol_avail, bool strict) {
  teflow::AuditOptions opt;
  if (tol_feas > 0) opt.tol_feas = tol_feas;
  if (tol_cost > 0) opt.tol_cost = tol_cost;
  opt.tol_avail = tol_avail;
  if (!strict && sol.method == "dual-subgradient") {
    // inexact flows: widen by the solver's own certified gap
    opt.gap_allowance = std::max(0.0, sol.duality_gap);
    opt.tol_feas = std::max(opt.tol_feas, sol.max_violation * (1 + 1e-9) + 1e-12);
  }
  return opt;
}

int cmd_expand(const std::string& network_path, const std::string& out_path,
               const std::string& diag_path) {
  teflow::TransportNetwork raw = teflow::load_network(slurp(network_path));
  teflow::Diagnostics diags;
  teflow::TransportNetwork net = teflow::expand_junctions(raw, &diags);
  teflow::Diagnostics structural = teflow::validate_network(net);
  diags.insert(diags.end(), structural.begin(), structural.end());
  print_diagnostics(diags);
  if (!out_path.empty())
    spill_json(out_path, teflow::to_json(net));
  else
    std::cout << teflow::to_json(net).dump(2) << "\n";
  if (!diag_path.empty()) {
    ordered_json jd = ordered_json::array();
    for (const teflow::Diagnostic& d : diags)
      jd.push_back({{"severity", d.severity == teflow::Severity::Error ? "error" : "warning"},
                    {"code", d.code},
                    {"message", d.message}});
    spill_json(diag_path, jd);
  }
  return 0;
}

int cmd_solve(const RunConfig& cfg) {
  RunConfig::Instance inst = cfg.build();
  teflow::IterationLog log;
  teflow::Solution sol = dispatch_solve(cfg, inst.graph, &log);

  fs::path out(cfg.out_dir);
  spill_json(out / "solution.json", teflow::write_solution_json(sol, inst.graph));
  spill(out / "iterations.csv", teflow::iteration_log_csv(log));
  teflow::AuditReport rep =
      teflow::audit_solution(sol, inst.graph, audit_options_for(sol, -1, -1, -1, false));
  spill_json(out / "audit.json", teflow::to_json(rep, inst.graph));

  std::cout << "method: " << sol.method << "\n"
            << "objective: " << sol.objective << "\n"
            << "dual bound: " << sol.dual_value << "\n"
            << "duality gap: " << sol.duality_gap << "\n"
            << "max capacity violation: " << sol.max_violation << "\n"
            << "converged: " << (sol.converged ? "yes" : "no") << "\n"
            << "audit: " << (rep.pass() ? "pass" : "fail") << "\n";
  if (!sol.diagnosis.empty()) std::cout << "note: " << sol.diagnosis << "\n";
  return sol.converged && rep.pass() ? 0 : 2;
}

int cmd_audit(const RunConfig& cfg, const std::string& solution_path, const std::string& out_path,
              double tol_feas, double tol_cost, double tol_avail, bool strict) {
  RunConfig::Instance inst = cfg.build();
  nlohmann::json doc = nlohmann::json::parse(slurp(solution_path));
  teflow::Solution sol = teflow::read_solution_json(doc, inst.graph);
  teflow::AuditReport rep = teflow::audit_solution(
      sol, inst.graph, audit_options_for(sol, tol_feas, tol_cost, tol_avail, strict));
  ordered_json jr = teflow::to_json(rep, inst.graph);
  if (!out_path.empty())
    spill_json(out_path, jr);
  else
    std::cout << jr.dump(2) << "\n";
  return rep.pass() ? 0 : 2;
}

int cmd_toy(const teflow::BottleneckScenario& s, bool compare_discrete, const std::string& profile_csv,
            double dt, std::vector<double> horizon, const std::string& method) {
  teflow::AnalyticEquilibrium eq = teflow::solve_analytic(s);
  teflow::SystemOptimum so = teflow::system_optimum(s);
  ordered_json doc;
  doc["scenario"] = {{"n_cars", s.n_cars},      {"capacity", s.cap},   {"t_free", s.t_free},
                     {"t_desired", s.t_desired}, {"alpha", s.params.alpha}, {"beta", s.params.beta}};
  doc["equilibrium"] = {{"t1", eq.t1},
                        {"t2", eq.t2},
                        {"t3", eq.t3},
                        {"n1", eq.n1},
                        {"n2", eq.n2},
                        {"cost_per_driver", eq.cost_per_driver},
                        {"total_cost", eq.cost_per_driver * s.n_cars}};
  doc["system_optimum"] = {{"arrival_window", {so.window_start, so.window_end}},
                           {"early_span", so.early_span},
                           {"late_span", so.late_span},
                           {"total_cost", so.total_cost}};
  if (compare_discrete) {
    if (horizon.empty()) {
      double spread = s.n_cars / s.cap;
      horizon = {std::floor(eq.t1 - s.t_free - 0.25 * spread - 10),
                 std::ceil(s.t_desired + 0.75 * spread + 10)};
    }
    teflow::ToyInstance toy = teflow::build_toy_instance(s, dt, horizon[0], horizon[1]);
    RunConfig cfg;
    cfg.method = method;
    cfg.max_iter = 5000;
    cfg.tol = 5e-3;
    cfg.repair = true;
    teflow::Solution sol = dispatch_solve(cfg, toy.graph, nullptr);
    doc["discrete"] = {{"method", sol.method},
                       {"dt", dt},
                       {"horizon", {horizon[0], horizon[1]}},
                       {"lp_total_cost", sol.objective},
                       {"equilibrium_total_cost", eq.cost_per_driver * s.n_cars},
                       {"converged", sol.converged}};
  }
  std::cout << doc.dump(2) << "\n";
  if (!profile_csv.empty()) {
    std::string csv = "t,rate\n";
    double lo = eq.t1 - 5, hi = eq.t3 + 5;
    for (double t = lo; t <= hi + 1e-9; t += dt)
      csv += teflow::detail::csv_num(t) + "," + teflow::detail::csv_num(teflow::departure_rate(s, t)) + "\n";
    spill(profile_csv, csv);
  }
  return 0;
}

int cmd_export_lp(const RunConfig& cfg, const std::string& mps_path, bool free_format,
                  const std::string& report_path) {
  RunConfig::Instance inst = cfg.build();
  teflow::LinkLP llp = teflow::build_link_lp(inst.graph);
  teflow::MpsWriteReport name_report;
  std::string mps = teflow::export_mps(llp.lp, "teflow", free_format, &name_report);
  spill(mps_path, mps);
  ordered_json rep = teflow::lp_build_report(llp.lp);
  rep["renamed_rows"] = name_report.renamed_rows.size();
  rep["renamed_cols"] = name_report.renamed_cols.size();
  std::cout << rep.dump(2) << "\n";
  if (!report_path.empty()) spill_json(report_path, rep);
  return 0;
}

int cmd_report(const std::string& solution_path, const std::string& out_dir) {
  nlohmann::json doc = nlohmann::json::parse(slurp(solution_path));
  teflow::ProfileCsvs csvs = teflow::build_profiles(doc);
  fs::path out(out_dir);
  spill(out / "departures.csv", csvs.departures);
  spill(out / "arrivals.csv", csvs.arrivals);
  spill(out / "loading.csv", csvs.loading);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"user-equilibrium dynamic traffic assignment on time-expanded networks"};
  app.require_subcommand(1);

  // expand
  std::string ex_network, ex_out, ex_diag;
  CLI::App* expand = app.add_subcommand("expand", "validate a network and split its junctions");
  expand->add_option("-n,--network", ex_network)->required();
  expand->add_option("-o,--out", ex_out, "write the expanded network here (default: stdout)");
  expand->add_option("--diagnostics-json", ex_diag);

  // solve
  RunConfig solve_cfg;
  CLI::App* solve = app.add_subcommand("solve", "solve for the equilibrium assignment");
  solve_cfg.add_instance_flags(solve);
  solve_cfg.add_solver_flags(solve);
  solve->add_option("-o,--out", solve_cfg.out_dir, "output directory");

  // audit
  RunConfig audit_cfg;
  std::string audit_solution_path, audit_out;
  double audit_tol_feas = -1, audit_tol_cost = -1, audit_tol_avail = -1;
  bool audit_strict = false;
  CLI::App* audit = app.add_subcommand("audit", "re-check a solution file");
  audit_cfg.add_instance_flags(audit);
  audit->add_option("-s,--solution", audit_solution_path)->required();
  audit->add_option("-o,--out", audit_out, "audit report path (default: stdout)");
  audit->add_option("--tol-feas", audit_tol_feas);
  audit->add_option("--tol-cost", audit_tol_cost);
  audit->add_option("--tol-avail", audit_tol_avail);
  audit->add_flag("--strict", audit_strict, "no gap-based relaxation for inexact solvers");

  // toy
  teflow::BottleneckScenario scenario{1800, 30, 20, 540, {2.0, 0.5}};
  bool toy_compare = false;
  std::string toy_profile, toy_method = "dense-simplex";
  double toy_dt = 1.0;
  std::vector<double> toy_horizon;
  CLI::App* toy = app.add_subcommand("toy", "closed-form single-bottleneck equilibrium");
  toy->add_option("--n-cars", scenario.n_cars);
  toy->add_option("--capacity", scenario.cap, "bottleneck throughput, vehicles per minute");
  toy->add_option("--t-free", scenario.t_free);
  toy->add_option("--t-desired", scenario.t_desired);
  toy->add_option("--alpha", scenario.params.alpha);
  toy->add_option("--beta", scenario.params.beta);
  toy->add_flag("--compare-discrete", toy_compare, "also solve the discretized instance");
  toy->add_option("--profile-csv", toy_profile, "write the departure-rate profile here");
  toy->add_option("--dt", toy_dt);
  toy->add_option("--horizon", toy_horizon)->expected(2);
  toy->add_option("--method", toy_method, "solver for --compare-discrete")
      ->check(CLI::IsMember({"dual-subgradient", "column-generation", "dense-simplex"}));

  // export-lp
  RunConfig lp_cfg;
  std::string lp_mps = "model.mps", lp_report;
  bool lp_free = false;
  CLI::App* export_lp = app.add_subcommand("export-lp", "write the link-based LP as MPS");
  lp_cfg.add_instance_flags(export_lp);
  export_lp->add_option("-o,--out", lp_mps, "MPS output path");
  export_lp->add_flag("--free-format", lp_free);
  export_lp->add_option("--report", lp_report, "LP dimension report JSON");

  // report
  std::string rep_solution, rep_out = ".";
  CLI::App* report = app.add_subcommand("report", "departure/arrival/loading CSVs from a solution");
  report->add_option("-s,--solution", rep_solution)->required();
  report->add_option("-o,--out", rep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (expand->parsed()) return cmd_expand(ex_network, ex_out, ex_diag);
    if (solve->parsed()) return cmd_solve(solve_cfg);
    if (audit->parsed())
      return cmd_audit(audit_cfg, audit_solution_path, audit_out, audit_tol_feas, audit_tol_cost,
                       audit_tol_avail, audit_strict);
    if (toy->parsed())
      return cmd_toy(scenario, toy_compare, toy_profile, toy_dt, toy_horizon, toy_method);
    if (export_lp->parsed()) return cmd_export_lp(lp_cfg, lp_mps, lp_free, lp_report);
    if (report->parsed()) return cmd_report(rep_solution, rep_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
