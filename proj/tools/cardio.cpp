// Command-line driver: simulate, optimize and verify from an INI config.

#include "cardio/errors.hpp"
#include "cardio/io.hpp"
#include "cardio/scenario.hpp"
#include "cardio/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cardio;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int levels = 3;
  std::string scales = "1,0.5,0.25,0.125";
};

class Run {
 public:
  Run(const Options& opt) : opt_(opt) {
    std::vector<std::string> warnings;
    scenario_ = parse_config(opt.config, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (opt.seed_given) scenario_.seed = opt.seed;
    out_ = opt.out.empty() ? fs::path(scenario_.out_dir) : fs::path(opt.out);
    fs::create_directories(out_);
  }

  const Scenario& scenario() const { return scenario_; }
  ControlProblem problem() const { return scenario_.instantiate(); }
  fs::path path(const std::string& name) const { return out_ / name; }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(path(name));
    if (!f) throw ConfigError("output: cannot write " + path(name).string());
    f << std::setprecision(17);
    return f;
  }

  void summary(const std::vector<std::pair<std::string, std::string>>& lines) const {
    auto f = open("summary.txt");
    for (const auto& [k, v] : lines) {
      f << k << ": " << v << "\n";
      std::cout << k << ": " << v << "\n";
    }
  }

  void report(const std::string& name, const NormReport& r) const {
    auto f = open(name);
    write_norm_report(f, r);
  }

 private:
  Options opt_;
  Scenario scenario_;
  fs::path out_;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("--scales: expected comma-separated numbers, got '" + text + "'");
    }
  }
  return out;
}

int cmd_simulate(const Run& run) {
  const ControlProblem p = run.problem();
  const ForwardResult res = run_forward(p.config);
  const Grid& g = p.config.grid();
  write_snapshot(run.path("phi_tr.bdmf"), g, res.trajectory.phi_tr);
  write_snapshot(run.path("w.bdmf"), g, res.trajectory.w);
  if (p.config.kind == SystemKind::Bidomain) write_snapshot(run.path("phi_e.bdmf"), g, res.trajectory.phi_e);
  {
    auto f = run.open("phi_tr_final.csv");
    write_field_csv(f, g, res.trajectory.phi_tr.col(g.n_steps()));
  }
  run.report("norms.json", res.report);
  std::vector<std::pair<std::string, std::string>> lines{{"system", to_string(p.config.kind)},
                                                         {"ionic", to_string(p.config.ionic.kind)},
                                                         {"nodes", std::to_string(g.node_count())},
                                                         {"steps", std::to_string(g.n_steps())}};
  for (const auto& [k, v] : res.report) lines.emplace_back(k, num(v));
  run.summary(lines);
  return 0;
}

int cmd_adjoint(const Run& run) {
  const ControlProblem p = run.problem();
  const Trajectory t = simulate(p.config);
  const AdjointResult a = run_adjoint(t, p.config, p.cost);
  const Grid& g = p.config.grid();
  write_snapshot(run.path("p1.bdmf"), g, a.adjoint.p1);
  write_snapshot(run.path("p3.bdmf"), g, a.adjoint.p3);
  if (p.config.kind == SystemKind::Bidomain) write_snapshot(run.path("p2.bdmf"), g, a.adjoint.p2);
  run.report("adjoint_norms.json", a.report);
  std::vector<std::pair<std::string, std::string>> lines{{"system", to_string(p.config.kind)},
                                                         {"J", num(evaluate_cost(t, p.config.I_e, p.cost, g))}};
  for (const auto& [k, v] : a.report) lines.emplace_back(k, num(v));
  run.summary(lines);
  return 0;
}

int cmd_optimize(const Run& run) {
  const ControlProblem p = run.problem();
  const OptimizationResult r = projected_gradient_descent(p);
  const Grid& g = p.config.grid();
  {
    auto f = run.open("history.csv");
    f << "iter,J,grad_norm,step_size\n";
    for (std::size_t i = 0; i < r.J.size(); ++i)
      f << i << "," << r.J[i] << "," << r.grad_norm[i] << "," << r.step_size[i] << "\n";
  }
  write_snapshot(run.path("control.bdmf"), g, r.control);
  run.summary({{"iterations", std::to_string(r.iterations)},
               {"stop", r.stop_reason},
               {"J_initial", num(r.J.front())},
               {"J_final", num(r.J.back())},
               {"grad_norm_final", num(r.grad_norm.back())},
               {"control_norm", num(control_norm(g, r.control))}});
  return 0;
}

int cmd_stability(const Run& run, const Options& opt) {
  const ControlProblem p = run.problem();
  const Grid& g = p.config.grid();
  const Series dI_i = Series::Zero(g.node_count(), g.n_frames());
  const Series dI_e = random_series(g, run.scenario().seed, 0.1);
  const StabilityReport rep = stability_experiment(p.config, dI_i, dI_e, parse_scales(opt.scales));
  const Trajectory t1 = simulate(p.config), t2 = simulate(p.config);
  const double unique_lhs = stability_lhs(p.config, t1, t2);
  {
    auto f = run.open("stability.csv");
    f << "scale,lhs,rhs,ratio\n";
    for (const auto& r : rep.rows) f << r.scale << "," << r.lhs << "," << r.rhs << "," << r.ratio << "\n";
  }
  const bool pass = rep.max_over_median <= 2.0 && unique_lhs == 0.0;
  run.summary({{"C", num(rep.C)},
               {"max_over_median", num(rep.max_over_median)},
               {"identical_controls_lhs", num(unique_lhs)},
               {"verdict", pass ? "PASS" : "FAIL"}});
  return pass ? 0 : 1;
}

int cmd_limit(const Run& run) {
  const ControlProblem p = run.problem();
  const double gap = monodomain_limit_check(p.config, run.scenario().lambda);
  const bool pass = gap <= 1e-8;
  run.summary({{"lambda", num(run.scenario().lambda)}, {"discrepancy", num(gap)}, {"verdict", pass ? "PASS" : "FAIL"}});
  return pass ? 0 : 1;
}

int cmd_convergence(const Run& run, const Options& opt) {
  const Scenario& s = run.scenario();
  const ConvergenceStudy space = spatial_convergence(opt.levels);
  const ConvergenceStudy time =
      temporal_convergence([&](const Grid& g) { return s.instantiate(g); }, s.grid(), opt.levels);
  auto f = run.open("convergence.csv");
  f << "study,level,h,dt,value,order\n";
  for (const auto& [name, st] : {std::pair{"space", &space}, std::pair{"time", &time}})
    for (std::size_t i = 0; i < st->levels.size(); ++i) {
      const auto& l = st->levels[i];
      f << name << "," << i << "," << l.h << "," << l.dt << "," << l.value << ",";
      if (i < st->orders.size()) f << st->orders[i];
      f << "\n";
    }
  auto verdict = [](const ConvergenceStudy& st, double lo, double hi) -> std::string {
    if (!st.conclusive) return "INCONCLUSIVE";
    return st.observed >= lo && st.observed <= hi ? "PASS" : "FAIL";
  };
  const std::string vs = verdict(space, 1.7, 2.3), vt = verdict(time, 0.8, 1.3);
  run.summary({{"space_order", num(space.observed)},
               {"space_verdict", vs},
               {"time_order", num(time.observed)},
               {"time_verdict", vt}});
  return vs == "FAIL" || vt == "FAIL" ? 1 : 0;
}

int cmd_gradcheck(const Run& run) {
  const ControlProblem p = run.problem();
  const GradientCheckReport rep = gradient_check(p, 5, run.scenario().seed);
  {
    auto f = run.open("gradcheck.csv");
    f << "direction,delta,finite_difference,adjoint,rel_error\n";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      f << i << "," << r.delta << "," << r.finite_difference << "," << r.adjoint << "," << r.rel_error << "\n";
    }
  }
  const double threshold = p.config.kind == SystemKind::Monodomain ? 1e-4 : 1e-3;
  const bool pass = rep.max_rel_error <= threshold;
  run.summary({{"max_rel_error", num(rep.max_rel_error)},
               {"threshold", num(threshold)},
               {"verdict", pass ? "PASS" : "FAIL"}});
  return pass ? 0 : 1;
}

int cmd_report(const Run& run) {
  const Scenario& s = run.scenario();
  const ControlProblem p = run.problem();
  const ForwardResult fwd = run_forward(p.config);
  const AdjointResult adj = run_adjoint(fwd.trajectory, p.config, p.cost);
  const ProblemFactory factory = [&](const Grid& g) { return s.instantiate(g); };
  const AprioriRefinement ap = apriori_refinement(factory, s.grid());
  const RefinementCheck reg = regularity_monitor(factory, s.grid());

  NormReport all;
  for (const auto& [k, v] : fwd.report) all["forward." + k] = v;
  for (const auto& [k, v] : adj.report) all["adjoint." + k] = v;
  all["apriori.forward.ratio"] = ap.forward_coarse.ratio;
  all["apriori.forward.ratio_refined"] = ap.forward_refined.ratio;
  all["apriori.adjoint.ratio"] = ap.adjoint_coarse.ratio;
  all["apriori.adjoint.ratio_refined"] = ap.adjoint_refined.ratio;
  all["regularity.L4_H1"] = reg.coarse;
  all["regularity.L4_H1_refined"] = reg.refined;
  run.report("report.json", all);
  run.summary({{"apriori_forward_change", num(ap.forward_change)},
               {"apriori_adjoint_change", num(ap.adjoint_change)},
               {"regularity_ratio", num(reg.ratio)},
               {"verdict", ap.pass && reg.pass ? "PASS" : "FAIL"}});
  return ap.pass && reg.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monodomain/bidomain simulation, optimal control and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "INI problem description")->required()->check(CLI::ExistingFile);
  app.add_option("--out", opt.out, "Output directory (default: [output] dir of the config)");
  auto* seed = app.add_option("--seed", opt.seed, "Seed for random directions and perturbations");
  app.add_option("--levels", opt.levels, "Refinement levels for verify-convergence")->check(CLI::Range(3, 8));
  app.add_option("--scales", opt.scales, "Comma-separated perturbation scales for verify-stability");

  std::string chosen;
  for (const char* name : {"simulate", "adjoint", "optimize", "verify-stability", "verify-limit", "verify-convergence",
                           "gradcheck", "report"})
    app.add_subcommand(name)->callback([&chosen, name] { chosen = name; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error E_USAGE: " << e.what() << "\n";
    return 2;
  }
  opt.seed_given = seed->count() > 0;

  try {
    const Run run(opt);
    if (chosen == "simulate") return cmd_simulate(run);
    if (chosen == "adjoint") return cmd_adjoint(run);
    if (chosen == "optimize") return cmd_optimize(run);
    if (chosen == "verify-stability") return cmd_stability(run, opt);
    if (chosen == "verify-limit") return cmd_limit(run);
    if (chosen == "verify-convergence") return cmd_convergence(run, opt);
    if (chosen == "gradcheck") return cmd_gradcheck(run);
    if (chosen == "report") return cmd_report(run);
  } catch (const Error& e) {
    std::cerr << "error " << e.code() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error E_INTERNAL: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
