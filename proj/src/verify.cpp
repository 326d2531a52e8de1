#include "cardio/verify.hpp"

#include "cardio/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cardio {

namespace {

double sq(double x) { return x * x; }

double relative_change(double coarse, double refined) {
  if (coarse == 0.0) return refined == 0.0 ? 0.0 : kInfinity;
  return std::abs(refined - coarse) / std::abs(coarse);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Series partial_series(const CostConfig& cost, const Trajectory& t, double dt, int which) {
  Series out(t.phi_tr.rows(), t.phi_tr.cols());
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const CostPartials p = cost_partials(cost, t.state(static_cast<int>(k), dt), static_cast<int>(k));
    out.col(k) = which == 0 ? p.r_phi : which == 1 ? p.r_eta : p.r_w;
  }
  return out;
}

}  // namespace

Series random_series(const Grid& grid, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Series s(grid.node_count(), grid.n_frames());
  for (Eigen::Index k = 0; k < s.cols(); ++k)
    for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, k) = u(rng);
  return s;
}

double stability_lhs(const ProblemConfig& config, const Trajectory& a, const Trajectory& b) {
  const Grid& g = config.grid();
  const Series dphi = a.phi_tr - b.phi_tr;
  const Series dw = a.w - b.w;
  double lhs = sq(bochner_norm(g, dphi, kInfinity, SpatialNorm::L2)) + sq(bochner_norm(g, dphi, 2.0, SpatialNorm::H1)) +
               sq(bochner_norm(g, dw, kInfinity, SpatialNorm::L2)) + sq(w12_l2_norm(g, dw));
  if (config.kind == SystemKind::Bidomain) lhs += sq(bochner_norm(g, Series(a.phi_e - b.phi_e), 2.0, SpatialNorm::H1));
  return lhs;
}

double stability_rhs(const ProblemConfig& config, const Series& dI_i, const Series& dI_e) {
  const Grid& g = config.grid();
  const SparseOperator& riesz = config.ops->riesz;
  return sq(dual_bochner_norm(g, dI_i, riesz)) + sq(dual_bochner_norm(g, dI_e, riesz));
}

StabilityReport stability_experiment(const ProblemConfig& base, const Series& dI_i_in, const Series& dI_e_in,
                                     const std::vector<double>& scales) {
  const Grid& g = base.grid();
  check_series(g, dI_i_in, "dI_i");
  check_series(g, dI_e_in, "dI_e");
  if (scales.empty()) throw DegenerateInputError("stability: no scales given");
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateInputError("stability: scales must be positive");
  Series dI_i = dI_i_in, dI_e = dI_e_in;
  if (base.kind == SystemKind::Bidomain) std::tie(dI_i, dI_e) = compatibility_enforce(g, dI_i, dI_e);
  if (dI_i.cwiseAbs().maxCoeff() == 0.0 && dI_e.cwiseAbs().maxCoeff() == 0.0)
    throw DegenerateInputError("stability: perturbation direction is zero");

  const Trajectory ref = simulate(base);
  StabilityReport rep;
  std::vector<double> ratios;
  for (double s : scales) {
    ProblemConfig c = base;
    c.I_i += s * dI_i;
    c.I_e += s * dI_e;
    const Trajectory t = simulate(c);
    StabilityRow row{s, stability_lhs(base, t, ref), stability_rhs(base, Series(s * dI_i), Series(s * dI_e)), 0.0};
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
    ratios.push_back(row.ratio);
    rep.rows.push_back(row);
  }
  rep.C = *std::max_element(ratios.begin(), ratios.end());
  const double med = median(ratios);
  rep.max_over_median = med > 0.0 ? rep.C / med : (rep.C == 0.0 ? 1.0 : kInfinity);
  return rep;
}

double monodomain_limit_check(const ProblemConfig& bidomain, double lambda) {
  const SystemOperators& ops = *bidomain.ops;
  if (!(lambda > 0.0)) throw ConfigError("monodomain limit: lambda must be > 0");
  if (!ops.m_i.proportional_to(ops.m_e, lambda))
    throw ConfigError("monodomain limit: M_e is not lambda * M_i");

  ProblemConfig bi = bidomain;
  bi.kind = SystemKind::Bidomain;
  ProblemConfig mono = bidomain;
  mono.kind = SystemKind::Monodomain;
  if (ops.lambda != lambda) {
    auto copy = std::make_shared<SystemOperators>(ops);
    copy->lambda = lambda;
    mono.ops = copy;
  }
  const Trajectory tb = simulate(bi);
  const Trajectory tm = simulate(mono);
  const Grid& g = bidomain.grid();
  const double gap = bochner_norm(g, Series(tb.phi_tr - tm.phi_tr), kInfinity, SpatialNorm::L2);
  const double ref = bochner_norm(g, tm.phi_tr, kInfinity, SpatialNorm::L2);
  if (ref == 0.0) return gap;
  return gap / ref;
}

RefinementCheck regularity_monitor(const ProblemFactory& factory, const Grid& grid) {
  RefinementCheck r;
  const ControlProblem coarse = factory(grid);
  const ControlProblem fine = factory(grid.refined());
  r.coarse = bochner_norm(coarse.config.grid(), simulate(coarse.config).phi_tr, 4.0, SpatialNorm::H1);
  r.refined = bochner_norm(fine.config.grid(), simulate(fine.config).phi_tr, 4.0, SpatialNorm::H1);
  if (r.coarse == 0.0)
    r.ratio = r.refined == 0.0 ? 1.0 : kInfinity;
  else
    r.ratio = r.refined / r.coarse;
  r.pass = std::isfinite(r.refined) && r.ratio <= 1.1;
  return r;
}

AprioriResult apriori_forward(const ProblemConfig& config, const Trajectory& t) {
  const Grid& g = config.grid();
  AprioriResult r;
  r.lhs = sq(bochner_norm(g, t.phi_tr, kInfinity, SpatialNorm::L2)) + sq(bochner_norm(g, t.phi_tr, 2.0, SpatialNorm::H1)) +
          std::pow(bochner_norm(g, t.phi_tr, 4.0, SpatialNorm::L4), 4.0) +
          sq(bochner_norm(g, t.w, kInfinity, SpatialNorm::L2));
  if (config.kind == SystemKind::Bidomain) r.lhs += sq(bochner_norm(g, t.phi_e, 2.0, SpatialNorm::H1));
  r.rhs = 1.0 + sq(lp_norm(g, config.phi0, 2.0)) + sq(lp_norm(g, config.w0, 2.0)) +
          stability_rhs(config, config.I_i, config.I_e);
  r.ratio = r.lhs / r.rhs;
  return r;
}

AprioriResult apriori_adjoint(const ProblemConfig& config, const CostConfig& cost, const Trajectory& t,
                              const AdjointTrajectory& adj) {
  const Grid& g = config.grid();
  AprioriResult r;
  r.lhs = sq(bochner_norm(g, adj.p1, kInfinity, SpatialNorm::L2)) + sq(bochner_norm(g, adj.p1, 2.0, SpatialNorm::H1)) +
          sq(bochner_norm(g, adj.p3, kInfinity, SpatialNorm::L2));
  if (config.kind == SystemKind::Bidomain) r.lhs += sq(bochner_norm(g, adj.p2, 2.0, SpatialNorm::H1));
  for (int which = 0; which < 3; ++which) {
    if (which == 1 && config.kind == SystemKind::Monodomain) continue;
    r.rhs += sq(bochner_norm(g, partial_series(cost, t, g.dt(), which), 2.0, SpatialNorm::L2));
  }
  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
  return r;
}

AprioriRefinement apriori_refinement(const ProblemFactory& factory, const Grid& grid) {
  AprioriRefinement out;
  auto run = [&](const Grid& g, AprioriResult& fwd, AprioriResult& adj) {
    const ControlProblem p = factory(g);
    const Trajectory t = simulate(p.config);
    fwd = apriori_forward(p.config, t);
    adj = apriori_adjoint(p.config, p.cost, t, run_adjoint(t, p.config, p.cost).adjoint);
  };
  run(grid, out.forward_coarse, out.adjoint_coarse);
  run(grid.refined(), out.forward_refined, out.adjoint_refined);
  out.forward_change = relative_change(out.forward_coarse.ratio, out.forward_refined.ratio);
  out.adjoint_change = relative_change(out.adjoint_coarse.ratio, out.adjoint_refined.ratio);
  out.pass = out.forward_change <= 0.25 && out.adjoint_change <= 0.25;
  return out;
}

ConvergenceStudy observed_orders(std::vector<ConvergenceLevel> levels) {
  ConvergenceStudy s;
  s.levels = std::move(levels);
  s.conclusive = s.levels.size() >= 2;
  for (std::size_t i = 0; i + 1 < s.levels.size(); ++i) {
    const double a = s.levels[i].value, b = s.levels[i + 1].value;
    if (!(a > 0.0) || !(b > 0.0) || !(b < a)) s.conclusive = false;
    s.orders.push_back(a > 0.0 && b > 0.0 ? std::log2(a / b) : std::numeric_limits<double>::quiet_NaN());
  }
  s.observed = s.conclusive ? s.orders.back() : std::numeric_limits<double>::quiet_NaN();
  return s;
}

ConvergenceStudy spatial_convergence(int levels, int base_nodes, double T) {
  if (levels < 3) throw ValidationError("convergence: need at least 3 levels");
  const double pi = 3.14159265358979323846;
  const double lambda = 1.0;
  const double h0 = 1.0 / (base_nodes - 1);
  const int base_steps = static_cast<int>(std::ceil(T / (h0 * h0)));
  std::vector<ConvergenceLevel> out;
  for (int l = 0; l < levels; ++l) {
    const Grid g = Grid::line((base_nodes - 1) * (1 << l) + 1, 1.0, T, base_steps * (1 << (2 * l)));
    const double sigma = (1.0 + lambda) / (lambda * pi * pi);
    ProblemConfig c = zero_problem(build_operators(g, TensorField::isotropic(g, sigma), lambda), IonicParams{},
                                   SystemKind::Monodomain);
    c.reaction = false;
    c.tol.cg = 1e-13;
    c.phi0 = interpolate(g, [&](double x, double, double) { return std::cos(pi * x); });
    const Trajectory t = simulate(c);
    double err = 0.0;
    for (int k = 0; k < g.n_frames(); ++k) {
      const Field exact = std::exp(-g.time(k)) * c.phi0;
      err = std::max(err, lp_norm(g, Field(t.phi_tr.col(k) - exact), 2.0));
    }
    out.push_back({g.h(0), g.dt(), err});
  }
  return observed_orders(std::move(out));
}

ConvergenceStudy temporal_convergence(const ProblemFactory& factory, const Grid& grid, int levels) {
  if (levels < 3) throw ValidationError("convergence: need at least 3 levels");
  std::vector<Trajectory> runs;
  std::vector<Grid> grids;
  for (int l = 0; l < levels; ++l) {
    grids.push_back(grid.with_steps(grid.n_steps() * (1 << l)));
    runs.push_back(simulate(factory(grids.back()).config));
  }
  std::vector<ConvergenceLevel> out;
  for (int l = 0; l + 1 < levels; ++l) {
    double diff = 0.0;
    for (int k = 0; k < grids[l].n_frames(); ++k)
      diff = std::max(diff, lp_norm(grid, Field(runs[l].phi_tr.col(k) - runs[l + 1].phi_tr.col(2 * k)), 2.0));
    out.push_back({grid.h(0), grids[l].dt(), diff});
  }
  return observed_orders(std::move(out));
}

GradientCheckReport gradient_check(const ControlProblem& problem, int n_directions, std::uint64_t seed) {
  problem.validate();
  const Grid& g = problem.config.grid();
  const Series x = problem.config.I_e;
  const GradientEvaluation base = evaluate_gradient(problem, x);

  GradientCheckReport rep;
  for (int j = 0; j < n_directions; ++j) {
    Series d = apply_Q_series(random_series(g, seed + static_cast<std::uint64_t>(j), 1.0), problem.cost, g,
                              problem.config.kind);
    const double dn = control_norm(g, d);
    if (dn > 0.0) d /= dn;
    const double ad = control_inner(g, base.gradient, d);

    std::vector<double> deltas, est;
    for (int e = 1; e <= 6; ++e) {
      const double delta = std::pow(10.0, -e);
      deltas.push_back(delta);
      est.push_back((cost_of(problem, x + delta * d) - cost_of(problem, x - delta * d)) / (2.0 * delta));
    }
    std::size_t best = 1;
    double spread = kInfinity;
    for (std::size_t i = 1; i + 1 < est.size(); ++i) {
      const double s = std::abs(est[i] - est[i - 1]) + std::abs(est[i + 1] - est[i]);
      if (s < spread) {
        spread = s;
        best = i;
      }
    }
    GradientCheckRow row{deltas[best], est[best], ad, 0.0};
    if (row.finite_difference != row.adjoint)
      row.rel_error = std::abs(row.finite_difference - row.adjoint) / std::max(std::abs(row.adjoint), 1e-300);
    rep.max_rel_error = std::max(rep.max_rel_error, row.rel_error);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace cardio
