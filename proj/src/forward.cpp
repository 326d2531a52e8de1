#include "cardio/forward.hpp"

#include "cardio/errors.hpp"

#include <cmath>

namespace cardio {

std::string to_string(SystemKind kind) {
  return kind == SystemKind::Monodomain ? "monodomain" : "bidomain";
}

void ProblemConfig::validate() const {
  if (!ops) throw ValidationError("problem: operators missing");
  ionic.validate();
  const Grid& g = grid();
  if (phi0.size() != g.node_count() || w0.size() != g.node_count())
    throw ValidationError("problem: initial fields must have one value per node");
  check_series(g, I_i, "I_i");
  check_series(g, I_e, "I_e");
  if (!phi0.allFinite() || !w0.allFinite() || !I_i.allFinite() || !I_e.allFinite())
    throw ValidationError("problem: non-finite data");
  if (kind == SystemKind::Bidomain && compatibility_defect(g, I_i, I_e) > 1e-8)
    throw CompatibilityError("problem: I_i + I_e must integrate to zero in every frame (defect " +
                             std::to_string(compatibility_defect(g, I_i, I_e)) + ")");
}

ProblemConfig zero_problem(OperatorsPtr ops, IonicParams ionic, SystemKind kind) {
  const Grid& g = ops->grid;
  ProblemConfig c;
  c.ionic = ionic;
  c.kind = kind;
  c.phi0 = Field::Zero(g.node_count());
  c.w0 = Field::Zero(g.node_count());
  c.I_i = Series::Zero(g.node_count(), g.n_frames());
  c.I_e = Series::Zero(g.node_count(), g.n_frames());
  c.ops = std::move(ops);
  return c;
}

std::pair<Series, Series> compatibility_enforce(const Grid& grid, const Series& I_i, const Series& I_e) {
  check_series(grid, I_i, "I_i");
  check_series(grid, I_e, "I_e");
  Series out = I_e;
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const double shift = mean(grid, I_i.col(k) + I_e.col(k));
    out.col(k).array() -= shift;
  }
  return {I_i, std::move(out)};
}

double compatibility_defect(const Grid& grid, const Series& I_i, const Series& I_e) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < I_i.cols(); ++k) {
    const Field lv = grid.weights().cwiseProduct(I_i.col(k) + I_e.col(k));
    worst = std::max(worst, compatibility_defect(lv));
  }
  return worst;
}

ForwardSolver::ForwardSolver(ProblemConfig config) : config_(std::move(config)) {
  config_.validate();
  const SystemOperators& ops = *config_.ops;
  const double dt = config_.grid().dt();
  if (config_.kind == SystemKind::Monodomain) {
    const double c = ops.lambda / (1.0 + ops.lambda);
    implicit_ = dt * c * ops.k_i;
    for (Eigen::Index n = 0; n < ops.mass.size(); ++n) implicit_.coeffRef(n, n) += ops.mass[n];
    implicit_.makeCompressed();
    inv_diag_ = inverse_diagonal(implicit_);
  } else {
    // Jacobi guess for M + dt A: A behaves like a fraction of K_i.
    const Field d = ops.mass + 0.5 * dt * Field(ops.k_i.diagonal());
    inv_diag_ = d.cwiseInverse();
  }
}

Field ForwardSolver::solve_implicit(const Field& rhs) const {
  const CgOptions opt{.tol = config_.tol.cg};
  Field x = Field::Zero(rhs.size());
  if (config_.kind == SystemKind::Monodomain) {
    pcg([&](const Field& v, Field& out) { out.noalias() = implicit_ * v; }, inv_diag_, rhs, x, opt);
  } else {
    const SystemOperators& ops = *config_.ops;
    const double dt = config_.grid().dt();
    const double inner = config_.tol.inner;
    pcg(
        [&](const Field& v, Field& out) {
          out = ops.mass.cwiseProduct(v) + dt * apply_reduced(ops, v, inner);
        },
        inv_diag_, rhs, x, opt);
  }
  return x;
}

Field ForwardSolver::extracellular(const FieldRef& phi_tr, int k) const {
  const SystemOperators& ops = *config_.ops;
  Field kphi = ops.k_i * phi_tr;
  kphi.array() -= kphi.mean();
  const Field load = ops.mass.cwiseProduct(config_.I_i.col(k) + config_.I_e.col(k)) - kphi;
  return solve_extracellular(ops, load, config_.tol.inner);
}

SystemState ForwardSolver::initial_state() const {
  SystemState s;
  s.t = 0.0;
  s.phi_tr = config_.phi0;
  s.w = config_.w0;
  s.phi_e = config_.kind == SystemKind::Bidomain ? extracellular(s.phi_tr, 0)
                                                 : Field::Zero(config_.grid().node_count());
  return s;
}

SystemState ForwardSolver::step(const SystemState& state, int k) const {
  const ProblemConfig& c = config_;
  const SystemOperators& ops = *c.ops;
  const double dt = c.grid().dt();
  const Eigen::Index n = state.phi_tr.size();

  Field reaction(n);
  if (c.reaction) {
    for (Eigen::Index i = 0; i < n; ++i) reaction[i] = i_ion(c.ionic, state.phi_tr[i], state.w[i]);
  } else {
    reaction.setZero();
  }

  Field rhs;
  if (c.kind == SystemKind::Monodomain) {
    const double lam = ops.lambda;
    const Field forcing = (lam * c.I_i.col(k) - c.I_e.col(k)) / (1.0 + lam);
    rhs = ops.mass.cwiseProduct(state.phi_tr - dt * reaction + dt * forcing);
  } else {
    rhs = ops.mass.cwiseProduct(state.phi_tr - dt * reaction) +
          dt * reduced_rhs_S(ops, c.I_i.col(k), c.I_e.col(k), c.tol.inner);
  }

  if (!rhs.allFinite())
    throw DivergenceError("forward: non-finite state at step " + std::to_string(k + 1), k + 1);

  SystemState next;
  next.t = state.t + dt;
  try {
    next.phi_tr = solve_implicit(rhs);
  } catch (const SolverError&) {
    if (!std::isfinite(rhs.squaredNorm()))
      throw DivergenceError("forward: state overflow at step " + std::to_string(k + 1), k + 1);
    throw;
  }
  next.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    next.w[i] = gating_exact_update(c.ionic, state.w[i], {state.phi_tr[i], next.phi_tr[i]}, dt);
  if (!next.phi_tr.allFinite() || !next.w.allFinite())
    throw DivergenceError("forward: non-finite state at step " + std::to_string(k + 1), k + 1);
  next.phi_e = c.kind == SystemKind::Bidomain ? extracellular(next.phi_tr, k + 1) : Field::Zero(n);
  return next;
}

SystemState step_monodomain(const SystemState& state, const ProblemConfig& config, int k) {
  if (config.kind != SystemKind::Monodomain) throw ValidationError("step_monodomain: config is bidomain");
  return ForwardSolver(config).step(state, k);
}

SystemState step_bidomain(const SystemState& state, const ProblemConfig& config, int k) {
  if (config.kind != SystemKind::Bidomain) throw ValidationError("step_bidomain: config is monodomain");
  return ForwardSolver(config).step(state, k);
}

Trajectory simulate(const ProblemConfig& config) {
  const ForwardSolver solver(config);
  const Grid& g = config.grid();
  Trajectory traj;
  traj.phi_tr.resize(g.node_count(), g.n_frames());
  traj.phi_e.resize(g.node_count(), g.n_frames());
  traj.w.resize(g.node_count(), g.n_frames());
  SystemState s = solver.initial_state();
  for (int k = 0;; ++k) {
    traj.phi_tr.col(k) = s.phi_tr;
    traj.phi_e.col(k) = s.phi_e;
    traj.w.col(k) = s.w;
    if (k == g.n_steps()) break;
    s = solver.step(s, k);
  }
  return traj;
}

NormReport forward_norms(const ProblemConfig& config, const Trajectory& traj) {
  const Grid& g = config.grid();
  const double dt = g.dt();
  NormReport r;
  r["phi_tr.C0_L2"] = bochner_norm(g, traj.phi_tr, kInfinity, SpatialNorm::L2);
  r["phi_tr.L2_H1"] = bochner_norm(g, traj.phi_tr, 2.0, SpatialNorm::H1);
  r["phi_tr.L4_OmegaT"] = bochner_norm(g, traj.phi_tr, 4.0, SpatialNorm::L4);
  r["phi_tr.L4_H1"] = bochner_norm(g, traj.phi_tr, 4.0, SpatialNorm::H1);
  r["w.C0_L2"] = bochner_norm(g, traj.w, kInfinity, SpatialNorm::L2);
  r["w.W12_L2"] = w12_l2_norm(g, traj.w);
  if (config.kind == SystemKind::Bidomain) r["phi_e.L2_H1"] = bochner_norm(g, traj.phi_e, 2.0, SpatialNorm::H1);

  // Time derivatives in the Riesz-surrogate dual norm (reported, not bounded).
  double dphi = 0.0, dw = 0.0;
  for (Eigen::Index k = 1; k < traj.phi_tr.cols(); ++k) {
    const double a = dual_norm(g, (traj.phi_tr.col(k) - traj.phi_tr.col(k - 1)) / dt, config.ops->riesz);
    const double b = dual_norm(g, (traj.w.col(k) - traj.w.col(k - 1)) / dt, config.ops->riesz);
    dphi += dt * std::pow(a, 4.0 / 3.0);
    dw += dt * b * b;
  }
  r["dphi_tr_dt.L43_dual"] = std::pow(dphi, 3.0 / 4.0);
  r["dw_dt.L2_dual"] = std::sqrt(dw);
  return r;
}

ForwardResult run_forward(const ProblemConfig& config) {
  ForwardResult out;
  out.trajectory = simulate(config);
  out.report = forward_norms(config, out.trajectory);
  return out;
}

}  // namespace cardio
