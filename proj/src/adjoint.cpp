#include "cardio/adjoint.hpp"

#include "cardio/errors.hpp"

#include <cmath>

namespace cardio {

namespace {

Field target_col(const Series& s, int k, Eigen::Index n) {
  return s.size() == 0 ? Field::Zero(n) : Field(s.col(k));
}

}  // namespace

void CostConfig::validate(const Grid& grid) const {
  if (!(mu > 0.0)) throw ValidationError("cost: mu must be > 0");
  if (!(w_phi >= 0.0) || !(w_eta >= 0.0) || !(w_gate >= 0.0))
    throw ValidationError("cost: weights must be >= 0");
  if (phi_des.size() != 0) check_series(grid, phi_des, "phi_des");
  if (eta_des.size() != 0) check_series(grid, eta_des, "eta_des");
  if (mask.size() != 0) {
    if (mask.size() != grid.node_count()) throw ValidationError("cost: mask size does not match grid");
    for (Eigen::Index i = 0; i < mask.size(); ++i)
      if (mask[i] != 0.0 && mask[i] != 1.0) throw ValidationError("cost: mask values must be 0 or 1");
  }
}

Field CostConfig::control_mask(const Grid& grid) const {
  return mask.size() == 0 ? Field::Ones(grid.node_count()) : mask;
}

CostPartials cost_partials(const CostConfig& cost, const SystemState& state, int k) {
  const Eigen::Index n = state.phi_tr.size();
  CostPartials p;
  p.r_phi = cost.w_phi * (state.phi_tr - target_col(cost.phi_des, k, n));
  p.r_eta = cost.w_eta * (state.phi_e - target_col(cost.eta_des, k, n));
  p.r_w = cost.w_gate * state.w;
  return p;
}

Field running_cost(const CostConfig& cost, const SystemState& state, int k) {
  const Eigen::Index n = state.phi_tr.size();
  const Field dphi = state.phi_tr - target_col(cost.phi_des, k, n);
  const Field deta = state.phi_e - target_col(cost.eta_des, k, n);
  return 0.5 * (cost.w_phi * dphi.cwiseAbs2() + cost.w_eta * deta.cwiseAbs2() +
                cost.w_gate * state.w.cwiseAbs2());
}

AdjointSolver::AdjointSolver(const ProblemConfig& config, const CostConfig& cost, const Trajectory& trajectory)
    : forward_(config), cost_(cost), traj_(trajectory), tw_(config.grid().time_weights()) {
  const Grid& g = config.grid();
  cost_.validate(g);
  check_series(g, traj_.phi_tr, "trajectory");
  check_series(g, traj_.phi_e, "trajectory");
  check_series(g, traj_.w, "trajectory");
}

SystemState AdjointSolver::snapshot(int k) const { return traj_.state(k, forward_.config().grid().dt()); }

Field AdjointSolver::elliptic(const FieldRef& p1, int k) const {
  const ProblemConfig& c = forward_.config();
  const SystemOperators& ops = *c.ops;
  if (c.kind == SystemKind::Monodomain) return Field::Zero(p1.size());
  Field kp = ops.k_i * p1;
  kp.array() -= kp.mean();
  const Field r_eta = zero_mean_project(ops.grid, cost_partials(cost_, snapshot(k), k).r_eta);
  return -solve_extracellular(ops, Field(kp + ops.mass.cwiseProduct(r_eta)), c.tol.inner);
}

AdjointState AdjointSolver::terminal() const {
  const Grid& g = forward_.config().grid();
  const Eigen::Index n = g.node_count();
  AdjointState a;
  a.s = 0.0;
  a.p1 = Field::Zero(n);
  a.p3 = Field::Zero(n);
  a.p2 = elliptic(a.p1, g.n_steps());
  return a;
}

AdjointState AdjointSolver::step(const AdjointState& next, int k) const {
  const ProblemConfig& c = forward_.config();
  const SystemOperators& ops = *c.ops;
  const Grid& g = c.grid();
  const int n_steps = g.n_steps();
  const int m = k + 1;
  const double dt = g.dt();
  const double a = tw_[m];
  const double decay = std::exp(-c.ionic.eps * dt);
  const double gain = -std::expm1(-c.ionic.eps * dt);
  const Eigen::Index n = g.node_count();

  const SystemState snap = snapshot(m);
  const CostPartials r = cost_partials(cost_, snap, m);

  Field dphi = Field::Zero(n), dw = Field::Zero(n);
  if (c.reaction) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Partials d = d_i_ion(c.ionic, snap.phi_tr[i], snap.w[i]);
      dphi[i] = d.d_phi;
      dw[i] = d.d_w;
    }
  }

  AdjointState out;
  out.s = (n_steps - k) * dt;
  out.p3 = decay * next.p3 - a * r.r_w - dt * dw.cwiseProduct(next.p1);

  Field src(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = gating_source_derivative(c.ionic, 0.5 * (traj_.phi_tr(i, k) + traj_.phi_tr(i, m))) * out.p3[i];
    if (m < n_steps)
      v += gating_source_derivative(c.ionic, 0.5 * (traj_.phi_tr(i, m) + traj_.phi_tr(i, m + 1))) * next.p3[i];
    src[i] = 0.5 * gain * v;
  }

  Field rhs = ops.mass.cwiseProduct(next.p1 - dt * dphi.cwiseProduct(next.p1) - a * r.r_phi + src);
  if (c.kind == SystemKind::Bidomain) {
    const Field r_eta = zero_mean_project(g, r.r_eta);
    if (r_eta.squaredNorm() > 0.0)
      rhs += ops.k_i * solve_extracellular(ops, Field(a * ops.mass.cwiseProduct(r_eta)), c.tol.inner);
  }
  out.p1 = forward_.solve_implicit(rhs);
  if (!out.p1.allFinite() || !out.p3.allFinite())
    throw DivergenceError("adjoint: non-finite state at step " + std::to_string(k), k);
  out.p2 = elliptic(out.p1, k);
  return out;
}

AdjointState step_adjoint_monodomain(const AdjointState& next, const Trajectory& trajectory,
                                     const ProblemConfig& config, const CostConfig& cost, int k) {
  if (config.kind != SystemKind::Monodomain) throw ValidationError("step_adjoint_monodomain: config is bidomain");
  return AdjointSolver(config, cost, trajectory).step(next, k);
}

AdjointState step_adjoint_bidomain(const AdjointState& next, const Trajectory& trajectory,
                                   const ProblemConfig& config, const CostConfig& cost, int k) {
  if (config.kind != SystemKind::Bidomain) throw ValidationError("step_adjoint_bidomain: config is monodomain");
  return AdjointSolver(config, cost, trajectory).step(next, k);
}

NormReport adjoint_norms(const ProblemConfig& config, const AdjointTrajectory& adj) {
  const Grid& g = config.grid();
  NormReport r;
  r["p1.C0_L2"] = bochner_norm(g, adj.p1, kInfinity, SpatialNorm::L2);
  r["p1.L2_H1"] = bochner_norm(g, adj.p1, 2.0, SpatialNorm::H1);
  r["p1.L4_H1"] = bochner_norm(g, adj.p1, 4.0, SpatialNorm::H1);
  r["p3.C0_L2"] = bochner_norm(g, adj.p3, kInfinity, SpatialNorm::L2);
  if (config.kind == SystemKind::Bidomain) r["p2.L2_H1"] = bochner_norm(g, adj.p2, 2.0, SpatialNorm::H1);
  return r;
}

AdjointResult run_adjoint(const Trajectory& trajectory, const ProblemConfig& config, const CostConfig& cost) {
  const AdjointSolver solver(config, cost, trajectory);
  const Grid& g = config.grid();
  AdjointResult out;
  AdjointTrajectory& adj = out.adjoint;
  adj.p1.resize(g.node_count(), g.n_frames());
  adj.p2.resize(g.node_count(), g.n_frames());
  adj.p3.resize(g.node_count(), g.n_frames());
  AdjointState a = solver.terminal();
  for (int k = g.n_steps();; --k) {
    adj.p1.col(k) = a.p1;
    adj.p2.col(k) = a.p2;
    adj.p3.col(k) = a.p3;
    if (k == 0) break;
    a = solver.step(a, k - 1);
  }
  out.report = adjoint_norms(config, adj);
  return out;
}

}  // namespace cardio
