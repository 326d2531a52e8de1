#pragma once

#include "cardio/forward.hpp"

namespace cardio {

/// Tracking-type running cost
/// r = w_phi/2 (phi - phi_des)^2 + w_eta/2 (eta - eta_des)^2 + w_gate/2 w^2
/// plus the control penalty mu/2 |I_e|^2 over the control region.
struct CostConfig {
  /// Targets, one column per time level; empty means zero.
  Series phi_des;
  Series eta_des;
  double w_phi = 1.0;
  double w_eta = 0.0;
  double w_gate = 0.0;
  double mu = 1.0;
  /// Indicator of the control region; empty means the whole domain.
  Field mask;

  void validate(const Grid& grid) const;
  /// Mask with the empty default expanded to ones.
  Field control_mask(const Grid& grid) const;
};

struct CostPartials {
  Field r_phi;
  Field r_eta;
  Field r_w;
};

CostPartials cost_partials(const CostConfig& cost, const SystemState& state, int k);
/// Nodal values of r at time level k.
Field running_cost(const CostConfig& cost, const SystemState& state, int k);

struct AdjointState {
  /// Reverse time T - t.
  double s = 0.0;
  Field p1;
  /// Elliptic adjoint (bidomain); zeros for the monodomain system.
  Field p2;
  Field p3;
};

struct AdjointTrajectory {
  Series p1;
  Series p2;
  Series p3;
};

/// Backward integrator for the adjoint of the semi-implicit forward scheme.
///
/// The backward step is the exact transpose of one forward step, so the
/// reduced gradient matches finite differences of the discrete cost up to
/// solver tolerance. Frame k of (p1, p3) is the multiplier of the forward
/// step k -> k + 1; the terminal frame is zero.
class AdjointSolver {
 public:
  /// `config` and `trajectory` must outlive the solver.
  AdjointSolver(const ProblemConfig& config, const CostConfig& cost, const Trajectory& trajectory);

  AdjointState terminal() const;
  /// Frame k from frame k + 1.
  AdjointState step(const AdjointState& next, int k) const;
  /// Elliptic adjoint at frame k: K_ie p2 = -K_i p1 - Mass r_eta, zero mean.
  Field elliptic(const FieldRef& p1, int k) const;

 private:
  SystemState snapshot(int k) const;

  ForwardSolver forward_;
  CostConfig cost_;
  const Trajectory& traj_;
  Eigen::VectorXd tw_;
};

AdjointState step_adjoint_monodomain(const AdjointState& next, const Trajectory& trajectory,
                                     const ProblemConfig& config, const CostConfig& cost, int k);
AdjointState step_adjoint_bidomain(const AdjointState& next, const Trajectory& trajectory,
                                   const ProblemConfig& config, const CostConfig& cost, int k);

struct AdjointResult {
  AdjointTrajectory adjoint;
  NormReport report;
};

AdjointResult run_adjoint(const Trajectory& trajectory, const ProblemConfig& config, const CostConfig& cost);

NormReport adjoint_norms(const ProblemConfig& config, const AdjointTrajectory& adj);

}  // namespace cardio
