#pragma once

#include "cardio/adjoint.hpp"

#include <string>
#include <vector>

namespace cardio {

/// Optimal control of the extracellular current I_e on the control region.
/// The control is `config.I_e`; I_i is data.
struct ControlProblem {
  ProblemConfig config;
  CostConfig cost;
  int max_iter = 50;
  /// Frame-wise L2 bound on admissible controls.
  double radius = 10.0;
  double gradient_tol = 1e-6;
  double armijo_c = 1e-4;
  int max_halvings = 40;
  /// Relative decrease of J below which the optimizer stops.
  double stall_tol = 1e-10;

  /// Throws on invalid settings, an empty control region, or (bidomain) an
  /// I_i whose frames do not integrate to zero.
  void validate() const;
};

/// J = sum_k tau_k sum_i m_i r + mu/2 sum_k tau_k sum_i m_i chi_i I_e^2.
double evaluate_cost(const Trajectory& trajectory, const Series& control, const CostConfig& cost,
                     const Grid& grid);

/// Mask to the control region; bidomain also removes the region mean.
Field apply_Q(const FieldRef& field, const CostConfig& cost, const Grid& grid, SystemKind kind);
Series apply_Q_series(const Series& series, const CostConfig& cost, const Grid& grid, SystemKind kind);

/// Space-time L2 inner product with trapezoid weights in time.
double control_inner(const Grid& grid, const Series& a, const Series& b);
double control_norm(const Grid& grid, const Series& a);

/// Gradient density of J with respect to I_e, one frame per time level.
Series reduced_gradient(const AdjointTrajectory& adjoint, const Series& control, const ControlProblem& problem);

/// Cost of `control` (runs one forward solve).
double cost_of(const ControlProblem& problem, const Series& control);

struct GradientEvaluation {
  double J;
  Trajectory trajectory;
  AdjointTrajectory adjoint;
  Series gradient;
};

GradientEvaluation evaluate_gradient(const ControlProblem& problem, const Series& control);

/// Admissible projection: apply_Q, then clip each frame to the L2 ball.
Series project_admissible(const ControlProblem& problem, const Series& control);

struct OptimizationResult {
  Series control;
  std::vector<double> J;
  std::vector<double> grad_norm;
  std::vector<double> step_size;
  int iterations = 0;
  std::string stop_reason;
};

/// Projected gradient descent with Armijo backtracking (factor 1/2,
/// initial step 1). Throws StagnationError when the line search fails.
OptimizationResult projected_gradient_descent(const ControlProblem& problem);

}  // namespace cardio
