#include "cardio/control.hpp"

#include "cardio/errors.hpp"

#include <cmath>
#include <sstream>

namespace cardio {

void ControlProblem::validate() const {
  config.validate();
  const Grid& g = config.grid();
  cost.validate(g);
  if (!(radius > 0.0)) throw ValidationError("control: radius R must be > 0");
  if (max_iter < 0) throw ValidationError("control: max_iter must be >= 0");
  if (!(gradient_tol >= 0.0)) throw ValidationError("control: gradient_tol must be >= 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ValidationError("control: armijo_c must lie in (0,1)");
  if (cost.control_mask(g).dot(g.weights()) <= 0.0) throw ConfigError("control: control region is empty");
  if (config.kind == SystemKind::Bidomain) {
    for (Eigen::Index k = 0; k < config.I_i.cols(); ++k)
      if (compatibility_defect(Field(g.weights().cwiseProduct(config.I_i.col(k)))) > 1e-8)
        throw ConfigError("control: bidomain I_i must integrate to zero in every frame");
  }
}

double evaluate_cost(const Trajectory& trajectory, const Series& control, const CostConfig& cost,
                     const Grid& grid) {
  check_series(grid, control, "control");
  const Eigen::VectorXd tw = grid.time_weights();
  const Field chi_m = cost.control_mask(grid).cwiseProduct(grid.weights());
  double J = 0.0;
  for (Eigen::Index k = 0; k < control.cols(); ++k) {
    const SystemState s = trajectory.state(static_cast<int>(k), grid.dt());
    J += tw[k] * grid.weights().dot(running_cost(cost, s, static_cast<int>(k)));
    J += tw[k] * 0.5 * cost.mu * chi_m.dot(control.col(k).cwiseAbs2());
  }
  return J;
}

Field apply_Q(const FieldRef& field, const CostConfig& cost, const Grid& grid, SystemKind kind) {
  const Field chi = cost.control_mask(grid);
  const double area = chi.dot(grid.weights());
  if (area <= 0.0) throw ConfigError("apply_Q: control region is empty");
  Field out = chi.cwiseProduct(field);
  if (kind == SystemKind::Bidomain) {
    const double m = grid.weights().dot(out) / area;
    out -= m * chi;
  }
  return out;
}

Series apply_Q_series(const Series& series, const CostConfig& cost, const Grid& grid, SystemKind kind) {
  Series out(series.rows(), series.cols());
  for (Eigen::Index k = 0; k < series.cols(); ++k) out.col(k) = apply_Q(series.col(k), cost, grid, kind);
  return out;
}

double control_inner(const Grid& grid, const Series& a, const Series& b) {
  check_series(grid, a, "control_inner");
  check_series(grid, b, "control_inner");
  const Eigen::VectorXd tw = grid.time_weights();
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) s += tw[k] * grid.weights().dot(a.col(k).cwiseProduct(b.col(k)));
  return s;
}

double control_norm(const Grid& grid, const Series& a) { return std::sqrt(std::max(0.0, control_inner(grid, a, a))); }

Series reduced_gradient(const AdjointTrajectory& adjoint, const Series& control, const ControlProblem& problem) {
  const ProblemConfig& c = problem.config;
  const SystemOperators& ops = *c.ops;
  const Grid& g = c.grid();
  check_series(g, control, "control");
  const Eigen::VectorXd tau = g.time_weights() / g.dt();
  Series raw(control.rows(), control.cols());
  for (Eigen::Index k = 0; k < control.cols(); ++k) {
    if (c.kind == SystemKind::Monodomain) {
      raw.col(k) = problem.cost.mu * control.col(k) + adjoint.p1.col(k) / ((1.0 + ops.lambda) * tau[k]);
    } else {
      raw.col(k) = problem.cost.mu * control.col(k) - adjoint.p2.col(k);
      // The end frames carry half weight in the cost but a full step in the dynamics.
      if (tau[k] != 1.0 && adjoint.p1.col(k).squaredNorm() > 0.0) {
        Field kp = ops.k_i * adjoint.p1.col(k);
        kp.array() -= kp.mean();
        raw.col(k) += (1.0 / tau[k] - 1.0) * solve_extracellular(ops, kp, c.tol.inner);
      }
    }
  }
  return apply_Q_series(raw, problem.cost, g, c.kind);
}

double cost_of(const ControlProblem& problem, const Series& control) {
  ProblemConfig c = problem.config;
  c.I_e = control;
  return evaluate_cost(simulate(c), control, problem.cost, c.grid());
}

GradientEvaluation evaluate_gradient(const ControlProblem& problem, const Series& control) {
  ControlProblem p = problem;
  p.config.I_e = control;
  GradientEvaluation out;
  out.trajectory = simulate(p.config);
  out.J = evaluate_cost(out.trajectory, control, p.cost, p.config.grid());
  out.adjoint = run_adjoint(out.trajectory, p.config, p.cost).adjoint;
  out.gradient = reduced_gradient(out.adjoint, control, p);
  return out;
}

Series project_admissible(const ControlProblem& problem, const Series& control) {
  const Grid& g = problem.config.grid();
  Series out = apply_Q_series(control, problem.cost, g, problem.config.kind);
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const double n = lp_norm(g, out.col(k), 2.0);
    if (n > problem.radius) out.col(k) *= problem.radius / n;
  }
  return out;
}

OptimizationResult projected_gradient_descent(const ControlProblem& problem) {
  problem.validate();
  const Grid& g = problem.config.grid();

  OptimizationResult res;
  res.control = project_admissible(problem, problem.config.I_e);
  GradientEvaluation cur = evaluate_gradient(problem, res.control);
  double gnorm = control_norm(g, cur.gradient);
  const double g0 = gnorm;
  res.J.push_back(cur.J);
  res.grad_norm.push_back(gnorm);
  res.step_size.push_back(0.0);

  for (int it = 1;; ++it) {
    if (gnorm <= problem.gradient_tol * (1.0 + g0)) {
      res.stop_reason = "gradient";
      break;
    }
    if (it > problem.max_iter) {
      res.stop_reason = "budget";
      break;
    }
    double alpha = 1.0;
    Series trial;
    double J_trial = 0.0;
    bool accepted = false;
    bool stationary = false;
    for (int h = 0; h <= problem.max_halvings; ++h, alpha *= 0.5) {
      trial = project_admissible(problem, res.control - alpha * cur.gradient);
      const Series delta = trial - res.control;
      if (delta.cwiseAbs().maxCoeff() == 0.0) {
        stationary = true;
        break;
      }
      J_trial = cost_of(problem, trial);
      if (J_trial <= cur.J + problem.armijo_c * control_inner(g, cur.gradient, delta)) {
        accepted = true;
        break;
      }
    }
    if (stationary) {
      res.stop_reason = "stationary";
      break;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "optimizer: line search failed after " << problem.max_halvings << " halvings at iteration " << it
          << " (J = " << cur.J << ", |g| = " << gnorm << ")";
      throw StagnationError(msg.str());
    }
    const double J_prev = cur.J;
    res.control = trial;
    cur = evaluate_gradient(problem, res.control);
    gnorm = control_norm(g, cur.gradient);
    res.J.push_back(cur.J);
    res.grad_norm.push_back(gnorm);
    res.step_size.push_back(alpha);
    res.iterations = it;
    if (J_prev - cur.J < problem.stall_tol * std::abs(J_prev)) {
      res.stop_reason = "stalled";
      break;
    }
  }
  return res;
}

}  // namespace cardio
