#pragma once

#include "cardio/control.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cardio {

/// Builds the same problem on any grid (coarse or refined).
using ProblemFactory = std::function<ControlProblem(const Grid&)>;

/// Random perturbation, uniform in [-amplitude, amplitude] per node and frame.
Series random_series(const Grid& grid, std::uint64_t seed, double amplitude);

// ---------------------------------------------------------------- stability

struct StabilityRow {
  double scale;
  double lhs;
  double rhs;
  double ratio;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  /// Largest ratio over the scales.
  double C = 0.0;
  double max_over_median = 0.0;
};

/// Squared-norm bundle of the solution difference: C0L2 and L2H1 of phi_tr,
/// L2H1 of phi_e (bidomain), C0L2 and W12L2 of w.
double stability_lhs(const ProblemConfig& config, const Trajectory& a, const Trajectory& b);
/// Squared L2(0,T; (H1)*) norms of the control differences.
double stability_rhs(const ProblemConfig& config, const Series& dI_i, const Series& dI_e);

/// Runs base and perturbed solves with I'' = I' + s (dI_i, dI_e) for every
/// scale. Bidomain directions are made compatible first. Throws
/// DegenerateInputError for a zero direction or a non-positive scale.
StabilityReport stability_experiment(const ProblemConfig& base, const Series& dI_i, const Series& dI_e,
                                     const std::vector<double>& scales);

// ------------------------------------------------------------ monodomain limit

/// Relative C0L2 gap between the bidomain and monodomain phi_tr for
/// M_e = lambda M_i. Throws ConfigError when the tensors are not proportional.
double monodomain_limit_check(const ProblemConfig& bidomain, double lambda);

// --------------------------------------------------------------- regularity

struct RefinementCheck {
  double coarse = 0.0;
  double refined = 0.0;
  /// refined / coarse (1 when both vanish).
  double ratio = 1.0;
  bool pass = false;
};

/// L4(0,T; H1) norm of phi_tr on `grid` and on its refinement; passes when
/// the refined value is at most 1.1 times the coarse one.
RefinementCheck regularity_monitor(const ProblemFactory& factory, const Grid& grid);

// ----------------------------------------------------------------- a-priori

struct AprioriResult {
  double lhs = 0.0;
  double rhs = 0.0;
  /// lhs / rhs, 0 when rhs vanishes.
  double ratio = 0.0;
};

/// Forward bundle: |phi|^2 C0L2 + |phi|^2 L2H1 + |phi|^4 L4(Omega_T)
/// + |phi_e|^2 L2H1 (bidomain) + |w|^2 C0L2, against
/// 1 + |phi0|^2 + |w0|^2 + |I_i|^2 L2(H1*) + |I_e|^2 L2(H1*).
AprioriResult apriori_forward(const ProblemConfig& config, const Trajectory& trajectory);

/// Adjoint bundle: |P1|^2 C0L2 + |P1|^2 L2H1 + |P2|^2 L2H1 + |P3|^2 C0L2,
/// against the squared L2(Omega_T) norms of the cost partials.
AprioriResult apriori_adjoint(const ProblemConfig& config, const CostConfig& cost, const Trajectory& trajectory,
                              const AdjointTrajectory& adjoint);

/// Relative change of the fitted ratios under one refinement; passes when
/// every change is at most 25%.
struct AprioriRefinement {
  AprioriResult forward_coarse, forward_refined;
  AprioriResult adjoint_coarse, adjoint_refined;
  double forward_change = 0.0;
  double adjoint_change = 0.0;
  bool pass = false;
};

AprioriRefinement apriori_refinement(const ProblemFactory& factory, const Grid& grid);

// -------------------------------------------------------------- convergence

struct ConvergenceLevel {
  double h;
  double dt;
  /// Error against the exact solution, or difference to the next level.
  double value;
};

struct ConvergenceStudy {
  std::vector<ConvergenceLevel> levels;
  /// log2 of successive value ratios.
  std::vector<double> orders;
  /// Order of the finest pair; NaN when inconclusive.
  double observed = 0.0;
  bool conclusive = false;
};

/// Observed orders from a sequence of errors or differences that should
/// shrink by a constant factor per level.
ConvergenceStudy observed_orders(std::vector<ConvergenceLevel> levels);

/// Pure diffusion with exact solution exp(-t) cos(pi x) on the unit
/// interval; space and time refined together with dt ~ h^2.
ConvergenceStudy spatial_convergence(int levels, int base_nodes = 17, double T = 0.25);

/// Self-convergence in time: the step count doubles per level on a fixed
/// spatial grid; values are C0L2 differences of phi_tr between levels.
ConvergenceStudy temporal_convergence(const ProblemFactory& factory, const Grid& grid, int levels);

// --------------------------------------------------------------- gradient

struct GradientCheckRow {
  double delta;
  double finite_difference;
  double adjoint;
  double rel_error;
};

struct GradientCheckReport {
  std::vector<GradientCheckRow> rows;
  double max_rel_error = 0.0;
};

/// Central differences of J along random admissible unit directions,
/// with the step picked by the three-point plateau rule over
/// delta = 1e-1 ... 1e-6.
GradientCheckReport gradient_check(const ControlProblem& problem, int n_directions, std::uint64_t seed);

}  // namespace cardio
