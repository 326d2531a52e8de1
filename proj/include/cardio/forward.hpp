#pragma once

#include "cardio/assembly.hpp"
#include "cardio/grid.hpp"
#include "cardio/ionic.hpp"

#include <utility>

namespace cardio {

enum class SystemKind { Monodomain, Bidomain };

std::string to_string(SystemKind kind);

struct SolverTolerances {
  /// Relative residual of the implicit parabolic solve.
  double cg = 1e-10;
  /// Relative residual of the extracellular elliptic solves.
  double inner = 1e-11;
};

/// Everything a forward solve needs. Controls hold one frame per time level.
struct ProblemConfig {
  OperatorsPtr ops;
  IonicParams ionic;
  SystemKind kind = SystemKind::Monodomain;
  Field phi0;
  Field w0;
  Series I_i;
  Series I_e;
  /// When false the ionic current is switched off (pure diffusion).
  bool reaction = true;
  SolverTolerances tol;

  const Grid& grid() const { return ops->grid; }
  double lambda() const { return ops->lambda; }
  /// Throws on shape mismatches, invalid parameters, or (bidomain) controls
  /// that violate compatibility.
  void validate() const;
};

/// Convenience: zero initial data and zero controls on the operators' grid.
ProblemConfig zero_problem(OperatorsPtr ops, IonicParams ionic, SystemKind kind);

struct SystemState {
  double t = 0.0;
  Field phi_tr;
  /// Zero-mean extracellular potential; zeros for the monodomain system.
  Field phi_e;
  Field w;
};

struct Trajectory {
  Series phi_tr;
  Series phi_e;
  Series w;

  SystemState state(int k, double dt) const {
    return {k * dt, phi_tr.col(k), phi_e.col(k), w.col(k)};
  }
};

/// Subtracts from I_e, frame by frame, the spatial mean of I_i + I_e.
std::pair<Series, Series> compatibility_enforce(const Grid& grid, const Series& I_i, const Series& I_e);

/// Largest per-frame relative compatibility defect of I_i + I_e.
double compatibility_defect(const Grid& grid, const Series& I_i, const Series& I_e);

/// Semi-implicit time stepper: implicit diffusion, explicit ionic current,
/// exponential gating update. Holds a copy of the configuration.
class ForwardSolver {
 public:
  explicit ForwardSolver(ProblemConfig config);

  const ProblemConfig& config() const { return config_; }
  SystemState initial_state() const;
  /// Advances from time level k to k + 1.
  SystemState step(const SystemState& state, int k) const;
  /// Solves (Mass + dt A) x = rhs, where A is the monodomain diffusion
  /// operator or the reduced bidomain operator.
  Field solve_implicit(const Field& rhs) const;
  /// Extracellular potential recovered from phi_tr at time level k.
  Field extracellular(const FieldRef& phi_tr, int k) const;

 private:
  ProblemConfig config_;
  SparseOperator implicit_;  // monodomain only
  Field inv_diag_;
};

SystemState step_monodomain(const SystemState& state, const ProblemConfig& config, int k);
SystemState step_bidomain(const SystemState& state, const ProblemConfig& config, int k);

struct ForwardResult {
  Trajectory trajectory;
  NormReport report;
};

ForwardResult run_forward(const ProblemConfig& config);
Trajectory simulate(const ProblemConfig& config);

/// Norm bundle of the a-priori estimates plus the L4(0,T;H1) monitor.
NormReport forward_norms(const ProblemConfig& config, const Trajectory& traj);

}  // namespace cardio
