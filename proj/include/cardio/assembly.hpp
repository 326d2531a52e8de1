#pragma once

#include "cardio/grid.hpp"
#include "cardio/linalg.hpp"

#include <memory>
#include <utility>

namespace cardio {

/// Bilinear (Q1) finite-element stiffness of the form
/// u^T K v ~ \int grad(u)^T M grad(v) dx with natural zero-flux boundary.
/// Throws EllipticityError when a cell tensor is not positive definite.
SparseOperator assemble_stiffness(const Grid& grid, const TensorField& tensor);

/// Returns (mu1, mu2): the smallest and largest eigenvalue over all cells.
std::pair<double, double> ellipticity_check(const TensorField& tensor);

/// Every spatial operator a simulation needs, built once per grid.
///
/// `mass` is the lumped (diagonal) mass stored as a vector; `riesz` is the
/// identity-tensor stiffness plus mass, used for dual norms.
struct SystemOperators {
  Grid grid;
  TensorField m_i;
  TensorField m_e;
  double lambda;
  SparseOperator k_i;
  SparseOperator k_ie;
  SparseOperator riesz;
  Field mass;
};

using OperatorsPtr = std::shared_ptr<const SystemOperators>;

/// `m_e` may differ from lambda * m_i; lambda is only used by the
/// monodomain system.
OperatorsPtr build_operators(const Grid& grid, const TensorField& m_i, const TensorField& m_e, double lambda);
/// Proportional tensors M_e = lambda * M_i.
OperatorsPtr build_operators(const Grid& grid, const TensorField& m_i, double lambda);

/// (lambda / (1 + lambda)) u^T K_i v.
double monodomain_form(const SystemOperators& ops, const FieldRef& u, const FieldRef& v);

/// Solves K_ie phi = load_vector (an assembled functional) in the zero-mean
/// gauge. Throws CompatibilityError unless the load integrates to zero.
Field solve_extracellular(const SystemOperators& ops, const Field& load_vector, double tol = 1e-11);

/// Same as solve_extracellular with load vector Mass * load.
Field bidomain_elliptic_solve(const SystemOperators& ops, const FieldRef& load, double tol = 1e-11);

/// Load vector of the reduced right-hand side: Mass I_i - K_i psi_e where
/// psi_e solves the extracellular problem driven by I_i + I_e.
Field reduced_rhs_S(const SystemOperators& ops, const FieldRef& I_i, const FieldRef& I_e, double tol = 1e-11);

/// Reduced bidomain operator A u = K_i u - K_i K_ie^+ K_i u (matrix-free).
Field apply_reduced(const SystemOperators& ops, const FieldRef& u, double tol = 1e-11);

/// Relative compatibility defect |sum(v)| / sum(|v|) of a load vector.
double compatibility_defect(const Field& load_vector);

}  // namespace cardio
