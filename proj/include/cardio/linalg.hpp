#pragma once

#include "cardio/errors.hpp"
#include "cardio/grid.hpp"

#include <cmath>
#include <string>

namespace cardio {

struct CgOptions {
  double tol = 1e-10;
  /// 0 selects 10 * n.
  int max_iter = 0;
  /// Operator has the constant vector in its kernel; iterates are kept
  /// orthogonal to it and the right-hand side is deflated first.
  bool singular = false;
};

struct CgResult {
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {
inline void deflate(Field& v) { v.array() -= v.mean(); }
}  // namespace detail

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// (semi)definite operator given as a callable `apply(x, y)` computing y = A x.
/// `x` holds the initial guess on entry and the solution on exit.
template <class Apply>
CgResult pcg(Apply&& apply, const Field& inv_diag, const Field& rhs, Field& x, const CgOptions& opt) {
  const Eigen::Index n = rhs.size();
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(10 * n);

  Field b = rhs;
  if (opt.singular) detail::deflate(b);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    x.setZero(n);
    return {0, 0.0};
  }
  if (x.size() != n) x.setZero(n);
  if (opt.singular) detail::deflate(x);

  Field r(n), z(n), p(n), q(n);
  apply(x, q);
  r = b - q;
  if (opt.singular) detail::deflate(r);

  double res = r.norm() / b_norm;
  if (res <= opt.tol) return {0, res};

  z = inv_diag.cwiseProduct(r);
  if (opt.singular) detail::deflate(z);
  p = z;
  double rz = r.dot(z);

  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      throw SolverError("cg: operator not positive definite on search direction (p^T A p = " +
                            std::to_string(pq) + ")",
                        res);
    }
    const double alpha = rz / pq;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    if (opt.singular) detail::deflate(r);
    res = r.norm() / b_norm;
    if (!std::isfinite(res)) throw SolverError("cg: non-finite residual", res);
    if (res <= opt.tol) return {it, res};
    z = inv_diag.cwiseProduct(r);
    if (opt.singular) detail::deflate(z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw SolverError("cg: no convergence after " + std::to_string(max_iter) +
                        " iterations, relative residual " + std::to_string(res),
                    res);
}

/// Solves op * x = rhs.
Field cg_solve(const SparseOperator& op, const Field& rhs, const CgOptions& opt = {});
/// Solves (op + diag(mass_shift)) * x = rhs.
Field cg_solve(const SparseOperator& op, const Field& mass_shift, const Field& rhs,
               const CgOptions& opt = {});

Field inverse_diagonal(const SparseOperator& op);

}  // namespace cardio
