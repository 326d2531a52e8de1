#include "cardio/linalg.hpp"

namespace cardio {

Field inverse_diagonal(const SparseOperator& op) {
  Field d = op.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  return d;
}

Field cg_solve(const SparseOperator& op, const Field& rhs, const CgOptions& opt) {
  if (op.rows() != rhs.size()) throw ValidationError("cg_solve: dimension mismatch");
  Field x = Field::Zero(rhs.size());
  pcg([&](const Field& v, Field& out) { out.noalias() = op * v; }, inverse_diagonal(op), rhs, x, opt);
  return x;
}

Field cg_solve(const SparseOperator& op, const Field& mass_shift, const Field& rhs, const CgOptions& opt) {
  if (op.rows() != rhs.size() || mass_shift.size() != rhs.size())
    throw ValidationError("cg_solve: dimension mismatch");
  Field diag = op.diagonal() + mass_shift;
  Field inv = diag.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 1.0; });
  Field x = Field::Zero(rhs.size());
  pcg(
      [&](const Field& v, Field& out) {
        out.noalias() = op * v;
        out += mass_shift.cwiseProduct(v);
      },
      inv, rhs, x, opt);
  return x;
}

}  // namespace cardio
