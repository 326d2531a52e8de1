#include "cardio/assembly.hpp"

#include "cardio/errors.hpp"

#include <cmath>
#include <vector>

namespace cardio {

namespace {

// Two-point Gauss rule on [0, 1]; exact for the Q1 gradient products.
constexpr double kGaussLo = 0.5 - 0.5 / 1.7320508075688772;
constexpr double kGaussHi = 0.5 + 0.5 / 1.7320508075688772;

struct ElementGeometry {
  int dim;
  int n_local;  // 2^dim
  // grads[q][l] = physical gradient of local basis l at quadrature point q.
  std::vector<std::vector<Eigen::Vector3d>> grads;
  double qweight;  // cell volume / number of quadrature points
};

ElementGeometry make_element(const Grid& grid) {
  ElementGeometry e;
  e.dim = grid.dim();
  e.n_local = 1 << e.dim;
  const int n_q = e.n_local;
  double volume = 1.0;
  for (int a = 0; a < e.dim; ++a) volume *= grid.h(a);
  e.qweight = volume / n_q;
  e.grads.assign(n_q, std::vector<Eigen::Vector3d>(e.n_local, Eigen::Vector3d::Zero()));
  for (int q = 0; q < n_q; ++q) {
    double xi[3];
    for (int a = 0; a < e.dim; ++a) xi[a] = ((q >> a) & 1) ? kGaussHi : kGaussLo;
    for (int l = 0; l < e.n_local; ++l) {
      for (int a = 0; a < e.dim; ++a) {
        double g = 1.0;
        for (int b = 0; b < e.dim; ++b) {
          const bool hi = (l >> b) & 1;
          if (b == a)
            g *= hi ? 1.0 : -1.0;
          else
            g *= hi ? xi[b] : 1.0 - xi[b];
        }
        e.grads[q][l][a] = g / grid.h(a);
      }
    }
  }
  return e;
}

}  // namespace

std::pair<double, double> ellipticity_check(const TensorField& tensor) {
  if (!(tensor.mu1() > 0.0))
    throw EllipticityError("ellipticity violated: smallest tensor eigenvalue is " + std::to_string(tensor.mu1()));
  return {tensor.mu1(), tensor.mu2()};
}

SparseOperator assemble_stiffness(const Grid& grid, const TensorField& tensor) {
  ellipticity_check(tensor);
  if (tensor.cell_count() != grid.cell_count() || tensor.dim() != grid.dim())
    throw ValidationError("assemble_stiffness: tensor field does not match grid");

  const ElementGeometry e = make_element(grid);
  const int d = grid.dim();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(grid.cell_count()) * e.n_local * e.n_local);

  std::vector<Eigen::Index> local(e.n_local);
  Eigen::MatrixXd ke(e.n_local, e.n_local);
  Eigen::Index c = 0;
  for (int k = 0; k < grid.cells(2); ++k)
    for (int j = 0; j < grid.cells(1); ++j)
      for (int i = 0; i < grid.cells(0); ++i, ++c) {
        for (int l = 0; l < e.n_local; ++l)
          local[l] = grid.index(i + (l & 1), d > 1 ? j + ((l >> 1) & 1) : j, d > 2 ? k + ((l >> 2) & 1) : k);
        const LocalTensor& m = tensor.cell(c);
        ke.setZero();
        for (std::size_t q = 0; q < e.grads.size(); ++q)
          for (int l = 0; l < e.n_local; ++l) {
            const Eigen::VectorXd mg = m * e.grads[q][l].head(d);
            for (int r = 0; r < e.n_local; ++r) ke(r, l) += e.qweight * e.grads[q][r].head(d).dot(mg);
          }
        for (int r = 0; r < e.n_local; ++r)
          for (int l = 0; l < e.n_local; ++l) triplets.emplace_back(local[r], local[l], ke(r, l));
      }

  SparseOperator k(grid.node_count(), grid.node_count());
  k.setFromTriplets(triplets.begin(), triplets.end());
  k.makeCompressed();
  return k;
}

OperatorsPtr build_operators(const Grid& grid, const TensorField& m_i, const TensorField& m_e, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("lambda: must be > 0");
  auto ops = std::make_shared<SystemOperators>(SystemOperators{
      grid, m_i, m_e, lambda, assemble_stiffness(grid, m_i), assemble_stiffness(grid, m_i + m_e), {}, grid.weights()});
  ops->riesz = assemble_stiffness(grid, TensorField::isotropic(grid, 1.0));
  for (Eigen::Index n = 0; n < grid.node_count(); ++n) ops->riesz.coeffRef(n, n) += ops->mass[n];
  ops->riesz.makeCompressed();
  return ops;
}

OperatorsPtr build_operators(const Grid& grid, const TensorField& m_i, double lambda) {
  return build_operators(grid, m_i, m_i.scaled(lambda), lambda);
}

double monodomain_form(const SystemOperators& ops, const FieldRef& u, const FieldRef& v) {
  const double c = ops.lambda / (1.0 + ops.lambda);
  return c * u.dot(ops.k_i * v);
}

double compatibility_defect(const Field& load_vector) {
  const double scale = load_vector.cwiseAbs().sum();
  if (scale == 0.0) return 0.0;
  return std::abs(load_vector.sum()) / scale;
}

Field solve_extracellular(const SystemOperators& ops, const Field& load_vector, double tol) {
  if (load_vector.size() != ops.grid.node_count()) throw ValidationError("elliptic solve: size mismatch");
  if (compatibility_defect(load_vector) > 1e-8)
    throw CompatibilityError("elliptic solve: load does not integrate to zero (relative defect " +
                             std::to_string(compatibility_defect(load_vector)) + ")");
  const Field x = cg_solve(ops.k_ie, load_vector, CgOptions{.tol = tol, .singular = true});
  return zero_mean_project(ops.grid, x);
}

Field bidomain_elliptic_solve(const SystemOperators& ops, const FieldRef& load, double tol) {
  return solve_extracellular(ops, ops.mass.cwiseProduct(load), tol);
}

Field reduced_rhs_S(const SystemOperators& ops, const FieldRef& I_i, const FieldRef& I_e, double tol) {
  const Field psi_e = bidomain_elliptic_solve(ops, I_i + I_e, tol);
  return ops.mass.cwiseProduct(I_i) - ops.k_i * psi_e;
}

Field apply_reduced(const SystemOperators& ops, const FieldRef& u, double tol) {
  Field ku = ops.k_i * u;
  if (ku.squaredNorm() == 0.0) return ku;
  // K_i u lies in the complement of the constants up to rounding.
  ku.array() -= ku.mean();
  return ku - ops.k_i * solve_extracellular(ops, ku, tol);
}

}  // namespace cardio
