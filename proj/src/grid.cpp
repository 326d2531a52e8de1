#include "cardio/grid.hpp"

#include "cardio/errors.hpp"
#include "cardio/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cardio {

namespace {

Eigen::VectorXd trapezoid_1d(int n, double h) {
  if (n == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  w[0] = w[n - 1] = 0.5 * h;
  return w;
}

}  // namespace

Grid::Grid(int dim, std::array<int, 3> nodes, std::array<double, 3> lengths, double T, int n_steps)
    : dim_(dim), nodes_(nodes), lengths_(lengths), T_(T), n_steps_(n_steps) {
  if (dim < 1 || dim > 3) throw ValidationError("grid: dim must be 1, 2 or 3");
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      if (nodes_[a] < 2) throw ValidationError("grid: need at least 2 nodes per axis");
      if (!(lengths_[a] > 0.0)) throw ValidationError("grid: axis lengths must be positive");
      h_[a] = lengths_[a] / (nodes_[a] - 1);
    } else {
      nodes_[a] = 1;
      lengths_[a] = 0.0;
      h_[a] = 0.0;
    }
  }
  if (!(T_ > 0.0)) throw ValidationError("grid: time horizon T must be positive");
  if (n_steps_ < 1) throw ValidationError("grid: need at least one time step");

  const auto wx = trapezoid_1d(nodes_[0], h_[0]);
  const auto wy = trapezoid_1d(nodes_[1], h_[1]);
  const auto wz = trapezoid_1d(nodes_[2], h_[2]);
  weights_.resize(node_count());
  for (int k = 0; k < nodes_[2]; ++k)
    for (int j = 0; j < nodes_[1]; ++j)
      for (int i = 0; i < nodes_[0]; ++i) weights_[index(i, j, k)] = wx[i] * wy[j] * wz[k];
}

std::array<int, 3> Grid::multi_index(Eigen::Index node) const {
  const int i = static_cast<int>(node % nodes_[0]);
  const Eigen::Index rest = node / nodes_[0];
  const int j = static_cast<int>(rest % nodes_[1]);
  const int k = static_cast<int>(rest / nodes_[1]);
  return {i, j, k};
}

std::array<double, 3> Grid::coords(Eigen::Index node) const {
  const auto m = multi_index(node);
  return {m[0] * h_[0], m[1] * h_[1], m[2] * h_[2]};
}

double Grid::measure() const {
  double m = 1.0;
  for (int a = 0; a < dim_; ++a) m *= lengths_[a];
  return m;
}

Eigen::VectorXd Grid::time_weights() const { return trapezoid_1d(n_frames(), dt()); }

Grid Grid::refined() const {
  std::array<int, 3> n = nodes_;
  for (int a = 0; a < dim_; ++a) n[a] = 2 * nodes_[a] - 1;
  return Grid(dim_, n, lengths_, T_, 2 * n_steps_);
}

Grid Grid::with_steps(int n_steps) const { return Grid(dim_, nodes_, lengths_, T_, n_steps); }

bool Grid::same_space(const Grid& other) const {
  return dim_ == other.dim_ && nodes_ == other.nodes_ && lengths_ == other.lengths_;
}

bool Grid::operator==(const Grid& other) const {
  return same_space(other) && T_ == other.T_ && n_steps_ == other.n_steps_;
}

TensorField::TensorField(const Grid& grid, std::vector<LocalTensor> cells)
    : dim_(grid.dim()), cells_(std::move(cells)), mu1_(kInfinity), mu2_(-kInfinity) {
  if (static_cast<Eigen::Index>(cells_.size()) != grid.cell_count())
    throw ValidationError("tensor field: one tensor per cell required");
  for (const auto& m : cells_) {
    if (m.rows() != dim_ || m.cols() != dim_) throw ValidationError("tensor field: tensor size must equal grid dim");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("tensor field: conductivity tensor is not symmetric");
    Eigen::SelfAdjointEigenSolver<LocalTensor> es(m, Eigen::EigenvaluesOnly);
    mu1_ = std::min(mu1_, es.eigenvalues().minCoeff());
    mu2_ = std::max(mu2_, es.eigenvalues().maxCoeff());
  }
}

TensorField TensorField::uniform(const Grid& grid, const LocalTensor& m) {
  return TensorField(grid, std::vector<LocalTensor>(grid.cell_count(), m));
}

TensorField TensorField::isotropic(const Grid& grid, double sigma) {
  return uniform(grid, sigma * LocalTensor::Identity(grid.dim(), grid.dim()));
}

TensorField TensorField::scaled(double factor) const {
  TensorField out = *this;
  for (auto& m : out.cells_) m *= factor;
  out.mu1_ = factor >= 0 ? mu1_ * factor : mu2_ * factor;
  out.mu2_ = factor >= 0 ? mu2_ * factor : mu1_ * factor;
  return out;
}

TensorField TensorField::operator+(const TensorField& other) const {
  if (other.cells_.size() != cells_.size() || other.dim_ != dim_)
    throw ValidationError("tensor field: size mismatch in sum");
  TensorField out = *this;
  out.mu1_ = kInfinity;
  out.mu2_ = -kInfinity;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    out.cells_[c] += other.cells_[c];
    Eigen::SelfAdjointEigenSolver<LocalTensor> es(out.cells_[c], Eigen::EigenvaluesOnly);
    out.mu1_ = std::min(out.mu1_, es.eigenvalues().minCoeff());
    out.mu2_ = std::max(out.mu2_, es.eigenvalues().maxCoeff());
  }
  return out;
}

bool TensorField::proportional_to(const TensorField& other, double factor) const {
  if (other.cells_.size() != cells_.size() || other.dim_ != dim_) return false;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const LocalTensor expect = factor * cells_[c];
    const double scale = std::max(1e-300, expect.cwiseAbs().maxCoeff());
    if ((other.cells_[c] - expect).cwiseAbs().maxCoeff() > 1e-14 * scale) return false;
  }
  return true;
}

double integrate(const Grid& grid, const FieldRef& field) {
  if (field.size() != grid.node_count()) throw ValidationError("integrate: field size does not match grid");
  return grid.weights().dot(field);
}

double mean(const Grid& grid, const FieldRef& field) { return integrate(grid, field) / grid.measure(); }

double lp_norm(const Grid& grid, const FieldRef& field, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("lp_norm: need finite p >= 1");
  if (field.size() != grid.node_count()) throw ValidationError("lp_norm: field size does not match grid");
  if (p == 2.0) return std::sqrt(grid.weights().dot(field.cwiseAbs2()));
  const double s = grid.weights().dot(field.cwiseAbs().array().pow(p).matrix());
  return std::pow(s, 1.0 / p);
}

double gradient_norm_sq(const Grid& grid, const FieldRef& field) {
  if (field.size() != grid.node_count()) throw ValidationError("h1_norm: field size does not match grid");
  const auto& n = grid.nodes_per_axis();
  std::array<Eigen::VectorXd, 3> w1;
  for (int a = 0; a < 3; ++a) w1[a] = trapezoid_1d(n[a], grid.h(a));

  double total = 0.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const double h = grid.h(a);
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          std::array<int, 3> m{i, j, k};
          if (m[a] + 1 >= n[a]) continue;
          std::array<int, 3> m2 = m;
          ++m2[a];
          const double d = (field[grid.index(m2[0], m2[1], m2[2])] - field[grid.index(i, j, k)]) / h;
          double w = h;
          for (int b = 0; b < 3; ++b)
            if (b != a) w *= w1[b][m[b]];
          total += w * d * d;
        }
  }
  return total;
}

double h1_norm(const Grid& grid, const FieldRef& field) {
  const double l2 = lp_norm(grid, field, 2.0);
  return std::sqrt(l2 * l2 + gradient_norm_sq(grid, field));
}

double spatial_norm(const Grid& grid, const FieldRef& field, SpatialNorm which) {
  switch (which) {
    case SpatialNorm::L2: return lp_norm(grid, field, 2.0);
    case SpatialNorm::L4: return lp_norm(grid, field, 4.0);
    case SpatialNorm::H1: return h1_norm(grid, field);
  }
  return 0.0;
}

double bochner_from_frames(const Grid& grid, const Eigen::VectorXd& frame_norms, double p_time) {
  if (frame_norms.size() != grid.n_frames()) throw ValidationError("bochner_norm: frame count mismatch");
  if (std::isinf(p_time)) return frame_norms.maxCoeff();
  if (p_time != 1.0 && p_time != 2.0 && p_time != 4.0)
    throw ValidationError("bochner_norm: p_time must be 1, 2, 4 or infinity");
  const Eigen::VectorXd tw = grid.time_weights();
  const double s = tw.dot(frame_norms.array().pow(p_time).matrix());
  return std::pow(s, 1.0 / p_time);
}

double bochner_norm(const Grid& grid, const Series& series, double p_time, SpatialNorm spatial) {
  check_series(grid, series, "bochner_norm");
  Eigen::VectorXd norms(series.cols());
  for (Eigen::Index k = 0; k < series.cols(); ++k) norms[k] = spatial_norm(grid, series.col(k), spatial);
  return bochner_from_frames(grid, norms, p_time);
}

double dual_norm(const Grid& grid, const FieldRef& load, const SparseOperator& riesz) {
  if (load.size() != grid.node_count() || riesz.rows() != load.size())
    throw ValidationError("dual_norm: size mismatch");
  const Field lv = grid.weights().cwiseProduct(load);
  if (lv.squaredNorm() == 0.0) return 0.0;
  const Field u = cg_solve(riesz, lv, CgOptions{.tol = 1e-12});
  return std::sqrt(std::max(0.0, lv.dot(u)));
}

double dual_bochner_norm(const Grid& grid, const Series& series, const SparseOperator& riesz) {
  check_series(grid, series, "dual_bochner_norm");
  Eigen::VectorXd norms(series.cols());
  for (Eigen::Index k = 0; k < series.cols(); ++k) norms[k] = dual_norm(grid, series.col(k), riesz);
  return bochner_from_frames(grid, norms, 2.0);
}

double w12_l2_norm(const Grid& grid, const Series& series) {
  const double l2 = bochner_norm(grid, series, 2.0, SpatialNorm::L2);
  double deriv = 0.0;
  const double dt = grid.dt();
  for (Eigen::Index k = 1; k < series.cols(); ++k) {
    const double n = lp_norm(grid, (series.col(k) - series.col(k - 1)) / dt, 2.0);
    deriv += dt * n * n;
  }
  return std::sqrt(l2 * l2 + deriv);
}

Field zero_mean_project(const Grid& grid, const FieldRef& field) {
  return field.array() - mean(grid, field);
}

void check_series(const Grid& grid, const Series& series, const char* what) {
  if (series.rows() != grid.node_count() || series.cols() != grid.n_frames())
    throw ValidationError(std::string(what) + ": series must be node_count x (n_steps + 1)");
}

}  // namespace cardio
