#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace cardio {

/// Nodal values at one time level.
using Field = Eigen::VectorXd;
/// Nodal values over time: one column per time level (nodes x frames).
using Series = Eigen::MatrixXd;
using FieldRef = Eigen::Ref<const Field>;

/// Symmetric sparse operator stored row-compressed.
using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Structured axis-aligned grid on a box domain, plus the time horizon.
///
/// Nodes are numbered x-fastest. Axes beyond `dim()` carry a single node.
class Grid {
 public:
  Grid(int dim, std::array<int, 3> nodes, std::array<double, 3> lengths, double T, int n_steps);

  static Grid line(int nodes, double length, double T, int n_steps) {
    return Grid(1, {nodes, 1, 1}, {length, 0.0, 0.0}, T, n_steps);
  }
  static Grid square(int nodes, double length, double T, int n_steps) {
    return Grid(2, {nodes, nodes, 1}, {length, length, 0.0}, T, n_steps);
  }

  int dim() const { return dim_; }
  int nodes(int axis) const { return nodes_[axis]; }
  int cells(int axis) const { return axis < dim_ ? nodes_[axis] - 1 : 1; }
  double length(int axis) const { return lengths_[axis]; }
  double h(int axis) const { return h_[axis]; }
  const std::array<int, 3>& nodes_per_axis() const { return nodes_; }

  double T() const { return T_; }
  int n_steps() const { return n_steps_; }
  int n_frames() const { return n_steps_ + 1; }
  double dt() const { return T_ / n_steps_; }
  double time(int k) const { return k * dt(); }

  Eigen::Index node_count() const { return static_cast<Eigen::Index>(nodes_[0]) * nodes_[1] * nodes_[2]; }
  Eigen::Index cell_count() const {
    return static_cast<Eigen::Index>(cells(0)) * cells(1) * cells(2);
  }
  Eigen::Index index(int i, int j = 0, int k = 0) const {
    return i + static_cast<Eigen::Index>(nodes_[0]) * (j + static_cast<Eigen::Index>(nodes_[1]) * k);
  }
  std::array<int, 3> multi_index(Eigen::Index node) const;
  std::array<double, 3> coords(Eigen::Index node) const;

  /// Lumped nodal volumes; they sum to the domain measure.
  const Field& weights() const { return weights_; }
  double measure() const;
  /// Trapezoid weights in time, dt/2 at both ends and dt inside.
  Eigen::VectorXd time_weights() const;

  /// Nested refinement: halves every spacing and the time step.
  Grid refined() const;
  /// Same spatial grid with a different number of time steps.
  Grid with_steps(int n_steps) const;

  bool same_space(const Grid& other) const;
  bool operator==(const Grid& other) const;

 private:
  int dim_;
  std::array<int, 3> nodes_;
  std::array<double, 3> lengths_;
  std::array<double, 3> h_{};
  double T_;
  int n_steps_;
  Field weights_;
};

/// Maximum of three rows/cols for per-cell conductivity tensors.
using LocalTensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Per-cell symmetric conductivity tensors with cached eigenvalue bounds.
class TensorField {
 public:
  TensorField(const Grid& grid, std::vector<LocalTensor> cells);

  static TensorField uniform(const Grid& grid, const LocalTensor& m);
  static TensorField isotropic(const Grid& grid, double sigma);

  const LocalTensor& cell(Eigen::Index c) const { return cells_[c]; }
  Eigen::Index cell_count() const { return static_cast<Eigen::Index>(cells_.size()); }
  int dim() const { return dim_; }
  /// Smallest eigenvalue over all cells.
  double mu1() const { return mu1_; }
  /// Largest eigenvalue over all cells.
  double mu2() const { return mu2_; }

  TensorField scaled(double factor) const;
  TensorField operator+(const TensorField& other) const;
  /// True when `other` equals `factor * *this` cell by cell (to rounding).
  bool proportional_to(const TensorField& other, double factor) const;

 private:
  int dim_;
  std::vector<LocalTensor> cells_;
  double mu1_;
  double mu2_;
};

/// Named bundle of non-negative norms.
using NormReport = std::map<std::string, double>;

enum class SpatialNorm { L2, L4, H1 };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

double integrate(const Grid& grid, const FieldRef& field);
double mean(const Grid& grid, const FieldRef& field);
double lp_norm(const Grid& grid, const FieldRef& field, double p);
/// Squared L2 norm of the staggered finite-difference gradient.
double gradient_norm_sq(const Grid& grid, const FieldRef& field);
double h1_norm(const Grid& grid, const FieldRef& field);
double spatial_norm(const Grid& grid, const FieldRef& field, SpatialNorm which);

/// Discrete Bochner norm L^p(0,T; X) using trapezoid weights in time;
/// `p_time == kInfinity` gives the max over frames (the C0 surrogate).
double bochner_norm(const Grid& grid, const Series& series, double p_time, SpatialNorm spatial);
/// Bochner norm from precomputed per-frame spatial norms.
double bochner_from_frames(const Grid& grid, const Eigen::VectorXd& frame_norms, double p_time);

/// Riesz-map surrogate for the norm of the dual of H1: solves
/// `riesz * u = W * load` and returns sqrt((W load)^T u).
double dual_norm(const Grid& grid, const FieldRef& load, const SparseOperator& riesz);

/// W^{1,2}(0,T; L2) norm with backward differences in time.
double w12_l2_norm(const Grid& grid, const Series& series);

Field zero_mean_project(const Grid& grid, const FieldRef& field);

/// L2(0,T; (H1)*) norm of a series, frame-wise dual norms.
double dual_bochner_norm(const Grid& grid, const Series& series, const SparseOperator& riesz);

/// Nodal interpolation of a callable f(x, y, z).
template <class F>
Field interpolate(const Grid& grid, F&& f) {
  Field out(grid.node_count());
  for (Eigen::Index n = 0; n < out.size(); ++n) {
    const auto x = grid.coords(n);
    out[n] = f(x[0], x[1], x[2]);
  }
  return out;
}

void check_series(const Grid& grid, const Series& series, const char* what);

}  // namespace cardio
