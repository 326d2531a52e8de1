#pragma once

#include "cardio/verify.hpp"

#include <cmath>
#include <random>

namespace cardio::test {

/// Gaussian bump in the first `dim` coordinates.
inline Field bump(const Grid& g, std::array<double, 3> c, double width, double amp) {
  const int dim = g.dim();
  return interpolate(g, [&](double x, double y, double z) {
    const double p[3] = {x, y, z};
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (p[a] - c[a]) * (p[a] - c[a]);
    return amp * std::exp(-r2 / (2.0 * width * width));
  });
}

inline Series repeat(const Grid& g, const Field& f) {
  Series s(g.node_count(), g.n_frames());
  for (int k = 0; k < g.n_frames(); ++k) s.col(k) = f;
  return s;
}

/// Smooth excited problem: a voltage bump at x = 0.3, a steady stimulus
/// bump at x = 0.6, tracking of a constant target and the gating variable.
inline ControlProblem make_problem(const Grid& g, SystemKind kind, IonicModel model, double lambda = 1.0,
                                   double sigma = 0.01) {
  ControlProblem p;
  p.config = zero_problem(build_operators(g, TensorField::isotropic(g, sigma), lambda), IonicParams{model}, kind);
  p.config.phi0 = bump(g, {0.3, 0.3, 0.3}, 0.1, 0.8);
  p.config.I_e = repeat(g, bump(g, {0.6, 0.5, 0.5}, 0.1, 0.5));
  if (kind == SystemKind::Bidomain)
    p.config.I_e = compatibility_enforce(g, p.config.I_i, p.config.I_e).second;
  p.cost.phi_des = Series::Constant(g.node_count(), g.n_frames(), 0.2);
  p.cost.w_gate = 0.5;
  p.cost.mu = 0.1;
  if (kind == SystemKind::Bidomain) p.cost.w_eta = 0.3;
  p.config.tol = {1e-12, 1e-13};
  return p;
}

inline Field random_field(const Grid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Field f(g.node_count());
  for (auto& v : f) v = u(rng);
  return f;
}

/// Trapezoid nodal weights built axis by axis, independent of Grid::weights().
inline Field product_weights(const Grid& g) {
  Field w(g.node_count());
  for (Eigen::Index n = 0; n < w.size(); ++n) {
    const auto ijk = g.multi_index(n);
    double v = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
      const bool end = ijk[a] == 0 || ijk[a] == g.nodes(a) - 1;
      v *= end ? 0.5 * g.h(a) : g.h(a);
    }
    w[n] = v;
  }
  return w;
}

/// Weighted mean from the independent weights.
inline double oracle_mean(const Grid& g, const FieldRef& f) {
  const Field w = product_weights(g);
  return w.dot(f) / w.sum();
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline constexpr IonicModel kModels[] = {IonicModel::FitzHughNagumo, IonicModel::RogersMcCulloch,
                                         IonicModel::AlievPanfilov};
inline constexpr SystemKind kSystems[] = {SystemKind::Monodomain, SystemKind::Bidomain};

}  // namespace cardio::test
