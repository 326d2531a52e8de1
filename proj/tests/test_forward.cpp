#include "support.hpp"

#include <doctest.h>

using namespace cardio;
using namespace cardio::test;

namespace {

// Scalar reference: explicit cubic current, exponential gating with the
// trapezoid source, written out without the library's ionic helpers.
struct ScalarOde {
  IonicModel kind;
  double a, b, kappa, eps;

  double current(double phi, double w) const {
    const double c = phi * (phi - a) * (phi - 1.0);
    return kind == IonicModel::FitzHughNagumo ? c + w : b * c + phi * w;
  }
  double source(double phi) const {
    return kind == IonicModel::AlievPanfilov ? kappa * ((a + 1.0) * phi - phi * phi) : kappa * phi;
  }
  std::pair<double, double> step(double phi, double w, double forcing, double dt) const {
    const double next = phi + dt * (forcing - current(phi, w));
    const double e = std::exp(-eps * dt);
    return {next, e * w + (1.0 - e) * source(0.5 * (phi + next))};
  }
};

}  // namespace

TEST_CASE("rest state is an equilibrium") {
  const Grid g = Grid::line(33, 1.0, 1.0, 50);
  for (auto kind : kSystems)
    for (auto m : kModels) {
      const auto cfg = zero_problem(build_operators(g, TensorField::isotropic(g, 0.01), 1.0), IonicParams{m}, kind);
      const Trajectory t = simulate(cfg);
      CHECK(t.phi_tr.cwiseAbs().maxCoeff() == 0.0);
      CHECK(t.phi_e.cwiseAbs().maxCoeff() == 0.0);
      CHECK(t.w.cwiseAbs().maxCoeff() == 0.0);
      for (const auto& [key, value] : forward_norms(cfg, t)) CHECK_MESSAGE(value == 0.0, key);
    }
}

TEST_CASE("spatially constant data reduces to the scalar ODE") {
  const Grid g = Grid::square(9, 1.0, 2.0, 80);
  for (auto kind : kSystems)
    for (auto m : kModels) {
      const IonicParams ip{m, 0.13, 1.2, 4.0, 0.5};
      auto cfg = zero_problem(build_operators(g, TensorField::isotropic(g, 0.05), 2.0), ip, kind);
      cfg.tol = {1e-13, 1e-13};
      cfg.phi0.setConstant(0.3);
      cfg.w0.setConstant(0.05);
      const double c = 0.2;
      double forcing;
      if (kind == SystemKind::Monodomain) {
        cfg.I_e.setConstant(-c);  // forcing (lambda I_i - I_e) / (1 + lambda)
        forcing = c / 3.0;
      } else {
        cfg.I_i.setConstant(c);
        cfg.I_e.setConstant(-c);
        forcing = c;
      }
      const Trajectory t = simulate(cfg);
      const ScalarOde ode{m, ip.a, ip.b, ip.kappa, ip.eps};
      double phi = 0.3, w = 0.05, worst = 0.0;
      for (int k = 0; k <= g.n_steps(); ++k) {
        worst = std::max({worst, (t.phi_tr.col(k).array() - phi).abs().maxCoeff(),
                          (t.w.col(k).array() - w).abs().maxCoeff()});
        std::tie(phi, w) = ode.step(phi, w, forcing, g.dt());
      }
      CHECK(worst <= 1e-10);
      CHECK(t.phi_e.cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("stored gating variable is reproduced from the stored potential") {
  const Grid g = Grid::line(33, 1.0, 1.0, 100);
  for (auto kind : kSystems)
    for (auto m : kModels) {
      const ControlProblem p = make_problem(g, kind, m);
      const Trajectory t = simulate(p.config);
      Field w = p.config.w0;
      double worst = 0.0;
      for (int k = 0; k < g.n_steps(); ++k) {
        for (Eigen::Index i = 0; i < w.size(); ++i)
          w[i] = gating_exact_update(p.config.ionic, w[i], {t.phi_tr(i, k), t.phi_tr(i, k + 1)}, g.dt());
        worst = std::max(worst, (w - t.w.col(k + 1)).cwiseAbs().maxCoeff());
      }
      CHECK(worst <= 1e-12);
    }
}

TEST_CASE("extracellular potential has zero mean") {
  const Grid g = Grid::square(17, 1.0, 0.5, 25);
  LocalTensor mi(2, 2), me(2, 2);
  mi << 0.02, 0.004, 0.004, 0.005;
  me << 0.02, 0.0, 0.0, 0.01;
  auto p = make_problem(g, SystemKind::Bidomain, IonicModel::AlievPanfilov);
  p.config.ops = build_operators(g, TensorField::uniform(g, mi), TensorField::uniform(g, me), 1.0);
  p.config.I_i = repeat(g, zero_mean_project(g, bump(g, {0.2, 0.7, 0}, 0.1, 0.3)));
  const Trajectory t = simulate(p.config);
  for (int k = 0; k < g.n_frames(); ++k) CHECK(std::abs(mean(g, t.phi_e.col(k))) <= 1e-10);
  CHECK(t.phi_e.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bidomain with proportional tensors matches the monodomain system") {
  const Grid g = Grid::line(33, 1.0, 1.0, 50);
  for (double lambda : {0.5, 1.0, 2.0})
    for (auto m : kModels) {
      auto p = make_problem(g, SystemKind::Bidomain, m, lambda);
      p.config.tol = {1e-12, 1e-13};
      CHECK(monodomain_limit_check(p.config, lambda) <= 1e-8);

      auto mono = p.config;
      mono.kind = SystemKind::Monodomain;
      const SystemState s0 = ForwardSolver(p.config).initial_state();
      const SystemState b1 = step_bidomain(s0, p.config, 0);
      const SystemState m1 = step_monodomain(s0, mono, 0);
      CHECK((b1.phi_tr - m1.phi_tr).norm() <= 1e-9 * m1.phi_tr.norm());
    }
}

TEST_CASE("runs are deterministic") {
  const Grid g = Grid::line(33, 1.0, 0.5, 40);
  for (auto kind : kSystems) {
    const auto p = make_problem(g, kind, IonicModel::RogersMcCulloch);
    const Trajectory a = simulate(p.config), b = simulate(p.config);
    CHECK(a.phi_tr == b.phi_tr);
    CHECK(a.phi_e == b.phi_e);
    CHECK(a.w == b.w);
  }
}

TEST_CASE("perturbed initial data converge linearly to the base run") {
  const Grid g = Grid::line(33, 1.0, 0.5, 40);
  for (auto kind : kSystems) {
    const auto p = make_problem(g, kind, IonicModel::AlievPanfilov);
    const Trajectory base = simulate(p.config);
    const Field dir = bump(g, {0.7, 0.5, 0.5}, 0.15, 1.0);
    std::vector<double> gaps;
    for (double e : {1e-3, 5e-4, 2.5e-4}) {
      auto q = p.config;
      q.phi0 += e * dir;
      gaps.push_back(bochner_norm(g, simulate(q).phi_tr - base.phi_tr, kInfinity, SpatialNorm::L2));
    }
    CHECK(gaps[0] / gaps[1] == doctest::Approx(2.0).epsilon(0.01));
    CHECK(gaps[1] / gaps[2] == doctest::Approx(2.0).epsilon(0.01));
  }
}

TEST_CASE("time refinement converges at first order") {
  const Grid g = Grid::line(33, 1.0, 1.0, 40);
  const ConvergenceStudy st = temporal_convergence(
      [](const Grid& gg) { return make_problem(gg, SystemKind::Monodomain, IonicModel::RogersMcCulloch); }, g, 3);
  REQUIRE(st.conclusive);
  CHECK(st.observed >= 0.8);
  CHECK(st.observed <= 1.3);
}

TEST_CASE("forward norms are stable under refinement") {
  const Grid g = Grid::line(33, 1.0, 1.0, 50);
  for (auto kind : kSystems) {
    const auto coarse = make_problem(g, kind, IonicModel::RogersMcCulloch);
    const auto fine = make_problem(g.refined(), kind, IonicModel::RogersMcCulloch);
    const NormReport a = run_forward(coarse.config).report, b = run_forward(fine.config).report;
    REQUIRE(a.size() == b.size());
    for (const auto& [key, value] : a) {
      INFO(key);
      CHECK(value > 0.0);
      CHECK(std::abs(b.at(key) - value) <= 0.1 * value);
    }
  }
}

TEST_CASE("compatibility_enforce") {
  const Grid g = Grid::square(9, 1.0, 1.0, 4);
  Series I_i = Series::Zero(g.node_count(), g.n_frames()), I_e = I_i;
  for (int k = 0; k < g.n_frames(); ++k) {
    I_i.col(k) = random_field(g, k);
    I_e.col(k) = random_field(g, 50 + k, 0.0, 2.0);
  }
  const auto [ci, ce] = compatibility_enforce(g, I_i, I_e);
  CHECK(ci == I_i);
  for (int k = 0; k < g.n_frames(); ++k) CHECK(std::abs(mean(g, ci.col(k) + ce.col(k))) <= 1e-12);
  CHECK(compatibility_defect(g, ci, ce) <= 1e-12);

  const auto [ci2, ce2] = compatibility_enforce(g, ci, ce);
  CHECK((ce2 - ce).cwiseAbs().maxCoeff() <= 1e-14);

  const Series ones = Series::Ones(g.node_count(), g.n_frames());
  const auto [ui, ue] = compatibility_enforce(g, ones, Series::Zero(g.node_count(), g.n_frames()));
  CHECK((ue.array() + 1.0).abs().maxCoeff() <= 1e-15);
}

TEST_CASE("problem validation") {
  const Grid g = Grid::line(9, 1.0, 1.0, 4);
  const auto ops = build_operators(g, TensorField::isotropic(g, 0.1), 1.0);
  auto bad_a = zero_problem(ops, IonicParams{IonicModel::RogersMcCulloch, 1.5}, SystemKind::Monodomain);
  CHECK_THROWS_AS(simulate(bad_a), ValidationError);

  auto shape = zero_problem(ops, IonicParams{}, SystemKind::Monodomain);
  shape.I_e.resize(g.node_count(), 3);
  CHECK_THROWS_AS(simulate(shape), ValidationError);

  auto incompatible = zero_problem(ops, IonicParams{}, SystemKind::Bidomain);
  incompatible.I_e.setConstant(1.0);
  CHECK_THROWS_AS(simulate(incompatible), CompatibilityError);
  incompatible.kind = SystemKind::Monodomain;
  CHECK_NOTHROW(simulate(incompatible));

  auto wrong = zero_problem(ops, IonicParams{}, SystemKind::Bidomain);
  CHECK_THROWS_AS(step_monodomain(ForwardSolver(wrong).initial_state(), wrong, 0), ValidationError);
}

TEST_CASE("blow-up is reported as divergence") {
  const Grid g = Grid::line(9, 1.0, 100.0, 10);
  auto cfg = zero_problem(build_operators(g, TensorField::isotropic(g, 0.1), 1.0), IonicParams{}, SystemKind::Monodomain);
  cfg.phi0.setConstant(50.0);
  CHECK_THROWS_AS(simulate(cfg), DivergenceError);
}
