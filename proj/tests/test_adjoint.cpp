#include "support.hpp"

#include <doctest.h>

using namespace cardio;
using namespace cardio::test;

namespace {

AdjointTrajectory adjoint_of(const ControlProblem& p) {
  return run_adjoint(simulate(p.config), p.config, p.cost).adjoint;
}

double rel_series(const Series& a, const Series& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return scale == 0.0 ? 0.0 : (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("cost partials") {
  const Grid g = Grid::line(17, 1.0, 1.0, 4);
  CostConfig c;
  c.w_phi = 2.0;
  c.w_eta = 0.5;
  c.w_gate = 0.0;
  c.phi_des = repeat(g, random_field(g, 1));
  c.eta_des = repeat(g, random_field(g, 2));
  SystemState s{0.0, c.phi_des.col(2), c.eta_des.col(2), random_field(g, 3)};
  const CostPartials at_target = cost_partials(c, s, 2);
  CHECK(at_target.r_phi.cwiseAbs().maxCoeff() == 0.0);
  CHECK(at_target.r_eta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(at_target.r_w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(running_cost(c, s, 2).cwiseAbs().maxCoeff() == 0.0);

  CostConfig unit;
  unit.phi_des = Series::Constant(g.node_count(), g.n_frames(), 0.25);
  SystemState shifted{0.0, Field::Constant(g.node_count(), 0.25 + 0.7), Field::Zero(g.node_count()),
                      Field::Zero(g.node_count())};
  CHECK((cost_partials(unit, shifted, 0).r_phi.array() - 0.7).abs().maxCoeff() <= 1e-15);

  // Central differences of the pointwise running cost.
  c.w_gate = 1.5;
  SystemState r{0.0, random_field(g, 4), random_field(g, 5), random_field(g, 6)};
  const CostPartials p = cost_partials(c, r, 1);
  const double d = 1e-6;
  for (Eigen::Index i = 0; i < g.node_count(); ++i) {
    auto bumped = [&](Field SystemState::*member, double step) {
      SystemState q = r;
      (q.*member)[i] += step;
      return running_cost(c, q, 1)[i];
    };
    CHECK(rel_diff((bumped(&SystemState::phi_tr, d) - bumped(&SystemState::phi_tr, -d)) / (2 * d), p.r_phi[i]) <= 1e-6);
    CHECK(rel_diff((bumped(&SystemState::phi_e, d) - bumped(&SystemState::phi_e, -d)) / (2 * d), p.r_eta[i]) <= 1e-6);
    CHECK(rel_diff((bumped(&SystemState::w, d) - bumped(&SystemState::w, -d)) / (2 * d), p.r_w[i]) <= 1e-6);
  }
}

TEST_CASE("zero cost gives a zero adjoint") {
  const Grid g = Grid::line(33, 1.0, 1.0, 30);
  for (auto kind : kSystems)
    for (auto m : kModels) {
      auto p = make_problem(g, kind, m);
      p.cost = CostConfig{};
      p.cost.w_phi = 0.0;
      const AdjointResult a = run_adjoint(simulate(p.config), p.config, p.cost);
      CHECK(a.adjoint.p1.cwiseAbs().maxCoeff() == 0.0);
      CHECK(a.adjoint.p2.cwiseAbs().maxCoeff() == 0.0);
      CHECK(a.adjoint.p3.cwiseAbs().maxCoeff() == 0.0);
      for (const auto& [key, value] : a.report) CHECK_MESSAGE(value == 0.0, key);
    }
}

TEST_CASE("terminal frames vanish") {
  const Grid g = Grid::line(33, 1.0, 1.0, 30);
  for (auto kind : kSystems) {
    const AdjointTrajectory a = adjoint_of(make_problem(g, kind, IonicModel::AlievPanfilov));
    CHECK(a.p1.col(g.n_steps()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.p3.col(g.n_steps()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.p1.col(0).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("spatially constant adjoint matches the scalar problem") {
  // For constant data the discrete cost depends on a scalar forcing per
  // step; P1 at frame k is -dJ/df_k / (|Omega| dt), checked by differences.
  const Grid g = Grid::line(9, 2.0, 1.0, 20);
  for (auto m : kModels) {
    const IonicParams ip{m, 0.13, 1.0, 4.0, 0.8};
    ControlProblem p;
    p.config = zero_problem(build_operators(g, TensorField::isotropic(g, 0.1), 1.0), ip, SystemKind::Monodomain);
    p.config.tol = {1e-14, 1e-14};
    p.config.phi0.setConstant(0.4);
    p.config.w0.setConstant(0.1);
    p.cost.phi_des = Series::Constant(g.node_count(), g.n_frames(), 0.1);
    p.cost.w_gate = 0.7;
    const AdjointTrajectory a = adjoint_of(p);
    CHECK((a.p1.rowwise() - a.p1.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.p3.rowwise() - a.p3.row(0)).cwiseAbs().maxCoeff() <= 1e-12);

    const double dt = g.dt(), area = 2.0;
    auto scalar_cost = [&](const std::vector<double>& f) {
      double phi = 0.4, w = 0.1, J = 0.0;
      for (int k = 0; k <= g.n_steps(); ++k) {
        const double tw = (k == 0 || k == g.n_steps()) ? 0.5 * dt : dt;
        J += tw * area * (0.5 * (phi - 0.1) * (phi - 0.1) + 0.5 * 0.7 * w * w);
        if (k == g.n_steps()) break;
        const double next = phi - dt * i_ion(ip, phi, w) + dt * f[k];
        w = std::exp(-ip.eps * dt) * w + (1.0 - std::exp(-ip.eps * dt)) * gating_source(ip, 0.5 * (phi + next));
        phi = next;
      }
      return J;
    };
    const double h = 1e-5;
    for (int k = 0; k < g.n_steps(); ++k) {
      std::vector<double> fp(g.n_steps(), 0.0), fm(g.n_steps(), 0.0);
      fp[k] = h;
      fm[k] = -h;
      const double dJ = (scalar_cost(fp) - scalar_cost(fm)) / (2 * h);
      CHECK(std::abs(-dJ / (area * dt) - a.p1(0, k)) <= 1e-7 * (1.0 + std::abs(a.p1(0, k))));
    }
  }
}

TEST_CASE("mirror-symmetric target gives a mirror-symmetric adjoint") {
  const Grid g = Grid::line(33, 1.0, 1.0, 40);
  for (auto kind : kSystems) {
    ControlProblem p;
    p.config = zero_problem(build_operators(g, TensorField::isotropic(g, 0.02), 1.0), IonicParams{}, kind);
    p.config.tol = {1e-13, 1e-13};
    p.cost.phi_des = repeat(g, interpolate(g, [](double x, double, double) { return std::cos(2 * M_PI * x); }));
    const AdjointTrajectory a = adjoint_of(p);
    const Series mirrored = a.p1.colwise().reverse();
    CHECK((mirrored - a.p1).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.p1.cwiseAbs().maxCoeff()));
    CHECK(a.p1.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("adjoint is linear in the cost weights") {
  const Grid g = Grid::line(33, 1.0, 1.0, 30);
  for (auto kind : kSystems) {
    auto p = make_problem(g, kind, IonicModel::RogersMcCulloch);
    const AdjointTrajectory a = adjoint_of(p);
    p.cost.w_phi *= 2;
    p.cost.w_eta *= 2;
    p.cost.w_gate *= 2;
    const AdjointTrajectory b = adjoint_of(p);
    CHECK(rel_series(b.p1, 2.0 * a.p1) <= 1e-12);
    CHECK(rel_series(b.p3, 2.0 * a.p3) <= 1e-12);
    CHECK(rel_series(b.p2, 2.0 * a.p2) <= 1e-10);
  }
}

TEST_CASE("elliptic adjoint") {
  const Grid g = Grid::square(17, 1.0, 0.5, 20);
  auto p = make_problem(g, SystemKind::Bidomain, IonicModel::AlievPanfilov);
  const Trajectory t = simulate(p.config);
  const AdjointTrajectory with_eta = run_adjoint(t, p.config, p.cost).adjoint;
  for (int k = 0; k < g.n_frames(); ++k) CHECK(std::abs(mean(g, with_eta.p2.col(k))) <= 1e-10);

  p.cost.w_eta = 0.0;
  const AdjointTrajectory a = run_adjoint(t, p.config, p.cost).adjoint;
  const SystemOperators& ops = *p.config.ops;
  for (int k = 0; k < g.n_frames(); ++k) {
    const Field target = -(ops.k_i * a.p1.col(k));
    const Field residual = ops.k_ie * a.p2.col(k) - target;
    CHECK(residual.norm() <= 1e-9 * std::max(target.norm(), 1e-300));
  }
}

TEST_CASE("bidomain adjoint with proportional tensors matches the monodomain adjoint") {
  const Grid g = Grid::line(33, 1.0, 1.0, 40);
  for (double lambda : {0.5, 2.0}) {
    auto bi = make_problem(g, SystemKind::Bidomain, IonicModel::RogersMcCulloch, lambda);
    bi.cost.w_eta = 0.0;
    auto mono = bi;
    mono.config.kind = SystemKind::Monodomain;
    const AdjointTrajectory a = adjoint_of(bi), b = adjoint_of(mono);
    CHECK(rel_series(a.p1, b.p1) <= 1e-7);
    CHECK(rel_series(a.p3, b.p3) <= 1e-7);

    const Trajectory t = simulate(bi.config);
    const int k = g.n_steps() - 1;
    AdjointSolver solver(bi.config, bi.cost, t);
    const AdjointState s = step_adjoint_bidomain(solver.terminal(), t, bi.config, bi.cost, k);
    CHECK((s.p1 - a.p1.col(k)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(step_adjoint_monodomain(solver.terminal(), t, bi.config, bi.cost, k), ValidationError);
  }
}

TEST_CASE("adjoint norms are stable under refinement") {
  const Grid g = Grid::line(33, 1.0, 1.0, 50);
  for (auto kind : kSystems) {
    const auto coarse = make_problem(g, kind, IonicModel::RogersMcCulloch);
    const auto fine = make_problem(g.refined(), kind, IonicModel::RogersMcCulloch);
    const NormReport a = run_adjoint(simulate(coarse.config), coarse.config, coarse.cost).report;
    const NormReport b = run_adjoint(simulate(fine.config), fine.config, fine.cost).report;
    for (const auto& [key, value] : a) {
      INFO(key);
      CHECK(value > 0.0);
      CHECK(std::abs(b.at(key) - value) <= 0.1 * value);
    }
  }
}

TEST_CASE("adjoint a-priori constant is stable across random costs") {
  const Grid g = Grid::line(33, 1.0, 1.0, 50);
  for (auto kind : kSystems) {
    auto p = make_problem(g, kind, IonicModel::RogersMcCulloch);
    const Trajectory t = simulate(p.config);
    std::vector<double> ratios;
    for (std::uint64_t seed : {1, 2, 3}) {
      p.cost.phi_des = random_series(g, seed, 1.0);
      if (kind == SystemKind::Bidomain) p.cost.eta_des = random_series(g, seed + 10, 1.0);
      const AdjointTrajectory a = run_adjoint(t, p.config, p.cost).adjoint;
      ratios.push_back(apriori_adjoint(p.config, p.cost, t, a).ratio);
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*lo > 0.0);
    CHECK(*hi <= 1.25 * *lo);
  }
}

TEST_CASE("adjoint validates its inputs") {
  const Grid g = Grid::line(9, 1.0, 1.0, 4);
  auto p = make_problem(g, SystemKind::Monodomain, IonicModel::RogersMcCulloch);
  const Trajectory t = simulate(p.config);
  p.cost.mu = 0.0;
  CHECK_THROWS_AS(run_adjoint(t, p.config, p.cost), ValidationError);
  p.cost.mu = 1.0;
  p.cost.mask = Field::Constant(g.node_count(), 0.5);
  CHECK_THROWS_AS(run_adjoint(t, p.config, p.cost), ValidationError);
}
