#include <doctest.h>

#include "perorbit/floquet.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace perorbit;

namespace {

Rhs system_rhs(const MechanicalSystem& sys) {
  const int N = sys.dim();
  const Eigen::MatrixXd Minv = Eigen::MatrixXd(sys.mass()).inverse();
  return [=](double t, const Vec& x, Vec& dx) {
    const Vec q = x.head(N), v = x.tail(N);
    dx.head(N) = v;
    dx.tail(N) = Minv * (sys.forcing().eval(t) - sys.damping() * v - sys.nonlinearity().value(q));
  };
}

}  // namespace

TEST_CASE("harmonic oscillator returns after one period") {
  const Rhs rhs = [](double, const Vec& x, Vec& dx) {
    dx[0] = x[1];
    dx[1] = -x[0];
  };
  Vec x0(2);
  x0 << 1.0, 0.0;
  const Trajectory tr = integrate(rhs, x0, 0.0, 2 * kPi);
  REQUIRE(tr.status == IntegrationStatus::ok);
  CHECK((tr.final_state() - x0).norm() < 1e-8);
  // Dense output between steps.
  for (double t : {0.1, 1.234, 4.0, 6.0}) CHECK(std::abs(tr.at(t)[0] - std::cos(t)) < 1e-8);
  // Backwards in time as well.
  const Trajectory back = integrate(rhs, x0, 0.0, -kPi);
  CHECK(std::abs(back.final_state()[0] + 1.0) < 1e-8);
}

TEST_CASE("damped free vibration decays") {
  const MechanicalSystem sys = build_duffing(0.01, 1.0, 1.0, 0.0, 1.0);
  Vec x0(2);
  x0 << 0.1, 0.0;
  const Trajectory tr = integrate(system_rhs(sys), x0, 0.0, 2000.0);
  REQUIRE(tr.status == IntegrationStatus::ok);
  CHECK(tr.final_state().norm() < 0.1 * std::exp(-0.005 * 2000.0) * 1.5);
  CHECK(tr.final_state().norm() < 1e-5);
}

TEST_CASE("counterexample escapes from rest") {
  // Just above threshold (f_m = 0.01178) the mean drifts slowly and escape takes about 2573
  // periods; a larger amplitude shows the same behaviour quickly.
  Counterexample1Params cp;
  cp.fm = 0.03;
  const MechanicalSystem sys = build_counterexample1(cp);
  const double T = sys.forcing().period();
  const Trajectory tr = integrate(system_rhs(sys), Vec::Zero(4), 0.0, 1000 * T, {}, false);
  CHECK(tr.status == IntegrationStatus::escape);
  CHECK(tr.final_time() < 1000 * T);
}

TEST_CASE("linear frequency response") {
  FrequencyResponse r = linear_frf(4.0, 0.0, 2.0, 0.0);
  CHECK(r.A == doctest::Approx(0.5));
  r = linear_frf(1.0, 0.01, 1.0, 1.0);
  CHECK(r.A == doctest::Approx(100.0).epsilon(1e-13));
  CHECK(r.psi == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK_THROWS_AS(linear_frf(1.0, 0.0, 1.0, 1.0), Error);

  // Substituting A sin(W t - psi) back into the ODE.
  const double w2 = 2.3, c = 0.07, a = 0.9, W = 1.1;
  r = linear_frf(w2, c, a, W);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = 0.137 * i;
    const double ph = W * t - r.psi;
    const double q = r.A * std::sin(ph), v = r.A * W * std::cos(ph), acc = -r.A * W * W * std::sin(ph);
    worst = std::max(worst, std::abs(acc + c * v + w2 * q - a * std::sin(W * t)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("constant-coefficient monodromy") {
  const double c = 0.3;
  LTPSystem ltp;
  ltp.n = 2;
  ltp.period = 2 * kPi;
  ltp.A = [c](double, Mat& A) { A << 0.0, 1.0, -1.0, -c; };
  const MonodromyResult m = monodromy(ltp);
  const std::complex<double> disc = std::sqrt(std::complex<double>(c * c - 4.0));
  const std::complex<double> l1 = (-c + disc) / 2.0, l2 = (-c - disc) / 2.0;
  const std::complex<double> r1 = std::exp(2 * kPi * l1), r2 = std::exp(2 * kPi * l2);
  const auto& mu = m.multipliers;
  const double d = std::min(std::abs(mu[0] - r1) + std::abs(mu[1] - r2), std::abs(mu[0] - r2) + std::abs(mu[1] - r1));
  CHECK(d < 1e-9);
  CHECK(std::abs(m.trace_integral + 2 * kPi * c) < 1e-12);
  CHECK(m.liouville_defect < 1e-10);
  CHECK(m.stable);
  // Two coefficient periods.
  const MonodromyResult m2 = monodromy(ltp, 4 * kPi);
  CHECK(std::abs(m2.max_abs - m.max_abs * m.max_abs) < 1e-10);
  CHECK_THROWS_AS(monodromy(ltp, 3.0), Error);
}

TEST_CASE("Mathieu cells obey Liouville and multiplier geometry") {
  const MathieuParams p;
  const double T = p.forcing_period();
  const StabilityCell zero = stability_cell(p, 0.0, 0.7);
  CHECK(zero.stable);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ua(0.0, 0.1), uw(0.2, 2.0);
  for (int i = 0; i < 20; ++i) {
    const StabilityCell cell = stability_cell(p, ua(rng), uw(rng));
    CHECK(cell.liouville_defect < 1e-8);
    if (std::abs(cell.multipliers[0].imag()) > 1e-9) {
      // Complex pair on the circle of radius e^{-c1 T / 4}.
      CHECK(std::abs(std::abs(cell.multipliers[0]) - std::exp(-p.c1 * T / 4)) < 1e-8);
      CHECK(cell.stable);
    }
  }
}

TEST_CASE("stability map, boundaries and rtol invariance") {
  const MathieuParams p;
  std::vector<double> a_grid, w_grid;
  for (int i = 0; i < 10; ++i) a_grid.push_back(0.1 * i / 9.0);
  for (int i = 0; i < 10; ++i) w_grid.push_back(0.2 + 1.8 * i / 9.0);
  const StabilityMap map = stability_map(p, a_grid, w_grid, {}, 2);
  int unstable = 0;
  for (const auto& c : map.cells) {
    unstable += !c.stable;
    CHECK(c.liouville_defect < 1e-8);
  }
  for (std::size_t i = 0; i < w_grid.size(); ++i) CHECK(map.cells[i * a_grid.size()].stable);
  CHECK(unstable > 0);
  CHECK_FALSE(map.boundary.empty());
  for (const auto& b : map.boundary) CHECK(std::abs(b.max_abs - 1.0) < 1e-8);

  IntegratorOptions tight;
  tight.rtol = 5e-11;
  tight.atol = 5e-13;
  const StabilityMap fine = stability_map(p, a_grid, w_grid, tight, 1);
  for (std::size_t i = 0; i < map.cells.size(); ++i) CHECK(fine.cells[i].stable == map.cells[i].stable);

  const std::string csv = stability_map_csv(map);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 101);
}

TEST_CASE("adjoint periodic solution and orthogonality forcing") {
  const MathieuParams p;
  std::vector<double> a_grid = {0.0, 0.02, 0.05, 0.1};
  std::vector<double> w_grid = {0.3, 1.45};
  const StabilityMap map = stability_map(p, a_grid, w_grid);
  REQUIRE_FALSE(map.boundary.empty());
  for (const auto& b : map.boundary) {
    const LTPSystem ltp = boundary_ltp(p, b);
    const AdjointSolution y = adjoint_periodic_solution(ltp);
    CHECK(y.periodicity_defect < 1e-6);
    CHECK(y.l2_norm == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(y.int_y2_sq > 1e-6);

    // Spectral duality: adjoint multipliers are reciprocals of the direct ones.
    LTPSystem adj = ltp;
    adj.A = [A = ltp.A](double t, Mat& out) {
      A(t, out);
      out = (-out.transpose()).eval();
    };
    const MonodromyResult md = monodromy(ltp), ma = monodromy(adj);
    for (Eigen::Index i = 0; i < 2; ++i) {
      double best = 1e9;
      for (Eigen::Index j = 0; j < 2; ++j) best = std::min(best, std::abs(ma.multipliers[i] * md.multipliers[j] - 1.0));
      CHECK(best < 1e-6);
    }

    const OrthogonalityForcing f = orthogonality_violating_forcing(y);
    CHECK(std::abs(f.integral) == doctest::Approx(y.int_y2_sq).epsilon(1e-12));
    CHECK(f.mean <= 0.0);
    CHECK(f.period == doctest::Approx(p.forcing_period()));

    // The sign rule absorbs a flipped adjoint: f1 and the integral magnitude are unchanged.
    AdjointSolution flipped = y;
    for (auto& x : flipped.trajectory.x) x = -x;
    for (auto& dx : flipped.trajectory.dx) dx = -dx;
    flipped.int_y2 = -y.int_y2;
    const OrthogonalityForcing g = orthogonality_violating_forcing(flipped);
    CHECK(std::abs(g.integral) == doctest::Approx(std::abs(f.integral)).epsilon(1e-12));
    for (double t : {0.3, 2.0, 5.0}) CHECK(g.eval(flipped, t) == doctest::Approx(f.eval(y, t)).epsilon(1e-12));
  }
}
