#include <doctest.h>

#include "perorbit/continuation.hpp"
#include "perorbit/harmonic_balance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace perorbit;

namespace {

using cd = std::complex<double>;

// Three-tone forcing on a damped 2-DOF chain with a coupling spring.
MechanicalSystem linear_two_dof(double omega) {
  Mat M(2, 2), C(2, 2), K(2, 2);
  M << 1.0, 0.0, 0.0, 2.0;
  C << 0.05, -0.01, -0.01, 0.03;
  K << 3.0, -1.0, -1.0, 2.0;
  FourierCoefficients fc;
  fc.c0 = Vec::Zero(2);
  fc.c0 << 0.4, -0.2;
  fc.sin_coef = Mat::Zero(3, 2);
  fc.cos_coef = Mat::Zero(3, 2);
  fc.sin_coef << 1.0, 0.0, 0.0, 0.5, 0.3, -0.2;
  fc.cos_coef << 0.0, 0.7, -0.4, 0.0, 0.0, 0.1;
  return build_linear(M, C, K, ForcingSignal::fourier(2.0 * kPi / omega, fc));
}

// Per-harmonic complex solve: (K - (k w)^2 M + i k w C) Q_k = F_k with q = Re(Q_k e^{ikwt}),
// Q_k = c_k - i s_k.
FourierAnsatz complex_oracle(double omega, int K_out) {
  Mat M(2, 2), C(2, 2), Ks(2, 2);
  M << 1.0, 0.0, 0.0, 2.0;
  C << 0.05, -0.01, -0.01, 0.03;
  Ks << 3.0, -1.0, -1.0, 2.0;
  const MechanicalSystem sys = linear_two_dof(omega);
  const auto& fc = sys.forcing().coefficients();
  FourierAnsatz x = FourierAnsatz::zeros(2, K_out, omega);
  const Vec c0 = Eigen::MatrixXd(Ks).ldlt().solve(fc.c0);
  for (int j = 0; j < 2; ++j) x.c0(j) = c0[j];
  for (int k = 1; k <= fc.order(); ++k) {
    const double kw = k * omega;
    Eigen::Matrix2cd D;
    Eigen::Vector2cd F;
    for (int a = 0; a < 2; ++a) {
      F[a] = cd(fc.cos_coef(k - 1, a), -fc.sin_coef(k - 1, a));
      for (int b = 0; b < 2; ++b) D(a, b) = cd(Ks(a, b) - kw * kw * M(a, b), kw * C(a, b));
    }
    const Eigen::Vector2cd Q = D.partialPivLu().solve(F);
    for (int j = 0; j < 2; ++j) {
      x.c(j, k) = Q[j].real();
      x.s(j, k) = -Q[j].imag();
    }
  }
  return x;
}

FourierAnsatz random_ansatz(int dim, int K, double omega, std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  FourierAnsatz x = FourierAnsatz::zeros(dim, K, omega);
  for (int i = 0; i < x.coeffs.size(); ++i) x.coeffs[i] = u(rng) / (1 + i % x.block());
  return x;
}

}  // namespace

TEST_CASE("ansatz evaluation and derivatives") {
  FourierAnsatz x = FourierAnsatz::zeros(1, 3, 2.0);
  x.c0(0) = 1.0;
  x.s(0, 1) = 0.5;
  x.c(0, 3) = -0.25;
  for (double t : {0.0, 0.3, 1.7, 2.9}) {
    CHECK(x.eval(t)[0] == doctest::Approx(0.5 + 0.5 * std::sin(2 * t) - 0.25 * std::cos(6 * t)).epsilon(1e-14));
    CHECK(x.velocity(t)[0] == doctest::Approx(std::cos(2 * t) + 1.5 * std::sin(6 * t)).epsilon(1e-13));
    CHECK(x.acceleration(t)[0] == doctest::Approx(-2 * std::sin(2 * t) + 9 * std::cos(6 * t)).epsilon(1e-13));
  }
  CHECK(x.mean()[0] == 0.5);
  const FourierAnsatz y = x.resized(5);
  CHECK(y.K == 5);
  CHECK(y.c(0, 3) == -0.25);
  CHECK(y.s(0, 5) == 0.0);
  CHECK(x.resized(2).c(0, 2) == 0.0);
  CHECK(default_samples(7) == 64);
  CHECK(default_samples(8) == 128);
}

TEST_CASE("linear multi-harmonic problems match per-harmonic complex solves") {
  for (double omega : {0.3, 0.9, 1.4, 2.5}) {
    const MechanicalSystem sys = linear_two_dof(omega);
    for (int K : {3, 6}) {
      const HBSolution sol = hb_solve(sys, omega, K);
      REQUIRE(sol.converged);
      const FourierAnsatz ref = complex_oracle(omega, K);
      CHECK((sol.ansatz.coeffs - ref.coeffs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("single-harmonic Duffing projection") {
  // Only s1 = a: the sine row carries (w2 - W^2) a + (3/4) kappa a^3, the cosine row c W a - f.
  const double c = 0.05, w2 = 1.3, kappa = 0.7, f = 0.4, W = 0.8, a = 0.9;
  const MechanicalSystem sys = build_duffing(c, w2, kappa, f, W);
  FourierAnsatz x = FourierAnsatz::zeros(1, 3, W);
  x.s(0, 1) = a;
  const Vec r = aft_residual(sys, x, 0);
  CHECK(r[1] == doctest::Approx((w2 - W * W) * a + 0.75 * kappa * a * a * a).epsilon(1e-13));
  CHECK(r[2] == doctest::Approx(c * W * a - f).epsilon(1e-13));
  CHECK(r[5] == doctest::Approx(-0.25 * kappa * a * a * a).epsilon(1e-13));
  CHECK(std::abs(r[0]) < 1e-14);
}

TEST_CASE("AFT residual agrees with direct quadrature and does not alias") {
  std::mt19937 rng(11);
  const MechanicalSystem duff = build_duffing(0.02, 1.0, 1.0, 0.3, 1.1);
  const MechanicalSystem c3 = build_builtin("counter3");
  for (const MechanicalSystem* sys : {&duff, &c3}) {
    const double W = sys->forcing().omega();
    for (int trial = 0; trial < 5; ++trial) {
      const FourierAnsatz x = random_ansatz(sys->dim(), 5, W, rng, 0.8);
      const Vec r = aft_residual(*sys, x, 0);
      const Vec q = quadrature_residual(*sys, x, 4096);
      CHECK((r - q).cwiseAbs().maxCoeff() < 1e-11);
      // Cubic terms need 3K + K + 1 samples for exactness; every larger count agrees.
      for (int M : {22, 40, 256}) CHECK((aft_residual(*sys, x, M) - r).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("AFT Jacobian matches finite differences") {
  std::mt19937 rng(5);
  const MechanicalSystem sys = build_builtin("counter3");
  const FourierAnsatz x = random_ansatz(2, 4, sys.forcing().omega(), rng, 0.5);
  const Mat J = aft_jacobian(sys, x, 0);
  const Mat Jfd = finite_difference_jacobian(
      [&](const Vec& c) {
        FourierAnsatz y = x;
        y.coeffs = c;
        return aft_residual(sys, y, 0);
      },
      x.coeffs);
  CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("triangular forcing enters with its exact coefficients") {
  // Linear oscillator under a triangular wave: each odd harmonic solves on its own.
  const double W = 1.0, amp = 0.5;
  const Mat one = Mat::Identity(1, 1);
  const ForcingSignal tri = ForcingSignal::triangular(2 * kPi / W, amp, Vec::Ones(1), 200);
  const MechanicalSystem sys = build_linear(one, 0.1 * one, 4.0 * one, tri);
  const HBSolution sol = hb_solve(sys, W, 9);
  REQUIRE(sol.converged);
  const auto& fc = tri.coefficients();
  for (int k = 1; k <= 9; ++k) {
    const cd D(4.0 - k * k, 0.1 * k);
    const cd Q = cd(fc.cos_coef(k - 1, 0), -fc.sin_coef(k - 1, 0)) / D;
    CHECK(std::abs(sol.ansatz.c(0, k) - Q.real()) < 1e-12);
    CHECK(std::abs(sol.ansatz.s(0, k) + Q.imag()) < 1e-12);
  }
}

TEST_CASE("two-tone linear example needs twenty harmonics") {
  const MechanicalSystem sys = build_linear_example();
  for (int K : {5, 10, 15}) {
    const HBSolution s = hb_solve(sys, 1.0, K);
    REQUIRE(s.converged);
    CHECK(s.amplitude[0] == doctest::Approx(0.0025).epsilon(1e-8));
  }
  const HBSolution s = hb_solve(sys, 1.0, 20);
  REQUIRE(s.converged);
  // Dense maximum of 0.0025 (sin t + sin 20 t), frozen from an independent golden-section search.
  CHECK(std::abs(s.amplitude[0] - 0.004992312523110) < 1e-10);
  const Mat rows = reconstruct(s.ansatz, 4096);
  double err = 0.0;
  for (int i = 0; i < rows.rows(); ++i) {
    const double t = rows(i, 0);
    err = std::max(err, std::abs(rows(i, 1) - 0.0025 * (std::sin(t) + std::sin(20 * t))));
  }
  CHECK(err < 1e-8);
}

TEST_CASE("Duffing anchor and time-integration shadowing") {
  const HBSolution hard = hb_solve(build_duffing(0.01, 1.0, 1.0, 1.0, 0.6), 0.6, 7);
  REQUIRE(hard.converged);
  CHECK(std::abs(hard.amplitude[0] - 0.9384967793951) < 1e-3);

  // A stable low-amplitude orbit integrated for 200 periods from the HB initial condition.
  const double W = 0.9;
  const MechanicalSystem sys = build_duffing(0.01, 1.0, 1.0, 0.01, W);
  const HBSolution s = hb_solve(sys, W, 15);
  REQUIRE(s.converged);
  CHECK(orbit_monodromy(sys, s.ansatz).stable);
  const Rhs rhs = [&](double t, const Vec& x, Vec& dx) {
    dx[0] = x[1];
    dx[1] = sys.forcing().eval(t)[0] - 0.01 * x[1] - x[0] - x[0] * x[0] * x[0];
  };
  Vec x0(2);
  x0 << s.ansatz.eval(0.0)[0], s.ansatz.velocity(0.0)[0];
  const double T = 2 * kPi / W;
  const Trajectory tr = integrate(rhs, x0, 0.0, 200 * T);
  REQUIRE(tr.status == IntegrationStatus::ok);
  double dev = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double t = 200 * T * i / 4000.0;
    dev = std::max(dev, std::abs(tr.at(t)[0] - s.ansatz.eval(t)[0]));
  }
  CHECK(dev < 1e-4);
}

TEST_CASE("convergence study flags apparent convergence") {
  const auto rows = hb_convergence_study(build_linear_example(), {5, 10, 15, 20, 25});
  REQUIRE(rows.size() == 5);
  CHECK_FALSE(rows[0].apparently_converged);
  CHECK(rows[1].apparently_converged);
  CHECK(rows[2].apparently_converged);
  CHECK_FALSE(rows[3].apparently_converged);
  CHECK(rows[4].apparently_converged);
}

TEST_CASE("Fejer partial sums") {
  const FejerDemo d2 = fejer_partial_sum_demo(2, {0, 255, 511, 767});
  CHECK(d2.bandwidth == 768);
  CHECK(d2.full_sum == 0.0);
  CHECK(d2.argmax_n == 511);
  CHECK(d2.max_partial == doctest::Approx(1.5310862407043202).epsilon(1e-12));
  CHECK(d2.sup_norm == doctest::Approx(3.0558859801811336).epsilon(1e-9));
  CHECK(d2.max_partial > 0.5 * d2.sup_norm);
  const FejerDemo d1 = fejer_partial_sum_demo(1, {});
  CHECK(d1.max_partial == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(d1.sup_norm == doctest::Approx(2.5594714260142393).epsilon(1e-9));
  CHECK(d1.full_sum == 0.0);
}

TEST_CASE("solution JSON round trip and CSV") {
  const HBSolution s = hb_solve(build_duffing(0.05, 1.0, 1.0, 0.2, 1.2), 1.2, 5);
  const HBSolution back = solution_from_json(solution_to_json(s));
  CHECK(back.ansatz.coeffs == s.ansatz.coeffs);
  CHECK(back.ansatz.omega == s.ansatz.omega);
  CHECK(back.converged == s.converged);
  const std::string csv = solution_csv(s.ansatz, 8);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK_THROWS_AS(solution_from_json(Json::parse(R"({"dim": 1})")), Error);
}
