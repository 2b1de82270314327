#include <doctest.h>

#include "perorbit/json_io.hpp"
#include "perorbit/model.hpp"

#include <cmath>
#include <random>

using namespace perorbit;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

// Trapezoid rule on a periodic integrand is spectrally accurate.
Vec trapezoid_mean(const ForcingSignal& f, int n) {
  Vec acc = Vec::Zero(f.dim());
  for (int i = 0; i < n; ++i) acc += f.eval(f.period() * i / n);
  return acc / n;
}

double trapezoid_l2(const ForcingSignal& f, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f.eval(f.period() * i / n).squaredNorm();
  return std::sqrt(acc * f.period() / n);
}

}  // namespace

TEST_CASE("fourier forcing evaluation, mean and norm") {
  FourierCoefficients zero{Vec::Zero(1), Mat::Zero(3, 1), Mat::Zero(3, 1)};
  auto f0 = ForcingSignal::fourier(2.0, zero);
  CHECK(f0.eval(0.3).norm() == 0.0);
  CHECK(f0.l2_norm() == 0.0);

  auto s1 = ForcingSignal::harmonic(4.0, v({1.0}), v({0.0}));
  CHECK(s1.eval(1.0)[0] == doctest::Approx(1.0).epsilon(1e-15));

  FourierCoefficients c{v({3.0, -1.0}), Mat::Zero(1, 2), Mat::Zero(1, 2)};
  auto fc = ForcingSignal::fourier(1.0, c);
  CHECK(fc.mean()[0] == 1.5);
  CHECK(fc.mean()[1] == -0.5);

  FourierCoefficients s5{Vec::Zero(1), Mat::Zero(5, 1), Mat::Zero(5, 1)};
  s5.sin_coef(4, 0) = 7.0;
  CHECK(ForcingSignal::fourier(1.0, s5).mean()[0] == 0.0);

  const double T = 3.0, amp = 2.5;
  auto h = ForcingSignal::harmonic(T, v({amp}), v({0.0}));
  CHECK(h.l2_norm() == doctest::Approx(amp * std::sqrt(T / 2.0)).epsilon(1e-14));
}

TEST_CASE("triangular wave") {
  auto tri = ForcingSignal::triangular(2.0 * kPi, 1.0, v({1.0}), 50);
  // Peak of the unit triangle wave; truncation error of the odd series is below 1/(2 K_t) * 8/pi^2.
  CHECK(tri.eval(kPi / 2.0)[0] == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(tri.mean()[0] == 0.0);

  auto big = ForcingSignal::triangular(2.0 * kPi, 1.0, v({1.0}), 2000);
  // Direct piecewise-linear form.
  for (double t : {0.1, 1.0, 2.0, 3.0, 4.5, 6.0}) {
    const double tau = std::fmod(t, 2.0 * kPi);
    double exact;
    if (tau <= kPi / 2.0) exact = tau / (kPi / 2.0);
    else if (tau <= 1.5 * kPi) exact = 2.0 - tau / (kPi / 2.0);
    else exact = tau / (kPi / 2.0) - 4.0;
    CHECK(big.eval(t)[0] == doctest::Approx(exact).epsilon(1e-3));
  }

  auto ce = ForcingSignal::triangular(2.0 * kPi, 0.01178, v({1.0}), 100);
  CHECK(ce.l2_norm() == doctest::Approx(trapezoid_l2(ce, 1 << 16)).epsilon(1e-10));
}

TEST_CASE("periodicity and quadrature agreement for every representation") {
  FourierCoefficients c{v({0.4}), Mat::Zero(4, 1), Mat::Zero(4, 1)};
  c.sin_coef(0, 0) = 1.0;
  c.cos_coef(3, 0) = -0.3;
  std::vector<ForcingSignal> signals{ForcingSignal::fourier(1.7, c),
                                     ForcingSignal::triangular(2.0 * kPi, 0.3, v({1.0, -1.0}), 200),
                                     ForcingSignal::fejer(2.0 * kPi, 1, v({1.0})),
                                     ForcingSignal::fejer(2.0 * kPi, 2, v({1.0}))};
  for (const auto& f : signals) {
    double defect = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double t = 0.013 * i;
      defect = std::max(defect, (f.eval(t) - f.eval(t + f.period())).cwiseAbs().maxCoeff());
    }
    CAPTURE(static_cast<int>(f.kind()));
    CHECK(defect < 1e-12);
    const Vec m = trapezoid_mean(f, 1 << 16);
    CHECK((m - f.mean()).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, f.mean().cwiseAbs().maxCoeff()));
    CHECK(trapezoid_l2(f, 1 << 16) == doctest::Approx(f.l2_norm()).epsilon(1e-9));
  }
}

TEST_CASE("built-in systems evaluate as the equations read") {
  auto ce = build_counterexample1();
  CHECK(ce.dim() == 2);
  const Vec s = ce.nonlinearity().value(v({1.0, 0.0}));
  CHECK(s[0] == doctest::Approx(6.0));
  CHECK(s[1] == doctest::Approx(-3.0));
  CHECK(ce.nonlinearity().value(v({0.0, 0.0})).norm() == 0.0);
  CHECK(ce.forcing().mean().norm() == 0.0);
  CHECK_FALSE(ce.nonlinearity().has_potential());

  auto du = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
  CHECK(du.nonlinearity().value(v({2.0}))[0] == doctest::Approx(10.0));
  CHECK(du.nonlinearity().has_potential());
  auto soft = build_duffing(0.01, 1.0, -1.0, 1.0, 1.0);
  CHECK(soft.nonlinearity().jacobian(v({0.0}))(0, 0) == doctest::Approx(1.0));
  for (double q : {1.0, -1.0}) CHECK(soft.nonlinearity().value(v({q}))[0] == doctest::Approx(0.0));

  auto pend = build_pendulum(0.1, 2.0, ForcingSignal::constant(2.0 * kPi, v({0.0})));
  CHECK(pend.nonlinearity().value(v({kPi / 2.0}))[0] == doctest::Approx(2.0));

  auto quad = build_quadratic_oscillator(0.1, 1.0, 1.0, 1.0, 1.0);
  CHECK(quad.nonlinearity().value(v({-3.0}))[0] == doctest::Approx(6.0));

  auto c3 = build_counter3(0.01, 0.01, 1.0, 1.0, 1.0, 0.1, 1.0, ForcingSignal::constant(2.0 * kPi, v({0.0})));
  const Vec s3 = c3.nonlinearity().value(v({1.0, 1.0}));
  CHECK(s3[0] == doctest::Approx(2.0));
  CHECK(s3[1] == doctest::Approx(1.0));
}

TEST_CASE("chain assembly") {
  auto forcing = ForcingSignal::constant(1.0, Vec::Zero(2));
  auto ch = build_chain({1.0, 1.0}, {0.1, 0.0, 0.1}, {{{1.0}}, {{4.0}}, {{1.0}}}, forcing);
  Mat K(2, 2);
  K << 5.0, -4.0, -4.0, 5.0;
  CHECK((ch.nonlinearity().jacobian(v({0.3, -0.7})) - K).norm() == 0.0);
  CHECK((ch.nonlinearity().value(v({0.3, -0.7})) - K * v({0.3, -0.7})).norm() < 1e-15);
  CHECK(ch.nonlinearity().value(v({0.0, 0.0})).norm() == 0.0);
  CHECK(ch.nonlinearity().has_potential());

  auto one = build_chain({1.0}, {0.1, 0.1}, {{{1.0}}, {{1.0}}}, ForcingSignal::constant(1.0, Vec::Zero(1)));
  CHECK(one.nonlinearity().value(v({0.8}))[0] == doctest::Approx(1.6));

  CHECK_THROWS_AS(build_chain({1.0, 1.0}, {0.1, 0.1}, {{{1.0}}, {{1.0}}, {{1.0}}}, forcing), Error);
}

TEST_CASE("declared potentials have symmetric analytic Jacobians equal to the potential Hessian") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  auto du = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
  auto ch = build_builtin("chain");
  for (const auto* sys : {&du, &ch}) {
    const auto& nl = sys->nonlinearity();
    for (int s = 0; s < 100; ++s) {
      Vec q(nl.dim());
      for (int i = 0; i < q.size(); ++i) q[i] = u(rng);
      const Mat J = nl.jacobian(q);
      CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-8);
      // Hessian of V by central differences of V itself.
      const double h = 1e-4;
      for (int i = 0; i < q.size(); ++i) {
        Vec e = Vec::Zero(q.size());
        e[i] = h;
        const double d2 = (nl.potential(q + e) - 2.0 * nl.potential(q) + nl.potential(q - e)) / (h * h);
        CHECK(d2 == doctest::Approx(J(i, i)).epsilon(1e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("polynomial with inconsistent declared potential is rejected") {
  std::vector<PolyTerm> terms{{0, {{1}, 1.0}}};
  CHECK_THROWS_AS(Nonlinearity::polynomial(1, terms, {{{2}, 1.0}}), Error);
  CHECK_NOTHROW(Nonlinearity::polynomial(1, terms, {{{2}, 0.5}}));
}

TEST_CASE("mass must be positive definite") {
  Mat M = Mat::Identity(1, 1) * -1.0;
  CHECK_THROWS_AS(MechanicalSystem(M, Mat::Identity(1, 1), Nonlinearity::pendulum(1.0),
                                   ForcingSignal::constant(1.0, Vec::Zero(1))),
                  Error);
}

TEST_CASE("custom nonlinearity falls back to finite differences") {
  auto nl = Nonlinearity::custom(2, [](const double* q, double* s) {
    s[0] = q[0] * q[0] * q[1];
    s[1] = std::sin(q[1]);
  });
  CHECK_FALSE(nl.analytic_jacobian());
  const Mat J = nl.jacobian(v({1.5, 0.5}));
  CHECK(J(0, 0) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(J(0, 1) == doctest::Approx(2.25).epsilon(1e-8));
  CHECK(J(1, 1) == doctest::Approx(std::cos(0.5)).epsilon(1e-8));
}

TEST_CASE("JSON round trip for every built-in") {
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    auto sys = build_builtin(name);
    auto back = system_from_json(system_to_json(sys));
    CHECK(back.dim() == sys.dim());
    CHECK((back.mass() - sys.mass()).norm() == 0.0);
    CHECK((back.damping() - sys.damping()).norm() == 0.0);
    for (double t : {0.0, 0.37, 2.9}) CHECK((back.forcing().eval(t) - sys.forcing().eval(t)).norm() < 1e-13);
    Vec q = Vec::LinSpaced(sys.dim(), 0.3, -0.6);
    CHECK((back.nonlinearity().value(q) - sys.nonlinearity().value(q)).norm() < 1e-13);
    CHECK(back.nonlinearity().has_potential() == sys.nonlinearity().has_potential());
  }
}

TEST_CASE("JSON parse errors carry the parse code") {
  try {
    system_from_json_text("{\"dim\": 1, \"mass\": [[1]]");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
  }
  try {
    system_from_json_text(R"({"dim": 1, "mass": [[1]], "damping": [[1]], "nonlinearity": {"type": "magic"},
                             "forcing": {"type": "fourier", "period": 1, "c0": [0], "harmonics": []}})");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
  }
}
