#include <doctest.h>

#include "perorbit/existence.hpp"

#include <cmath>

using namespace perorbit;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

Mat diag(std::initializer_list<double> xs) { return v(xs).asDiagonal(); }

}  // namespace

TEST_CASE("damping definiteness") {
  auto d = check_damping(diag({0.001, 0.001}));
  CHECK(d.verdict == Verdict::pass);
  CHECK(d.c0 == doctest::Approx(0.001).epsilon(1e-14));
  CHECK(check_damping(Mat::Zero(2, 2)).verdict == Verdict::fail);
  CHECK(check_damping(diag({1.0, -1.0})).verdict == Verdict::fail);

  auto neg = check_damping(diag({-2.0, -3.0}));
  CHECK(neg.verdict == Verdict::pass);
  CHECK(neg.sign == -1);

  Mat C(2, 2);
  C << 2.0, 1.5, -0.5, 1.0;
  CHECK(check_damping(C).c0 == doctest::Approx(check_damping(-C).c0));
  CHECK(check_damping(3.0 * C).c0 == doctest::Approx(3.0 * check_damping(C).c0));
  // Skew part is invisible to the quadratic form.
  Mat skew(2, 2);
  skew << 0.0, 5.0, -5.0, 0.0;
  CHECK(check_damping(diag({1.0, 2.0}) + skew).c0 == doctest::Approx(1.0));
}

TEST_CASE("potential condition") {
  auto du = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
  CHECK(check_potential(du.nonlinearity()).verdict == Verdict::declared);

  auto ce = check_potential(build_counterexample1().nonlinearity());
  CHECK(ce.verdict == Verdict::fail);
  CHECK(ce.mode == Mode::analytic);
  REQUIRE(ce.witness);
  CHECK((*ce.witness)[0] != (*ce.witness)[1]);
  // |2 kappa (q2 - q1)| summed over the row.
  CHECK(ce.max_asymmetry == doctest::Approx(2.0 * std::abs((*ce.witness)[1] - (*ce.witness)[0])));

  auto ch = check_potential(build_builtin("chain").nonlinearity());
  CHECK(ch.verdict == Verdict::pass);

  auto custom_ok = Nonlinearity::custom(2, [](const double* q, double* s) {
    s[0] = q[0] + q[1] * q[1];
    s[1] = 2.0 * q[0] * q[1];
  });
  auto cp = check_potential(custom_ok);
  CHECK(cp.verdict == Verdict::pass);
  CHECK(cp.mode == Mode::evidence);
}

TEST_CASE("sign condition") {
  auto du = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
  for (double r : {0.0, 0.5, 3.0}) {
    auto s = check_sign_condition(du, r);
    CHECK(s.verdict == Verdict::pass);
    CHECK(s.mode == Mode::analytic);
    CHECK(s.signs == std::vector<int>{1});
    CHECK(s.n_positive == 1);
  }

  auto ce = build_counterexample1();
  for (double r : {0.0, 5.0, 50.0}) {
    auto s = check_sign_condition(ce, r);
    CHECK(s.verdict == Verdict::fail);
    REQUIRE(s.witness_a);
    REQUIRE(s.witness_b);
  }

  auto pend = build_pendulum(0.1, 1.0, ForcingSignal::constant(2.0 * kPi, v({2.0})));
  auto sp = check_sign_condition(pend, 1.0);
  CHECK(sp.verdict == Verdict::fail);
  REQUIRE(sp.witness_a);
  REQUIRE(sp.witness_b);
  const auto g = [&](const Vec& q) { return q[0] * (pend.nonlinearity().value(q)[0] - 2.0); };
  CHECK(g(*sp.witness_a) * g(*sp.witness_b) <= 0.0);

  auto soft = build_duffing(0.01, 1.0, -1.0, 1.0, 1.0);
  auto a = analytic_sign_condition(soft);
  REQUIRE(a);
  CHECK(a->r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a->signs == std::vector<int>{-1});

  auto quad = build_quadratic_oscillator(0.1, 1.0, 1.0, 0.5, 1.0);
  CHECK(check_sign_condition(quad, 2.0).verdict == Verdict::fail);
}

TEST_CASE("Hessian definiteness") {
  auto du = check_hessian_definiteness(build_duffing(0.01, 1.0, 1.0, 1.0, 1.0), 0.0);
  CHECK(du.verdict == Verdict::pass);
  CHECK(du.cv == doctest::Approx(1.0));

  auto soft_sys = build_duffing(0.01, 1.0, -1.0, 1.0, 1.0);
  auto soft = check_hessian_definiteness(soft_sys, 1.0 / std::sqrt(3.0));
  CHECK(soft.verdict == Verdict::pass);
  CHECK(soft.sign == -1);
  CHECK(check_hessian_definiteness(soft_sys, 0.5).verdict == Verdict::fail);
  auto minimal = analytic_hessian_definiteness(soft_sys);
  REQUIRE(minimal);
  CHECK(minimal->r_star == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));

  // Saddle: C3 holds, C3* does not.
  auto saddle = build_linear(Mat::Identity(2, 2), Mat::Identity(2, 2), diag({1.0, -1.0}),
                             ForcingSignal::constant(1.0, Vec::Zero(2)));
  CHECK(check_hessian_definiteness(saddle, 0.0).verdict == Verdict::fail);
  CHECK(check_sign_condition(saddle, 0.0).verdict == Verdict::pass);

  auto pend = build_pendulum(0.1, 1.0, ForcingSignal::constant(1.0, v({0.0})));
  auto hp = check_hessian_definiteness(pend, 3.0);
  CHECK(hp.verdict == Verdict::fail);
  REQUIRE(hp.witness);
  CHECK(std::abs(std::cos((*hp.witness)[0])) < 1e-12);
}

TEST_CASE("radius from the Hessian estimate") {
  CHECK(radius_from_hessian(1.0, 2.0, v({-1.0}), v({1.0}), v({3.0})) == doctest::Approx(3.0));
  CHECK(radius_from_hessian(2.0, 1.0, v({0.0}), v({0.0}), v({0.0})) == 2.0);
  CHECK_THROWS_AS(radius_from_hessian(1.0, 0.0, v({0.0}), v({0.0}), v({0.0})), Error);
}

TEST_CASE("amplitude bound") {
  auto du = build_duffing(0.01, 1.0, 1.0, 1.0, 1.0);
  const double b = amplitude_bound(du, 0.0, 0.01);
  CHECK(b == doctest::Approx(std::sqrt(2.0 * kPi) * std::sqrt(kPi) / 0.01).epsilon(1e-14));
  CHECK(b == doctest::Approx(444.2882938158366).epsilon(1e-12));
  CHECK(rm_amplitude_bound(du, 0.0, 0.01) - b == doctest::Approx(2.0 * kPi * du.forcing().l2_norm() / 0.01));
  CHECK(amplitude_bound(du, 1.0, 0.01) > b);
  CHECK(amplitude_bound(du, 0.0, 0.02) < b);
  CHECK(amplitude_bound(du.with_forcing(du.forcing().scaled(0.0)), 0.0, 0.01) == 0.0);
  CHECK_THROWS_AS(amplitude_bound(du, 0.0, 0.0), Error);

  // Resonant linear oscillator: bound / q_lin = 2 pi / sqrt(2).
  const double T = 2.0 * kPi, f = 0.3, c = 0.05;
  auto lin = build_linear(Mat::Identity(1, 1), c * Mat::Identity(1, 1), Mat::Identity(1, 1),
                          ForcingSignal::harmonic(T, v({f}), v({0.0})));
  CHECK(amplitude_bound(lin, 0.0, c) / (f * T / (2.0 * kPi * c)) == doctest::Approx(2.0 * kPi / std::sqrt(2.0)));
}

TEST_CASE("counterexample threshold") {
  const auto th = counterexample1_threshold(1.0, 4.0, 0.001, 1.0, 1.0);
  CHECK(std::abs(th.c_inf - 1371.7577441) < 1e-4);
  CHECK(std::abs(th.f_threshold - 0.011777) < 1e-6);
  CHECK(th.c_inf == doctest::Approx(1371.757744029825).epsilon(1e-12));
  CHECK(th.f_threshold == doctest::Approx(0.0117767662366).epsilon(1e-10));

  // Partial sums increase and stay below the majorant sum k^-6 / c1^2.
  double partial = 0.0, prev = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double j = 2.0 * k + 1.0;
    partial += 1.0 / (std::pow(j, 4) * (std::pow(9.0 - j * j, 2) + std::pow(0.001 * j, 2)));
    CHECK(partial >= prev);
    prev = partial;
  }
  CHECK(partial < th.c_inf);
  CHECK(th.c_inf < 1.0 / (0.001 * 0.001) * 1.0173430619844491);

  auto ne = check_counterexample1_nonexistence(build_counterexample1());
  REQUIRE(ne);
  CHECK(ne->reason == NonexistenceReason::counterexample1_threshold);
  CHECK(ne->threshold == doctest::Approx(0.0117767662366).epsilon(1e-8));
  Counterexample1Params below;
  below.fm = 0.0117;
  CHECK_FALSE(check_counterexample1_nonexistence(build_counterexample1(below)));
}

TEST_CASE("quadratic threshold and global extremum") {
  CHECK(quadratic_forcing_threshold(1.0, 0.0, 1.0, 1.0) == 1.25);
  CHECK(quadratic_forcing_threshold(1.0, 2.0, 1.0, 1.0) == 2.25);
  CHECK(quadratic_forcing_threshold(1.0, 0.1, 10.0, 0.7) < quadratic_forcing_threshold(1.0, 0.1, 1.0, 0.7));
  CHECK_THROWS_AS(quadratic_forcing_threshold(1.0, 0.1, 0.0, 1.0), Error);

  const double thr = quadratic_forcing_threshold(1.0, 0.1, 1.0, 1.0);
  CHECK(check_quadratic_nonexistence(build_quadratic_oscillator(0.1, 1.0, 1.0, 1.01 * thr, 1.0)));
  CHECK_FALSE(check_quadratic_nonexistence(build_quadratic_oscillator(0.1, 1.0, 1.0, 0.99 * thr, 1.0)));

  auto over = build_pendulum(0.1, 1.0, ForcingSignal::constant(2.0 * kPi, v({2.0})));
  CHECK(check_global_extremum_nonexistence(over));
  auto inside = build_pendulum(0.1, 1.0, ForcingSignal::constant(2.0 * kPi, v({0.0})));
  CHECK_FALSE(check_global_extremum_nonexistence(inside));
  CHECK_FALSE(check_global_extremum_nonexistence(build_duffing(0.01, 1.0, 1.0, 1.0, 1.0)));
}

TEST_CASE("certificates") {
  auto hard = certify(build_duffing(0.01, 1.0, 1.0, 1.0, 1.0));
  CHECK(hard.overall == Overall::exists);
  CHECK(hard.r == 0.0);
  REQUIRE(hard.amplitude_bound);
  CHECK(*hard.amplitude_bound == doctest::Approx(444.2882938158366));
  CHECK(*hard.rm_bound - *hard.amplitude_bound == doctest::Approx(2.0 * kPi * hard.forcing_l2 / hard.c1.c0));

  auto soft = certify(build_duffing(0.01, 1.0, -1.0, 1.0, 1.0));
  CHECK(soft.overall == Overall::exists);
  CHECK(soft.c3star.verdict == Verdict::pass);
  CHECK(soft.c3star.r_star == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(soft.r == doctest::Approx(1.0).epsilon(1e-12));

  auto ce = certify(build_counterexample1());
  CHECK(ce.overall == Overall::no_periodic_orbit);
  REQUIRE(ce.nonexistence);
  CHECK(ce.nonexistence->reason == NonexistenceReason::counterexample1_threshold);
  CHECK(ce.c2.verdict == Verdict::fail);
  CHECK(ce.c3.verdict == Verdict::fail);

  auto pend = certify(build_pendulum(0.1, 1.0, ForcingSignal::constant(2.0 * kPi, v({2.0}))));
  CHECK(pend.overall == Overall::no_periodic_orbit);
  CHECK(pend.nonexistence->reason == NonexistenceReason::global_extremum);

  auto ch = certify(build_builtin("chain"));
  CHECK(ch.overall == Overall::exists);
  CHECK(ch.c3star.mode == Mode::analytic);

  // Walls removed at both ends: rigid-body mode.
  std::vector<SpringLaw> springs{{{}}, {{1.0, 0.0, 0.5}}, {{1.0, 0.0, 0.5}}, {{}}};
  auto free = certify(build_chain({1.0, 1.0, 1.0}, {0.0, 0.1, 0.1, 0.0}, springs,
                                  ForcingSignal::harmonic(2.0 * kPi, v({1.0, 0.0, 0.0}), v({0.0, 0.0, 0.0}))));
  CHECK(free.overall != Overall::exists);
  CHECK((free.c1.verdict == Verdict::fail || free.c3star.verdict == Verdict::fail));
  // The sign condition fails along (1, 1, 1) for any radius, where S vanishes.
  CHECK(free.c3.verdict == Verdict::fail);
  CHECK(free.c3.mode == Mode::analytic);
  const SignCheck far = check_sign_condition(build_chain({1.0, 1.0, 1.0}, {0.0, 0.1, 0.1, 0.0}, springs,
                                                         ForcingSignal::constant(2.0 * kPi, v({0.0, 0.3, 0.0}))),
                                             7.0);
  REQUIRE(far.witness_a);
  CHECK(far.verdict == Verdict::fail);
  CHECK((*far.witness_a).minCoeff() > 7.0);
  CHECK((*far.witness_b).maxCoeff() < -7.0);

  auto lin = certify(build_linear_example());
  CHECK(lin.overall == Overall::exists);

  const Json j = report_to_json(soft);
  CHECK(j["overall"] == "exists");
  CHECK(j["c3star"]["mode"] == "analytic");
  CHECK(j["c3star"]["C_v"].get<double>() > 0.0);
  CHECK(j.contains("amplitude_bound"));
}
