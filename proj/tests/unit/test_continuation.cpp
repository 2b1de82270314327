#include <doctest.h>

#include "perorbit/continuation.hpp"
#include "perorbit/existence.hpp"

#include <algorithm>
#include <cmath>

using namespace perorbit;

TEST_CASE("natural sweep on the f = 0.01 low branch") {
  const SystemFamily fam = frequency_family(build_duffing(0.01, 1.0, 1.0, 0.01, 0.6));
  ContinuationOptions o;
  const Branch b = sweep_natural(fam, 0.6, 0.9, o);
  REQUIRE(b.points.size() > 5);
  CHECK(b.points.front().param == 0.6);
  CHECK(b.points.back().param == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(std::abs(b.points.front().solution.amplitude[0] - 0.0156173964103936) < 1e-4);
  for (const auto& p : b.points) {
    CHECK(p.solution.converged);
    CHECK(p.stability == Stability::stable);
    // Each point satisfies the HB residual at its own parameter.
    CHECK(aft_residual(fam.system(p.param), p.solution.ansatz, p.solution.samples).norm() < 1e-10);
  }
}

TEST_CASE("arclength sweep traverses both folds of a hardening Duffing") {
  const SystemFamily fam = frequency_family(build_duffing(0.02, 1.0, 1.0, 0.1, 0.6));
  const Branch b = sweep_arclength(fam, 0.6, 4.0);
  REQUIRE(b.folds.size() == 2);
  CHECK(b.folds[0].param == doctest::Approx(2.21142996842709).epsilon(1e-3));
  CHECK(b.folds[0].amplitude[0] == doctest::Approx(2.31700508517089).epsilon(1e-3));
  CHECK(b.folds[1].param == doctest::Approx(1.1701620353421).epsilon(1e-3));
  CHECK(b.points.back().param == 4.0);

  for (const auto& f : b.folds) {
    // Tangent parameter components change sign across the fold.
    CHECK(b.points[f.after].tangent_param * b.points[f.after + 1].tangent_param < 0.0);
    CHECK(b.points[f.after + 1].fold);
  }
  // Upper branch up to the first fold is stable, the middle one unstable, the low one stable.
  const std::size_t f0 = b.folds[0].after, f1 = b.folds[1].after;
  CHECK(b.points[f0 / 2].stability == Stability::stable);
  CHECK(b.points[(f0 + f1) / 2 + 1].stability == Stability::unstable);
  CHECK(b.points.back().stability == Stability::stable);

  // Three coexisting orbits inside the hysteresis window.
  CHECK(b.amplitudes_at(1.8).size() == 3);
  CHECK(b.amplitudes_at(3.0).size() == 1);

  for (const auto& p : b.points) {
    CHECK(aft_residual(fam.system(p.param), p.solution.ansatz, p.solution.samples).norm() < 1e-9);
  }
}

TEST_CASE("natural and arclength sweeps agree on fold-free segments") {
  const SystemFamily fam = frequency_family(build_duffing(0.02, 1.0, 1.0, 0.1, 0.6));
  ContinuationOptions o;
  o.tag_stability = false;
  const Branch arc = sweep_arclength(fam, 0.6, 1.0, o);
  const Branch nat = sweep_natural(fam, 0.6, 1.0, o);
  REQUIRE(arc.folds.empty());
  for (double W : {0.65, 0.8, 0.95}) {
    const auto it = std::lower_bound(nat.points.begin(), nat.points.end(), W,
                                     [](const BranchPoint& p, double w) { return p.param < w; });
    const HBSolution a = hb_solve(fam.system(W), W, 7, it->solution.ansatz);
    const auto jt = std::lower_bound(arc.points.begin(), arc.points.end(), W,
                                     [](const BranchPoint& p, double w) { return p.param < w; });
    const HBSolution b = hb_solve(fam.system(W), W, 7, jt->solution.ansatz);
    CHECK(std::abs(a.amplitude[0] - b.amplitude[0]) < 1e-6);
  }
}

TEST_CASE("linear systems have no folds") {
  const SystemFamily fam = frequency_family(build_duffing(0.05, 1.0, 0.0, 0.1, 0.5));
  ContinuationOptions o;
  o.max_step = 0.1;
  const Branch b = sweep_arclength(fam, 0.5, 2.0, o);
  CHECK(b.folds.empty());
  CHECK(b.points.back().param == 2.0);
  for (const auto& p : b.points) {
    const double W = p.param;
    CHECK(p.solution.amplitude[0] == doctest::Approx(0.1 / std::hypot(1.0 - W * W, 0.05 * W)).epsilon(1e-8));
  }
}

TEST_CASE("stability changes are localised by bisection") {
  const SystemFamily fam = frequency_family(build_duffing(0.02, 1.0, 1.0, 1.0, 0.6));
  ContinuationOptions o;
  const Branch b = sweep_natural(fam, 0.6, 0.8, o);
  int changes = 0;
  for (std::size_t i = 0; i + 1 < b.points.size(); ++i) {
    if (b.points[i].stability == b.points[i + 1].stability) continue;
    const StabilityChange s = refine_stability_change(fam, b, i, o, 1e-5);
    REQUIRE(s.found);
    CHECK(s.width < 1e-4);
    CHECK(std::abs(s.max_multiplier - 1.0) < 1e-2);
    ++changes;
  }
  CHECK(changes == 2);
}

TEST_CASE("softening Duffing amplitude sweep starts at the three equilibria") {
  ContinuationOptions o;
  const DuffingBranches r = duffing_amplitude_sweep(0.01, 1.0, -1.0, 0.5, 0.2, o);
  REQUIRE_FALSE(r.trivial.points.empty());
  CHECK(r.trivial.points.front().solution.ansatz.mean()[0] == doctest::Approx(0.0));
  CHECK(r.positive.points.front().solution.ansatz.mean()[0] == doctest::Approx(1.0));
  CHECK(r.negative.points.front().solution.ansatz.mean()[0] == doctest::Approx(-1.0));
  CHECK(r.trivial.points.front().stability == Stability::stable);
  CHECK(r.positive.points.front().stability == Stability::unstable);
  // Mirror symmetry q -> -q, t -> t + T/2 maps the two nontrivial branches onto each other.
  const auto& p = r.positive.points.back();
  const auto& n = r.negative.points.back();
  CHECK(p.param == n.param);
  CHECK(p.solution.ansatz.mean()[0] == doctest::Approx(-n.solution.ansatz.mean()[0]).epsilon(1e-8));
  CHECK_THROWS_AS(duffing_amplitude_sweep(0.01, 1.0, 1.0, 0.5, 0.2), Error);
}

TEST_CASE("branch amplitudes respect the certificate bound") {
  const MechanicalSystem sys = build_duffing(0.02, 1.0, 1.0, 1.0, 0.6);
  const Branch b = sweep_arclength(frequency_family(sys), 0.6, 3.0);
  for (const auto& p : b.points) {
    const CertificateReport rep = certify(sys.at_frequency(p.param));
    REQUIRE(rep.amplitude_bound);
    CHECK(p.solution.amplitude[0] < *rep.amplitude_bound);
  }
}

TEST_CASE("branch output formats") {
  const SystemFamily fam = frequency_family(build_duffing(0.05, 1.0, 1.0, 0.1, 0.6));
  ContinuationOptions o;
  o.max_step = 0.2;
  const Branch b = sweep_natural(fam, 0.6, 1.0, o);
  const std::string csv = branch_csv(b);
  CHECK(csv.rfind("Omega,amp_1,mean_1,stable,fold,max_multiplier\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == b.points.size() + 1);
  const Json j = branch_to_json(b);
  CHECK(j["points"].size() == b.points.size());
  CHECK(j["points"][0]["solution"]["K"] == 7);
  CHECK(top_harmonic_energy_fraction(b.points[0].solution.ansatz) < 1e-8);
}
