#pragma once

#include "perorbit/json_io.hpp"
#include "perorbit/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace perorbit {

enum class Verdict { pass, fail, declared, evidence_only, not_applicable };
/// How a verdict was reached: a closed-form argument, a finite scan, or a carried potential.
enum class Mode { analytic, evidence, declared, none };

const char* to_string(Verdict v);
const char* to_string(Mode m);

struct DampingCheck {
  Verdict verdict = Verdict::fail;
  double c0 = 0.0;
  int sign = 0;  // +1 positive definite, -1 negative definite, 0 otherwise
  Vec eigenvalues;
  std::string detail;
};

struct PotentialOptions {
  double box = 5.0;
  int samples = 100;
  double tol = 1e-6;  // widened to 1e-4 for finite-difference Jacobians
  std::uint64_t seed = 0;
};

struct PotentialCheck {
  Verdict verdict = Verdict::fail;
  Mode mode = Mode::none;
  double max_asymmetry = 0.0;
  std::optional<Vec> witness;
  std::string detail;
};

struct ScanOptions {
  double r_max = 0.0;  // 0 selects max(10 r, 10)
  int grid = 33;       // points per axis for full grids (N <= 4)
  int random_per_slab = 10000;
  std::uint64_t seed = 0;
};

struct SignCheck {
  Verdict verdict = Verdict::fail;
  Mode mode = Mode::none;
  double r = 0.0;
  std::vector<int> signs;
  int n_positive = 0;
  std::optional<Vec> witness_a;
  std::optional<Vec> witness_b;
  std::string scan;  // description of the sampling used, empty for analytic
  std::string detail;
};

struct HessianCheck {
  Verdict verdict = Verdict::fail;
  Mode mode = Mode::none;
  double r_star = 0.0;
  double cv = 0.0;
  /// Radius at which cv was evaluated; exceeds r_star when the Hessian degenerates on |q| = r_star.
  double cv_radius = 0.0;
  int sign = 0;
  std::optional<Vec> witness;
  std::string scan;
  std::string detail;
};

enum class NonexistenceReason { global_extremum, quadratic_threshold, counterexample1_threshold };
const char* to_string(NonexistenceReason r);

struct Nonexistence {
  NonexistenceReason reason;
  double threshold = 0.0;  // critical value the data is compared against
  double value = 0.0;      // the data value
  std::string detail;
};

struct CounterexampleThreshold {
  double c_inf = 0.0;
  double f_threshold = 0.0;
  int terms = 0;
};

enum class Overall { exists, no_periodic_orbit, inconclusive };
const char* to_string(Overall o);

struct CertificateReport {
  DampingCheck c1;
  PotentialCheck c2;
  SignCheck c3;
  HessianCheck c3star;
  double r = 0.0;
  double period = 0.0;
  double forcing_l2 = 0.0;
  Vec mean_forcing;
  std::optional<double> amplitude_bound;
  std::optional<double> rm_bound;
  std::optional<Nonexistence> nonexistence;
  Overall overall = Overall::inconclusive;
  std::vector<std::string> notes;
};

struct CertifyOptions {
  PotentialOptions potential;
  ScanOptions scan;
};

DampingCheck check_damping(const Mat& C);
PotentialCheck check_potential(const Nonlinearity& nl, const PotentialOptions& opts = {});

/// Sign condition C3 at radius r. Closed-form families return an analytic pass when
/// their minimal radius is <= r; otherwise the slabs r < |q_j| <= R_max are scanned.
SignCheck check_sign_condition(const MechanicalSystem& sys, double r, const ScanOptions& scan = {});
/// Closed-form C3 with the smallest admissible radius, if the system belongs to a known family.
std::optional<SignCheck> analytic_sign_condition(const MechanicalSystem& sys);

/// Hessian definiteness C3* outside the ball of radius r_star.
HessianCheck check_hessian_definiteness(const MechanicalSystem& sys, double r_star, const ScanOptions& scan = {});
/// Closed-form C3* with the smallest admissible r_star, if available.
std::optional<HessianCheck> analytic_hessian_definiteness(const MechanicalSystem& sys);

struct BallExtrema {
  Vec s_min;
  Vec s_max;
  bool exact = false;
};
/// Per-DOF extrema of S over |q| <= radius (exact for 1-DOF polynomials and radius 0).
BallExtrema ball_extrema(const MechanicalSystem& sys, double radius, const ScanOptions& scan = {});

double radius_from_hessian(double r_star, double cv, const Vec& s_min, const Vec& s_max, const Vec& fbar);

double amplitude_bound(const MechanicalSystem& sys, double r, double c0);
/// The Rouche-Mawhin style bound: ours plus T C_f / C0.
double rm_amplitude_bound(const MechanicalSystem& sys, double r, double c0);

std::optional<Nonexistence> check_global_extremum_nonexistence(const MechanicalSystem& sys);
double quadratic_forcing_threshold(double omega2, double c, double kappa, double omega);
std::optional<Nonexistence> check_quadratic_nonexistence(const MechanicalSystem& sys);
CounterexampleThreshold counterexample1_threshold(double k1, double k2, double c1, double omega, double kappa,
                                                  double c2 = 0.0);
std::optional<Nonexistence> check_counterexample1_nonexistence(const MechanicalSystem& sys);

CertificateReport certify(const MechanicalSystem& sys, const CertifyOptions& opts = {});

Json report_to_json(const CertificateReport& r);

}  // namespace perorbit
