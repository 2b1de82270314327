#pragma once

#include "perorbit/harmonic_balance.hpp"
#include "perorbit/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace perorbit {

// ---------------------------------------------------------------------------
// Integration

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 picks a step from the initial derivative
  long max_steps = 20'000'000;
  double escape = 1e8;  // abort when any |x_i| exceeds this
};

enum class IntegrationStatus { ok, escape, step_underflow, max_steps };
const char* to_string(IntegrationStatus s);

/// dx = f(t, x); dx is preallocated by the caller.
using Rhs = std::function<void(double t, const Vec& x, Vec& dx)>;

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> dx;
  IntegrationStatus status = IntegrationStatus::ok;
  long steps = 0;
  long rejected = 0;

  const Vec& final_state() const { return x.back(); }
  double final_time() const { return t.back(); }
  /// Cubic Hermite interpolation between accepted steps.
  Vec at(double time) const;
};

/// Dormand-Prince 5(4) with FSAL and standard step control. With keep_steps = false only
/// the endpoints are stored.
Trajectory integrate(const Rhs& rhs, const Vec& x0, double t0, double t1, const IntegratorOptions& opts = {},
                     bool keep_steps = true);

// ---------------------------------------------------------------------------
// Linear periodic systems

struct LTPSystem {
  int n = 2;
  double period = 1.0;  // T_A
  std::function<void(double t, Mat& A)> A;
};

struct MonodromyResult {
  Mat phi;
  CVec multipliers;
  double trace_integral = 0.0;
  double liouville_defect = 0.0;  // |prod rho - exp(int tr A)|
  double max_abs = 0.0;
  bool stable = false;
  IntegrationStatus status = IntegrationStatus::ok;
};

/// Fundamental matrix over `period`, which must be a positive integer multiple of ltp.period.
MonodromyResult monodromy(const LTPSystem& ltp, double period, const IntegratorOptions& opts = {});
MonodromyResult monodromy(const LTPSystem& ltp, const IntegratorOptions& opts = {});

struct FrequencyResponse {
  double A = 0.0;
  double psi = 0.0;
};

/// Steady state A sin(W t - psi) of q'' + c q' + w2 q = a sin(W t).
FrequencyResponse linear_frf(double omega2, double c, double a, double Omega);

/// q1'' + c1 q1' + q1 (w1^2 + k A^2/2 - (k A^2/2) cos(2 W t - 2 psi)) = 0, period pi / W.
LTPSystem mathieu_ltp(double c1, double omega1_sq, double kappa, double A, double psi, double Omega);

/// A(t) = [[0, I], [-M^-1 dS/dq(q(t)), -M^-1 C]] along an HB orbit, period 2 pi / omega.
LTPSystem variational_ltp(const MechanicalSystem& sys, const FourierAnsatz& orbit);

// ---------------------------------------------------------------------------
// Stability map

struct MathieuParams {
  double omega2 = 1.0;  // w2 (not squared)
  double c1 = 0.01;
  double c2 = 0.01;
  double kappa = 1.0;
  double Omega = 1.0;

  double forcing_period() const { return 2.0 * kPi / Omega; }
};

struct StabilityCell {
  double a = 0.0;
  double omega1 = 0.0;
  /// Multipliers over the half period T_A = T/2 (the product equals e^{-c1 T/2}).
  CVec multipliers;
  double max_abs = 0.0;          // max |rho| over one forcing period T
  double liouville_defect = 0.0;  // against e^{-c1 T/2}
  bool stable = false;
};

struct BoundaryPoint {
  double a = 0.0;
  double omega1 = 0.0;
  double max_abs = 0.0;
  int bisection_steps = 0;
  CVec multipliers;  // half-period
};

struct StabilityMap {
  MathieuParams params;
  std::vector<double> a_grid;
  std::vector<double> omega1_grid;
  std::vector<StabilityCell> cells;  // omega1-major: cells[i * a_grid.size() + j]
  std::vector<BoundaryPoint> boundary;
};

StabilityCell stability_cell(const MathieuParams& p, double a, double omega1, const IntegratorOptions& opts = {});

/// Classifies every (a, omega1) cell, then bisects in a at fixed omega1 across every change of
/// stability until ||rho|_max - 1| < 1e-8 (at most 60 steps). Cells run on `jobs` threads.
StabilityMap stability_map(const MathieuParams& p, const std::vector<double>& a_grid,
                           const std::vector<double>& omega1_grid, const IntegratorOptions& opts = {}, int jobs = 1);

std::string stability_map_csv(const StabilityMap& m);
std::string boundary_csv(const StabilityMap& m);

// ---------------------------------------------------------------------------
// Adjoint and orthogonality

struct AdjointSolution {
  double sigma = 1.0;          // +1 or -1: the half-period multiplier selected
  double forcing_period = 0.0;  // T = 2 T_A
  double periodicity_defect = 0.0;
  double l2_norm = 1.0;        // int_0^T y.y dt after normalisation
  double int_y2_sq = 0.0;      // int_0^T y2^2 dt
  double int_y2 = 0.0;         // int_0^T y2 dt
  Trajectory trajectory;       // y over [0, T]

  Vec at(double t) const;
};

/// Periodic solution of y' = -A^T(t) y for a multiplier of the half-period monodromy near
/// +1 (which = 1) or -1 (which = -1), normalised to unit L2 norm over T = 2 T_A.
AdjointSolution adjoint_periodic_solution(const LTPSystem& ltp, int which, const IntegratorOptions& opts = {},
                                          double tolerance = 1e-6);
/// Picks the multiplier closer to the unit circle at +1 or -1.
AdjointSolution adjoint_periodic_solution(const LTPSystem& ltp, const IntegratorOptions& opts = {},
                                          double tolerance = 1e-6);

struct OrthogonalityForcing {
  double sign = 1.0;        // f1 = sign * y2
  double integral = 0.0;    // int_0^T y^T [0; f1] dt = sign * int y2^2
  double mean = 0.0;        // (1/T) int f1 dt, <= 0 by construction
  double period = 0.0;

  double eval(const AdjointSolution& y, double t) const { return sign * y.at(t)[1]; }
};

OrthogonalityForcing orthogonality_violating_forcing(const AdjointSolution& y);

/// Mathieu system at a boundary point with the parameters used to build it.
LTPSystem boundary_ltp(const MathieuParams& p, const BoundaryPoint& b);

}  // namespace perorbit
