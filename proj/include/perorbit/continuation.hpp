#pragma once

#include "perorbit/floquet.hpp"
#include "perorbit/harmonic_balance.hpp"
#include "perorbit/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace perorbit {

/// One-parameter family of systems. `system(l)` returns the system at parameter l with its
/// forcing already tuned; `omega(l)` is the HB fundamental frequency there.
struct SystemFamily {
  std::string parameter = "Omega";
  std::function<MechanicalSystem(double)> system;
  std::function<double(double)> omega;
};

/// Forcing frequency as parameter.
SystemFamily frequency_family(const MechanicalSystem& sys);
/// Forcing multiplied by the parameter at fixed frequency omega.
SystemFamily amplitude_family(const MechanicalSystem& sys, double omega);

enum class Stability { unknown, stable, unstable };
const char* to_string(Stability s);

struct BranchPoint {
  double param = 0.0;
  HBSolution solution;
  Stability stability = Stability::unknown;
  double max_multiplier = 0.0;
  double arclength = 0.0;
  double tangent_param = 0.0;  // parameter component of the unit tangent
  bool fold = false;
};

struct FoldPoint {
  double param = 0.0;
  double arclength = 0.0;
  Vec amplitude;
  std::size_t after = 0;  // index of the branch point preceding the fold
};

struct Branch {
  std::string parameter;
  std::vector<BranchPoint> points;
  std::vector<FoldPoint> folds;
  std::string message;

  /// Piecewise-linear amplitude of DOF `dof` at parameter value l on the segments that bracket
  /// it; one entry per crossing, ordered along the branch.
  std::vector<double> amplitudes_at(double l, int dof = 0) const;
};

struct ContinuationOptions {
  int K = 7;
  HBOptions hb;
  double initial_step = 0.01;
  double min_step = 1e-7;
  double max_step = 0.05;
  int max_points = 20000;
  int max_halvings = 12;
  bool tag_stability = true;
  IntegratorOptions integrator;
  /// Raise K by 2 (up to max_K) when the top harmonic carries more than this share of energy.
  double energy_threshold = 1e-8;
  int max_K = 31;
  bool auto_raise_K = true;
};

/// Energy share of the highest retained harmonic; a proxy for the discarded tail.
double top_harmonic_energy_fraction(const FourierAnsatz& x);

/// Natural-parameter sweep from `from` to `to`. Each point warm-starts from the previous one;
/// a failed solve halves the step, three successes in a row grow it by 1.3, and the sweep
/// stops after max_halvings consecutive halvings.
Branch sweep_natural(const SystemFamily& fam, double from, double to, const ContinuationOptions& opts = {},
                     const std::optional<FourierAnsatz>& initial = {});

/// Pseudo-arclength continuation starting at `from` and initially heading towards `to`.
/// Stops when the parameter leaves [min(from, to), max(from, to)] or max_points is reached.
Branch sweep_arclength(const SystemFamily& fam, double from, double to, const ContinuationOptions& opts = {},
                       const std::optional<FourierAnsatz>& initial = {});

/// Floquet multipliers of the variational equation about a converged orbit.
MonodromyResult orbit_monodromy(const MechanicalSystem& sys, const FourierAnsatz& orbit,
                                const IntegratorOptions& opts = {});
void tag_stability(const SystemFamily& fam, Branch& branch, const IntegratorOptions& opts = {});

struct StabilityChange {
  double param = 0.0;
  double width = 0.0;  // final bracket width
  double max_multiplier = 0.0;
  bool found = false;
};

/// Bisects in the parameter between branch points i and i + 1 (opposite stability tags, no fold
/// between them) until the bracket is narrower than tol.
StabilityChange refine_stability_change(const SystemFamily& fam, const Branch& branch, std::size_t i,
                                        const ContinuationOptions& opts = {}, double tol = 1e-5);

struct DuffingBranches {
  Branch trivial;
  Branch positive;
  Branch negative;
};

/// Softening Duffing (kappa < 0): continues the orbits born at the three equilibria 0 and
/// +-omega sqrt(-1/kappa) in the forcing amplitude f from 0 to f_max at fixed Omega.
DuffingBranches duffing_amplitude_sweep(double c, double omega2, double kappa, double Omega, double f_max,
                                        const ContinuationOptions& opts = {});

/// "param,amp_1..N,mean_1..N,stable,fold" with 17 significant digits.
std::string branch_csv(const Branch& b);
Json branch_to_json(const Branch& b);

}  // namespace perorbit
