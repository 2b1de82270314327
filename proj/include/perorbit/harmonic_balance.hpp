#pragma once

#include "perorbit/json_io.hpp"
#include "perorbit/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace perorbit {

/// q(t) = c0/2 + sum_{k=1}^K [ s_k sin(k W t) + c_k cos(k W t) ].
/// Coefficients are stored DOF-major: DOF j occupies [c0, s1, c1, ..., sK, cK].
struct FourierAnsatz {
  int dim = 0;
  int K = 0;
  double omega = 1.0;
  Vec coeffs;

  static FourierAnsatz zeros(int dim, int K, double omega);

  int block() const { return 2 * K + 1; }
  double period() const { return 2.0 * kPi / omega; }

  double& c0(int j) { return coeffs[j * block()]; }
  double& s(int j, int k) { return coeffs[j * block() + 2 * k - 1]; }
  double& c(int j, int k) { return coeffs[j * block() + 2 * k]; }
  double c0(int j) const { return coeffs[j * block()]; }
  double s(int j, int k) const { return coeffs[j * block() + 2 * k - 1]; }
  double c(int j, int k) const { return coeffs[j * block() + 2 * k]; }

  Vec eval(double t) const;
  Vec velocity(double t) const;
  Vec acceleration(double t) const;
  Vec mean() const;

  /// Zero-padded or truncated copy at a new order.
  FourierAnsatz resized(int new_K) const;
};

struct HBOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int samples = 0;  // 0 selects default_samples(K)
  int max_halvings = 10;
  bool lm_fallback = true;
  int lm_max_iter = 400;
};

struct HBSolution {
  FourierAnsatz ansatz;
  double residual_norm = 0.0;
  int iterations = 0;
  int samples = 0;
  bool converged = false;
  Vec amplitude;  // per-DOF max_t |q_j(t)|
  std::string message;
};

/// Next power of two >= 8K + 8.
int default_samples(int K);

/// Projected equation-of-motion defect in coefficient space (length N (2K+1)).
/// The nonlinearity is sampled at `samples` uniform times; the forcing enters through its
/// exact Fourier coefficients truncated at K.
Vec aft_residual(const MechanicalSystem& sys, const FourierAnsatz& x, int samples);
/// Derivative of aft_residual with respect to the coefficients, from the analytic dS/dq.
Mat aft_jacobian(const MechanicalSystem& sys, const FourierAnsatz& x, int samples);

/// Same projection computed independently: time-domain defect M q'' + C q' + S(q) - f(t)
/// at n_points uniform times, integrated against the basis by the rectangle rule.
Vec quadrature_residual(const MechanicalSystem& sys, const FourierAnsatz& x, int n_points);

/// Solve the HB equations at forcing frequency omega. The forcing keeps its harmonic content
/// and has its period retuned to 2 pi / omega.
HBSolution hb_solve(const MechanicalSystem& sys, double omega, int K, const std::optional<FourierAnsatz>& initial = {},
                    const HBOptions& opts = {});

struct ConvergenceRow {
  int K = 0;
  double amplitude = 0.0;  // max_t |q_1(t)|
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool apparently_converged = false;  // |amplitude - previous| < 1e-6
};

/// Warm-started ladder over ascending K, starting cold at the first entry.
std::vector<ConvergenceRow> hb_convergence_study(const MechanicalSystem& sys, const std::vector<int>& Ks,
                                                 const HBOptions& opts = {});

struct FejerRow {
  int n = 0;
  double partial_sum = 0.0;  // S_n(f_f)(0)
};

struct FejerDemo {
  int blocks = 0;
  std::vector<FejerRow> rows;
  double sup_norm = 0.0;      // ||f_f||_inf, dense sampling refined by Newton
  double max_partial = 0.0;   // max over all n of |S_n(0)|
  int argmax_n = 0;
  int bandwidth = 0;
  double full_sum = 0.0;      // S_bandwidth(0)
};

/// Partial sums at t = 0 of the Fejer forcing f_f; every n in [0, bandwidth] is scanned for
/// the maximum, rows are reported for `ns`.
FejerDemo fejer_partial_sum_demo(int blocks, const std::vector<int>& ns);

/// Uniform samples over one period: row i = (t_i, q(t_i)).
Mat reconstruct(const FourierAnsatz& x, int n_samples = 2048);
/// Per-DOF max |q_j| over 2048 samples, refined locally.
Vec amplitude(const FourierAnsatz& x);

Json solution_to_json(const HBSolution& sol);
HBSolution solution_from_json(const Json& j);
/// CSV time series "t,q1,...,qN" with 17 significant digits.
std::string solution_csv(const FourierAnsatz& x, int n_samples);

}  // namespace perorbit
