#pragma once

#include "perorbit/types.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace perorbit {

// ---------------------------------------------------------------------------
// Forcing

/// Truncated real Fourier series per DOF:
///   f(t) = c0/2 + sum_k [ s_k sin(k w t) + c_k cos(k w t) ],  w = 2 pi / T.
/// Row k-1 of `sin_coef` / `cos_coef` holds harmonic k for every DOF.
struct FourierCoefficients {
  Vec c0;
  Mat sin_coef;
  Mat cos_coef;

  int dim() const { return static_cast<int>(c0.size()); }
  int order() const { return static_cast<int>(sin_coef.rows()); }
};

class ForcingSignal {
 public:
  enum class Kind { fourier, triangular, fejer };

  struct TriangularWave {
    double amplitude = 0.0;
    Vec directions;
    int terms = 200;  // number of odd harmonics kept
  };

  /// f = directions * (m f_f'' + c f_f' + k f_f) with f_f the truncated Fejer sum.
  struct FejerWave {
    int blocks = 1;
    Vec directions;
    double op_m = 0.0;
    double op_c = 0.0;
    double op_k = 1.0;
  };

  static ForcingSignal fourier(double period, FourierCoefficients coeffs);
  static ForcingSignal constant(double period, const Vec& value);
  /// Single harmonic per DOF: amp_sin * sin(w t) + amp_cos * cos(w t).
  static ForcingSignal harmonic(double period, const Vec& amp_sin, const Vec& amp_cos);
  static ForcingSignal triangular(double period, double amplitude, const Vec& directions, int terms = 200);
  static ForcingSignal fejer(double period, int blocks, const Vec& directions, double op_m = 0.0,
                             double op_c = 0.0, double op_k = 1.0);

  Kind kind() const { return kind_; }
  double period() const { return period_; }
  double omega() const { return 2.0 * kPi / period_; }
  int dim() const { return coeffs_.dim(); }

  const FourierCoefficients& coefficients() const { return coeffs_; }
  const TriangularWave& triangular_wave() const { return tri_; }
  const FejerWave& fejer_wave() const { return fej_; }
  /// Accumulated factor from scaled(); already folded into coefficients().
  double scale() const { return scale_; }

  /// Same harmonic content, new fundamental period. Derivative-based
  /// representations (Fejer with an operator) are rebuilt for the new period.
  ForcingSignal with_period(double period) const;
  ForcingSignal scaled(double factor) const;

  Vec eval(double t) const;
  Vec mean() const;
  /// C_f = (int_0^T f.f dt)^(1/2) via Parseval on the canonical coefficients.
  double l2_norm() const;

 private:
  ForcingSignal() = default;
  void rebuild();

  Kind kind_ = Kind::fourier;
  double period_ = 2.0 * kPi;
  double scale_ = 1.0;
  FourierCoefficients coeffs_;
  TriangularWave tri_;
  FejerWave fej_;
};

/// Exact cosine coefficients a_m of the Fejer sum
///   f_f(t) = sum_{k=1}^{K_b} (2/k^2) sin(p_k t) sum_{l=1}^{q_k} sin(l t)/l,
/// p_k = 2^(k^3+1), q_k = 2^(k^3). Index m of the result is frequency m.
std::vector<double> fejer_cosine_coefficients(int blocks);

// ---------------------------------------------------------------------------
// Nonlinearity

struct Monomial {
  std::vector<int> exponents;
  double coeff = 0.0;
};

/// coeff * prod_i q_i^exponents[i], contributing to S_dof.
struct PolyTerm {
  int dof = 0;
  Monomial mono;
};

/// Spring force law S(d) = sum_i coeffs[i] d^(i+1). An empty list is an absent spring.
struct SpringLaw {
  std::vector<double> coeffs;

  double force(double d) const;
  double stiffness(double d) const;
  double energy(double d) const;
  bool absent() const;
};

class Nonlinearity {
 public:
  enum class Kind { polynomial, chain, pendulum, custom };

  using ValueFn = std::function<void(const double* q, double* s)>;
  using JacobianFn = std::function<void(const double* q, double* jac_row_major)>;
  using PotentialFn = std::function<double(const double* q)>;

  static Nonlinearity polynomial(int dim, std::vector<PolyTerm> terms);
  /// Polynomial carrying a declared potential; throws if grad V does not equal S.
  static Nonlinearity polynomial(int dim, std::vector<PolyTerm> terms, std::vector<Monomial> potential);
  /// N+1 springs for N masses, walls at both ends.
  static Nonlinearity chain(std::vector<SpringLaw> springs);
  static Nonlinearity pendulum(double cp);
  static Nonlinearity custom(int dim, ValueFn value, JacobianFn jacobian = {}, PotentialFn potential = {});

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  Vec value(const Vec& q) const;
  /// Analytic where available, otherwise central differences.
  Mat jacobian(const Vec& q) const;
  bool analytic_jacobian() const;

  bool has_potential() const;
  double potential(const Vec& q) const;

  const std::vector<PolyTerm>& terms() const { return terms_; }
  const std::vector<Monomial>& potential_terms() const { return potential_; }
  const std::vector<SpringLaw>& springs() const { return springs_; }
  double pendulum_cp() const { return cp_; }

 private:
  Nonlinearity() = default;

  Kind kind_ = Kind::polynomial;
  int dim_ = 0;
  std::vector<PolyTerm> terms_;
  std::vector<Monomial> potential_;
  bool declared_potential_ = false;
  std::vector<SpringLaw> springs_;
  double cp_ = 0.0;
  ValueFn value_fn_;
  JacobianFn jacobian_fn_;
  PotentialFn potential_fn_;
};

/// Finite-difference Jacobian with step max(1e-6, 1e-6 |q_i|).
Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& q);

// ---------------------------------------------------------------------------
// System

class MechanicalSystem {
 public:
  MechanicalSystem(Mat mass, Mat damping, Nonlinearity nonlinearity, ForcingSignal forcing,
                   std::string name = {});

  int dim() const { return static_cast<int>(mass_.rows()); }
  const Mat& mass() const { return mass_; }
  const Mat& damping() const { return damping_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  const ForcingSignal& forcing() const { return forcing_; }
  const std::string& name() const { return name_; }

  MechanicalSystem with_forcing(ForcingSignal forcing) const;
  /// Same system with the forcing's period retuned to 2 pi / omega.
  MechanicalSystem at_frequency(double omega) const;

 private:
  Mat mass_;
  Mat damping_;
  Nonlinearity nl_;
  ForcingSignal forcing_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Built-in systems

struct Counterexample1Params {
  double k1 = 1.0;
  double k2 = 4.0;
  double c1 = 0.001;
  double c2 = 0.0;
  double kappa = 1.0;
  double fm = 0.01178;
  double omega = 1.0;
  int terms = 200;
};

MechanicalSystem build_counterexample1(const Counterexample1Params& p = {});
MechanicalSystem build_duffing(double c, double omega2, double kappa, double f, double omega);
MechanicalSystem build_quadratic_oscillator(double c, double omega2, double kappa, double f, double omega);
MechanicalSystem build_pendulum(double c, double cp, const ForcingSignal& forcing);
/// f1 is a one-component signal; the second DOF receives a sin(omega t).
MechanicalSystem build_counter3(double c1, double c2, double omega1_sq, double omega2_sq, double kappa, double a,
                                double omega, const ForcingSignal& f1);
/// masses: N, dampers: N+1, springs: N+1.
MechanicalSystem build_chain(const std::vector<double>& masses, const std::vector<double>& dampers,
                             const std::vector<SpringLaw>& springs, const ForcingSignal& forcing);
MechanicalSystem build_linear(const Mat& mass, const Mat& damping, const Mat& stiffness, const ForcingSignal& forcing);
/// q'' + 0.01 q' + 400 q with the two-tone forcing whose exact response is 0.0025 (sin t + sin 20t).
MechanicalSystem build_linear_example();

/// Names accepted by build_builtin, each taking its own numeric overrides.
std::vector<std::string> builtin_names();
MechanicalSystem build_builtin(const std::string& name, const std::map<std::string, double>& params = {});

}  // namespace perorbit
