#include "perorbit/existence.hpp"

#include "perorbit/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace perorbit {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::declared: return "declared";
    case Verdict::evidence_only: return "evidence-only";
    case Verdict::not_applicable: return "not-applicable";
  }
  return "?";
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::analytic: return "analytic";
    case Mode::evidence: return "evidence-only";
    case Mode::declared: return "declared";
    case Mode::none: return "none";
  }
  return "?";
}

const char* to_string(NonexistenceReason r) {
  switch (r) {
    case NonexistenceReason::global_extremum: return "global-extremum";
    case NonexistenceReason::quadratic_threshold: return "quadratic-threshold";
    case NonexistenceReason::counterexample1_threshold: return "counterexample1-threshold";
  }
  return "?";
}

const char* to_string(Overall o) {
  switch (o) {
    case Overall::exists: return "exists";
    case Overall::no_periodic_orbit: return "no-periodic-orbit";
    case Overall::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

std::string fmt(double x) { return format_double(x); }

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

Vec unit(int n, int j, double value) {
  Vec q = Vec::Zero(n);
  q[j] = value;
  return q;
}

// Visit every point of a tensor grid with g points per axis on [-R, R]^n.
void for_each_grid_point(int n, int g, double R, const std::function<void(const Vec&)>& visit) {
  std::vector<int> idx(n, 0);
  Vec q(n);
  const double h = g > 1 ? 2.0 * R / (g - 1) : 0.0;
  while (true) {
    for (int i = 0; i < n; ++i) q[i] = g > 1 ? -R + h * idx[i] : 0.0;
    visit(q);
    int i = 0;
    while (i < n && ++idx[i] == g) idx[i++] = 0;
    if (i == n) break;
  }
}

bool is_polynomial_1d(const MechanicalSystem& sys) {
  return sys.dim() == 1 && sys.nonlinearity().kind() == Nonlinearity::Kind::polynomial;
}

// Ascending coefficients of S for a one-DOF polynomial system.
std::vector<double> univariate(const Nonlinearity& nl) {
  std::vector<double> c;
  for (const auto& t : nl.terms()) {
    const int e = t.mono.exponents.empty() ? 0 : t.mono.exponents[0];
    if (static_cast<int>(c.size()) <= e) c.resize(e + 1, 0.0);
    c[e] += t.mono.coeff;
  }
  return c;
}

double max_abs_root(const std::vector<double>& c) {
  double m = 0.0;
  for (double x : poly::real_roots(c)) m = std::max(m, std::abs(x));
  return m;
}

// inf over |q| >= rho of |p(q)| for a univariate polynomial without sign change there.
double inf_abs_outside(const std::vector<double>& p, double rho) {
  double best = std::min(std::abs(poly::evaluate(p, rho)), std::abs(poly::evaluate(p, -rho)));
  for (double x : poly::real_roots(poly::derivative(p)))
    if (std::abs(x) > rho) best = std::min(best, std::abs(poly::evaluate(p, x)));
  return best;
}

bool all_linear(const Nonlinearity& nl) {
  if (nl.kind() != Nonlinearity::Kind::polynomial) return false;
  for (const auto& t : nl.terms()) {
    int deg = 0;
    for (int e : t.mono.exponents) deg += e;
    if (deg != 1 && t.mono.coeff != 0.0) return false;
  }
  return true;
}

Mat linear_stiffness(const Nonlinearity& nl) { return nl.jacobian(Vec::Zero(nl.dim())); }

bool symbolic_potential(const Nonlinearity& nl, double* asym = nullptr) {
  const int n = nl.dim();
  const auto field = poly::canonical(n, nl.terms());
  double worst = 0.0, scale = 1.0;
  for (const auto& [k, c] : field) scale = std::max(scale, std::abs(c));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      worst = std::max(worst, poly::max_difference(poly::partial(field, i, j), poly::partial(field, j, i)));
  if (asym) *asym = worst;
  return worst <= 1e-12 * scale;
}

// The Hessian of V equals the symmetric Jacobian whenever a potential exists.
bool potential_available(const Nonlinearity& nl) {
  if (nl.has_potential() || nl.dim() == 1) return true;
  if (nl.kind() == Nonlinearity::Kind::polynomial) return symbolic_potential(nl);
  return false;
}

// One-DOF sign rule for p(x) = S(x) - fbar: valid iff p has odd degree.
SignCheck univariate_sign(std::vector<double> p, int n, int j, double r_request) {
  SignCheck out;
  out.mode = Mode::analytic;
  p = poly::trim(std::move(p));
  const int deg = static_cast<int>(p.size()) - 1;
  const double root = max_abs_root(p);
  if (deg >= 1 && deg % 2 == 1) {
    out.verdict = Verdict::pass;
    out.r = root;
    out.signs.assign(n, 0);
    out.signs[j] = sgn(p.back());
    out.detail = "odd-degree polynomial row: sign fixed beyond its largest real root";
    return out;
  }
  const double R = std::max(root, r_request) + 1.0;
  out.verdict = Verdict::fail;
  out.r = r_request;
  out.witness_a = unit(n, j, R);
  out.witness_b = unit(n, j, -R);
  out.detail = deg <= 0 ? "row is constant, so q_j (S_j - fbar_j) changes sign with q_j"
                        : "even-degree polynomial row: q_j (S_j - fbar_j) has opposite signs at +-q_j";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// C1

DampingCheck check_damping(const Mat& C) {
  require(C.rows() == C.cols() && C.rows() > 0, "damping matrix must be square");
  DampingCheck out;
  const Eigen::MatrixXd sym = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  out.eigenvalues = es.eigenvalues();
  const double norm = C.norm();
  const double tol = 1e-12 * norm;
  const double lo = out.eigenvalues.minCoeff();
  const double hi = out.eigenvalues.maxCoeff();
  out.c0 = out.eigenvalues.cwiseAbs().minCoeff();
  if (norm == 0.0) {
    out.c0 = 0.0;
    out.detail = "damping matrix is zero";
  } else if (lo > tol) {
    out.verdict = Verdict::pass;
    out.sign = 1;
    out.detail = "symmetric part positive definite";
  } else if (hi < -tol) {
    out.verdict = Verdict::pass;
    out.sign = -1;
    out.detail = "symmetric part negative definite (accepted by the theorem, physically unusual)";
  } else {
    const double offending = std::abs(lo) <= tol || std::abs(hi) <= tol ? (std::abs(lo) < std::abs(hi) ? lo : hi) : lo;
    out.detail = "symmetric part is indefinite or singular; offending eigenvalue " + fmt(offending);
  }
  return out;
}

// ---------------------------------------------------------------------------
// C2

PotentialCheck check_potential(const Nonlinearity& nl, const PotentialOptions& opts) {
  PotentialCheck out;
  const int n = nl.dim();
  if (nl.kind() == Nonlinearity::Kind::polynomial && nl.has_potential()) {
    out.verdict = Verdict::declared;
    out.mode = Mode::declared;
    out.detail = "polynomial carries a potential whose gradient was verified symbolically";
    return out;
  }
  if (nl.kind() == Nonlinearity::Kind::custom && nl.has_potential()) {
    out.verdict = Verdict::declared;
    out.mode = Mode::declared;
    out.detail = "custom nonlinearity declares a potential";
    return out;
  }
  if (n == 1) {
    out.verdict = Verdict::pass;
    out.mode = Mode::analytic;
    out.detail = "every one-DOF force field derives from a potential";
    return out;
  }
  if (nl.kind() == Nonlinearity::Kind::chain) {
    out.verdict = Verdict::pass;
    out.mode = Mode::analytic;
    out.detail = "chain forces derive from V = sum_j P_j(q_{j-1} - q_j) with P_j' = S_j";
    return out;
  }

  // Sampled asymmetry, reported for every remaining case.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(-opts.box, opts.box);
  Vec q(n);
  for (int s = 0; s < opts.samples; ++s) {
    for (int i = 0; i < n; ++i) q[i] = u(rng);
    const Mat J = nl.jacobian(q);
    const double a = (J - J.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
    if (a > out.max_asymmetry) {
      out.max_asymmetry = a;
      out.witness = q;
    }
  }

  if (nl.kind() == Nonlinearity::Kind::polynomial) {
    double coeff_gap = 0.0;
    const bool ok = symbolic_potential(nl, &coeff_gap);
    out.mode = Mode::analytic;
    out.verdict = ok ? Verdict::pass : Verdict::fail;
    out.detail = ok ? "mixed partials agree symbolically"
                    : "mixed partials differ symbolically (coefficient gap " + fmt(coeff_gap) + ")";
    if (ok) out.witness.reset();
    return out;
  }
  const double tol = nl.analytic_jacobian() ? opts.tol : std::max(opts.tol, 1e-4);
  out.mode = Mode::evidence;
  out.verdict = out.max_asymmetry < tol ? Verdict::pass : Verdict::fail;
  out.detail = "sampled Jacobian asymmetry over " + std::to_string(opts.samples) + " points, tolerance " + fmt(tol);
  if (out.verdict == Verdict::pass) out.witness.reset();
  return out;
}

// ---------------------------------------------------------------------------
// C3

namespace {

// A chain with no wall connection has S(s (1, ..., 1)) = 0 for every s, so q_j (S_j - fbar_j) = -s fbar_j
// on that line: either zero or of both signs as s runs to +-infinity.
std::optional<SignCheck> free_chain_sign_failure(const Nonlinearity& nl, double radius) {
  if (nl.kind() != Nonlinearity::Kind::chain) return std::nullopt;
  if (!nl.springs().front().absent() || !nl.springs().back().absent()) return std::nullopt;
  const int n = nl.dim();
  SignCheck out;
  out.verdict = Verdict::fail;
  out.mode = Mode::analytic;
  out.r = radius;
  out.signs.assign(n, 0);
  out.witness_a = Vec::Constant(n, radius + 1.0);
  out.witness_b = Vec::Constant(n, -(radius + 1.0));
  out.detail = "no wall connection: S vanishes along the rigid-body direction (1, ..., 1)";
  return out;
}

}  // namespace

std::optional<SignCheck> analytic_sign_condition(const MechanicalSystem& sys) {
  const auto& nl = sys.nonlinearity();
  if (auto free = free_chain_sign_failure(nl, 0.0)) return free;
  if (nl.kind() != Nonlinearity::Kind::polynomial) return std::nullopt;
  const int n = sys.dim();
  const Vec fbar = sys.forcing().mean();
  const auto field = poly::canonical(n, nl.terms());

  SignCheck out;
  out.verdict = Verdict::pass;
  out.mode = Mode::analytic;
  out.signs.assign(n, 0);
  std::vector<std::string> reasons;
  for (int j = 0; j < n; ++j) {
    // Collect row j.
    std::vector<std::pair<std::vector<int>, double>> row;
    for (const auto& [key, c] : field)
      if (key.first == j && c != 0.0) row.emplace_back(key.second, c);

    bool univariate_row = true;
    for (const auto& [e, c] : row)
      for (int i = 0; i < n; ++i)
        if (i != j && e[i] != 0) univariate_row = false;
    if (univariate_row) {
      std::vector<double> p(1, -fbar[j]);
      for (const auto& [e, c] : row) {
        if (static_cast<int>(p.size()) <= e[j]) p.resize(e[j] + 1, 0.0);
        p[e[j]] += c;
      }
      auto one = univariate_sign(p, n, j, 0.0);
      if (one.verdict == Verdict::fail) return one;
      out.r = std::max(out.r, one.r);
      out.signs[j] = one.signs[j];
      continue;
    }

    // Row j = q_j P(q), P = a0 + (monomials even in every variable, same sign as a0).
    double a0 = 0.0;
    bool factored = true;
    for (const auto& [e, c] : row) {
      if (e[j] != 1) factored = false;
      bool pure = true;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        if (e[i] % 2 != 0) factored = false;
        if (e[i] != 0) pure = false;
      }
      if (pure) a0 += c;
    }
    if (!factored || a0 == 0.0) return std::nullopt;
    for (const auto& [e, c] : row) {
      bool pure = true;
      for (int i = 0; i < n; ++i)
        if (i != j && e[i] != 0) pure = false;
      if (!pure && sgn(c) != sgn(a0)) return std::nullopt;
    }
    out.r = std::max(out.r, std::abs(fbar[j]) / std::abs(a0));
    out.signs[j] = sgn(a0);
    reasons.push_back("row " + std::to_string(j) + " factors as q_j P(q) with |P| >= " + fmt(std::abs(a0)));
  }
  out.n_positive = static_cast<int>(std::count(out.signs.begin(), out.signs.end(), 1));
  out.detail = "closed-form sign argument per row";
  for (const auto& s : reasons) out.detail += "; " + s;
  return out;
}

SignCheck check_sign_condition(const MechanicalSystem& sys, double r, const ScanOptions& scan) {
  require(r >= 0.0, "sign-condition radius must be nonnegative");
  if (auto free = free_chain_sign_failure(sys.nonlinearity(), r)) return *free;
  if (auto a = analytic_sign_condition(sys)) {
    if (a->verdict == Verdict::pass && a->r <= r * (1.0 + 1e-12) + 1e-300) {
      a->r = r;
      return *a;
    }
    if (a->verdict == Verdict::fail) {
      // Regenerate the witness beyond the requested radius.
      for (int j = 0; j < sys.dim(); ++j) {
        if (a->witness_a && (*a->witness_a)[j] != 0.0) {
          const double R = std::abs((*a->witness_a)[j]) + r;
          a->witness_a = unit(sys.dim(), j, R);
          a->witness_b = unit(sys.dim(), j, -R);
        }
      }
      a->r = r;
      return *a;
    }
  }

  const int n = sys.dim();
  const double R = scan.r_max > 0.0 ? scan.r_max : std::max(10.0 * r, 10.0);
  require(R > r, "scan box must extend beyond the radius");
  const Vec fbar = sys.forcing().mean();
  const auto& nl = sys.nonlinearity();

  std::vector<std::optional<Vec>> pos(n), neg(n), zero(n);
  auto visit = [&](const Vec& q, int only) {
    const Vec s = nl.value(q) - fbar;
    for (int j = 0; j < n; ++j) {
      if (only >= 0 && j != only) continue;
      if (!(std::abs(q[j]) > r)) continue;
      const double g = q[j] * s[j];
      if (g > 0.0) {
        if (!pos[j]) pos[j] = q;
      } else if (g < 0.0) {
        if (!neg[j]) neg[j] = q;
      } else if (!zero[j]) {
        zero[j] = q;
      }
    }
  };

  SignCheck out;
  if (n <= 4) {
    for_each_grid_point(n, scan.grid, R, [&](const Vec& q) { visit(q, -1); });
    out.scan = "full grid, " + std::to_string(scan.grid) + " points per axis on [-" + fmt(R) + ", " + fmt(R) + "]^" +
               std::to_string(n);
  } else {
    std::mt19937_64 rng(scan.seed);
    std::uniform_real_distribution<double> box(-R, R), slab(r, R), coin(0.0, 1.0);
    Vec q(n);
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < scan.random_per_slab; ++s) {
        for (int i = 0; i < n; ++i) q[i] = box(rng);
        q[j] = (coin(rng) < 0.5 ? -1.0 : 1.0) * slab(rng);
        visit(q, j);
      }
    out.scan = "random sampling, " + std::to_string(scan.random_per_slab) + " points per slab, seed " +
               std::to_string(scan.seed) + ", box " + fmt(R);
  }

  out.r = r;
  out.mode = Mode::evidence;
  out.signs.assign(n, 0);
  for (int j = 0; j < n; ++j) {
    if (zero[j] || (pos[j] && neg[j])) {
      out.verdict = Verdict::fail;
      out.witness_a = zero[j] ? zero[j] : pos[j];
      out.witness_b = zero[j] ? zero[j] : neg[j];
      out.detail = "q_j (S_j - fbar_j) is not of one nonzero sign for DOF " + std::to_string(j) + " beyond r";
      return out;
    }
    out.signs[j] = pos[j] ? 1 : (neg[j] ? -1 : 0);
  }
  out.verdict = Verdict::evidence_only;
  out.n_positive = static_cast<int>(std::count(out.signs.begin(), out.signs.end(), 1));
  out.detail = "no sign violation among the sampled points";
  return out;
}

// ---------------------------------------------------------------------------
// C3*

namespace {

struct ChainBound {
  bool admissible = false;
  Mat h_low;
};

// Hardening springs: S'(d) = sum (i+1) a_i d^i >= a_0 > 0 when every odd power of S' vanishes
// and every even power is nonnegative. Absent springs contribute nothing.
ChainBound chain_lower_bound(const Nonlinearity& nl) {
  ChainBound out;
  const int n = nl.dim();
  std::vector<double> k0;
  for (const auto& s : nl.springs()) {
    if (s.absent()) {
      k0.push_back(0.0);
      continue;
    }
    const auto& a = s.coeffs;
    if (a.empty() || a[0] <= 0.0) return out;
    for (std::size_t i = 1; i < a.size(); ++i) {
      if (i % 2 == 1 && a[i] != 0.0) return out;
      if (i % 2 == 0 && a[i] < 0.0) return out;
    }
    k0.push_back(a[0]);
  }
  out.admissible = true;
  out.h_low = Mat::Zero(n, n);
  for (int j = 0; j <= n; ++j) {
    if (j >= 1) out.h_low(j - 1, j - 1) += k0[j];
    if (j < n) out.h_low(j, j) += k0[j];
    if (j >= 1 && j < n) {
      out.h_low(j - 1, j) -= k0[j];
      out.h_low(j, j - 1) -= k0[j];
    }
  }
  return out;
}

// Positive definiteness of the chain Hessian built spring by spring from one wall:
// H^1 = k_1, H^{j+1} = [H^j 0; 0 0] + k_{j+1} d d^T, closing with the far wall spring.
bool chain_recursive_definite(const std::vector<double>& k) {
  const int n = static_cast<int>(k.size()) - 1;
  for (int side = 0; side < 2; ++side) {
    std::vector<double> kk = k;
    if (side == 1) std::reverse(kk.begin(), kk.end());
    if (!(kk[0] > 0.0)) continue;
    bool ok = true;
    Eigen::MatrixXd H = Eigen::MatrixXd::Constant(1, 1, kk[0]);
    for (int j = 1; j < n && ok; ++j) {
      Eigen::MatrixXd next = Eigen::MatrixXd::Zero(j + 1, j + 1);
      next.topLeftCorner(j, j) = H;
      next(j - 1, j - 1) += kk[j];
      next(j, j) += kk[j];
      next(j - 1, j) -= kk[j];
      next(j, j - 1) -= kk[j];
      H = next;
      ok = Eigen::LLT<Eigen::MatrixXd>(H).info() == Eigen::Success;
    }
    if (!ok) continue;
    H(n - 1, n - 1) += kk[n];
    if (Eigen::LLT<Eigen::MatrixXd>(H).info() == Eigen::Success) return true;
  }
  return false;
}

HessianCheck hessian_1d(const MechanicalSystem& sys, double r_star) {
  HessianCheck out;
  out.mode = Mode::analytic;
  out.r_star = r_star;
  const auto p = poly::trim(poly::derivative(univariate(sys.nonlinearity())));
  const int deg = static_cast<int>(p.size()) - 1;
  if (deg < 0) {
    out.verdict = Verdict::fail;
    out.witness = unit(1, 0, r_star + 1.0);
    out.detail = "Hessian vanishes identically";
    return out;
  }
  if (deg % 2 == 1) {
    out.verdict = Verdict::fail;
    const double R = std::max(max_abs_root(p), r_star) + 1.0;
    out.witness = unit(1, 0, sgn(poly::evaluate(p, R)) > 0 ? -R : R);
    out.detail = "odd-degree Hessian polynomial changes sign between +q and -q";
    return out;
  }
  const double root = max_abs_root(p);
  if (root > r_star * (1.0 + 1e-12) + 1e-15) {
    out.verdict = Verdict::fail;
    double worst = 0.0;
    for (double x : poly::real_roots(p))
      if (std::abs(x) > std::abs(worst)) worst = x;
    out.witness = unit(1, 0, worst);
    out.detail = "Hessian vanishes at |q| = " + fmt(root) + " > r*";
    return out;
  }
  out.verdict = Verdict::pass;
  out.sign = sgn(p.back());
  out.cv_radius = r_star;
  out.cv = inf_abs_outside(p, r_star);
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  if (out.cv <= 1e-12 * scale) {
    out.cv_radius = r_star > 0.0 ? 2.0 * r_star : 1.0;
    out.cv = inf_abs_outside(p, out.cv_radius);
    out.detail = "Hessian polynomial definite for |q| > r*, degenerate on |q| = r*; C_v taken on |q| >= " +
                 fmt(out.cv_radius);
  } else {
    out.detail = "Hessian polynomial has no real root beyond r*";
  }
  return out;
}

}  // namespace

std::optional<HessianCheck> analytic_hessian_definiteness(const MechanicalSystem& sys) {
  const auto& nl = sys.nonlinearity();
  if (is_polynomial_1d(sys)) {
    const auto p = poly::trim(poly::derivative(univariate(nl)));
    double r0 = 0.0;
    if (p.size() >= 2 && (p.size() - 1) % 2 == 0) r0 = max_abs_root(p);
    return hessian_1d(sys, r0);
  }
  if (all_linear(nl) || nl.kind() == Nonlinearity::Kind::chain || nl.kind() == Nonlinearity::Kind::pendulum)
    return check_hessian_definiteness(sys, 0.0);
  return std::nullopt;
}

HessianCheck check_hessian_definiteness(const MechanicalSystem& sys, double r_star, const ScanOptions& scan) {
  require(r_star >= 0.0, "r* must be nonnegative");
  const auto& nl = sys.nonlinearity();
  const int n = sys.dim();
  HessianCheck out;
  out.r_star = r_star;
  out.cv_radius = r_star;
  if (!potential_available(nl)) {
    out.verdict = Verdict::not_applicable;
    out.detail = "forces do not derive from a potential, so no Hessian exists";
    return out;
  }

  if (is_polynomial_1d(sys)) return hessian_1d(sys, r_star);

  if (all_linear(nl)) {
    out.mode = Mode::analytic;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(linear_stiffness(nl)), Eigen::EigenvaluesOnly);
    const Vec ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() > tol || ev.maxCoeff() < -tol) {
      out.verdict = Verdict::pass;
      out.sign = ev.minCoeff() > 0.0 ? 1 : -1;
      out.cv = ev.cwiseAbs().minCoeff();
      out.detail = "constant stiffness matrix is definite";
    } else {
      out.verdict = Verdict::fail;
      out.witness = Vec::Constant(n, (r_star + 1.0) / std::sqrt(static_cast<double>(n)));
      out.detail = "constant stiffness matrix is indefinite or singular (eigenvalues " + fmt(ev.minCoeff()) + ", " +
                   fmt(ev.maxCoeff()) + ")";
    }
    return out;
  }

  if (nl.kind() == Nonlinearity::Kind::pendulum) {
    out.mode = Mode::analytic;
    out.verdict = Verdict::fail;
    out.witness = unit(1, 0, (std::floor(r_star / kPi) + 0.5) * kPi + kPi);
    out.detail = "c_p cos(q) vanishes at every odd multiple of pi/2";
    return out;
  }

  if (nl.kind() == Nonlinearity::Kind::chain) {
    const auto bound = chain_lower_bound(nl);
    if (bound.admissible) {
      out.mode = Mode::analytic;
      std::vector<double> k0;
      for (int j = 0; j <= n; ++j) {
        const auto& s = nl.springs()[j];
        k0.push_back(s.absent() ? 0.0 : s.coeffs[0]);
      }
      if (chain_recursive_definite(k0)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(bound.h_low), Eigen::EigenvaluesOnly);
        out.verdict = Verdict::pass;
        out.sign = 1;
        out.cv = es.eigenvalues().minCoeff();
        out.detail = "hardening springs: H(q) >= H_lin, definite by the spring-by-spring recursion";
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(bound.h_low));
        Vec v = es.eigenvectors().col(0);
        out.verdict = Verdict::fail;
        out.witness = (r_star + 1.0) * v / v.norm();
        out.detail = "chain has a rigid-body mode (no wall connection): Hessian singular along it";
      }
      return out;
    }
  }

  // Scan.
  const double R = scan.r_max > 0.0 ? scan.r_max : std::max(10.0 * r_star, 10.0);
  double min_abs = std::numeric_limits<double>::infinity();
  bool saw_pos = false, saw_neg = false;
  std::optional<Vec> witness;
  int count = 0;
  auto visit = [&](const Vec& q) {
    const double norm = q.norm();
    if (norm < r_star || norm > R) return;
    ++count;
    const Mat J = nl.jacobian(q);
    const Eigen::MatrixXd H = 0.5 * (J + J.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (lo > tol) {
      saw_pos = true;
    } else if (hi < -tol) {
      saw_neg = true;
    } else if (!witness) {
      witness = q;
    }
    min_abs = std::min(min_abs, es.eigenvalues().cwiseAbs().minCoeff());
  };
  if (n <= 4) {
    for_each_grid_point(n, scan.grid, R, visit);
    out.scan = "full grid, " + std::to_string(scan.grid) + " points per axis on [-" + fmt(R) + ", " + fmt(R) + "]^" +
               std::to_string(n) + " restricted to r* <= |q| <= " + fmt(R);
  } else {
    std::mt19937_64 rng(scan.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> rad(r_star, R);
    Vec q(n);
    for (int s = 0; s < scan.random_per_slab; ++s) {
      for (int i = 0; i < n; ++i) q[i] = gauss(rng);
      q *= rad(rng) / q.norm();
      visit(q);
    }
    out.scan = "random sampling of " + std::to_string(scan.random_per_slab) + " points in the shell, seed " +
               std::to_string(scan.seed);
  }
  out.mode = Mode::evidence;
  if (witness || (saw_pos && saw_neg) || count == 0) {
    out.verdict = Verdict::fail;
    out.witness = witness;
    out.detail = count == 0 ? "no sample points in the shell" : "Hessian not uniformly definite over the samples";
    return out;
  }
  out.verdict = Verdict::evidence_only;
  out.sign = saw_pos ? 1 : -1;
  out.cv = min_abs;
  out.detail = "Hessian definite at all " + std::to_string(count) + " sampled points";
  return out;
}

BallExtrema ball_extrema(const MechanicalSystem& sys, double radius, const ScanOptions& scan) {
  const int n = sys.dim();
  const auto& nl = sys.nonlinearity();
  BallExtrema out;
  if (radius == 0.0) {
    out.s_min = out.s_max = nl.value(Vec::Zero(n));
    out.exact = true;
    return out;
  }
  if (is_polynomial_1d(sys)) {
    const auto s = univariate(nl);
    std::vector<double> xs{-radius, radius};
    for (double x : poly::real_roots(poly::derivative(s)))
      if (std::abs(x) < radius) xs.push_back(x);
    out.s_min = out.s_max = Vec::Constant(1, poly::evaluate(s, xs[0]));
    for (double x : xs) {
      const double v = poly::evaluate(s, x);
      out.s_min[0] = std::min(out.s_min[0], v);
      out.s_max[0] = std::max(out.s_max[0], v);
    }
    out.exact = true;
    return out;
  }
  out.s_min = Vec::Constant(n, std::numeric_limits<double>::infinity());
  out.s_max = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  auto visit = [&](const Vec& q) {
    if (q.norm() > radius) return;
    const Vec s = nl.value(q);
    out.s_min = out.s_min.cwiseMin(s);
    out.s_max = out.s_max.cwiseMax(s);
  };
  if (n <= 4) {
    for_each_grid_point(n, scan.grid, radius, visit);
  } else {
    std::mt19937_64 rng(scan.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec q(n);
    visit(Vec::Zero(n));
    for (int s = 0; s < scan.random_per_slab; ++s) {
      for (int i = 0; i < n; ++i) q[i] = gauss(rng);
      q *= radius * std::pow(u(rng), 1.0 / n) / q.norm();
      visit(q);
    }
  }
  return out;
}

double radius_from_hessian(double r_star, double cv, const Vec& s_min, const Vec& s_max, const Vec& fbar) {
  require(cv > 0.0, "C_v must be positive");
  require(s_min.size() == fbar.size() && s_max.size() == fbar.size(), "extrema and mean forcing sizes differ");
  double r = r_star;
  for (Eigen::Index j = 0; j < fbar.size(); ++j) {
    const double extra = std::max({0.0, (fbar[j] - s_min[j]) / cv, (s_max[j] - fbar[j]) / cv});
    r = std::max(r, r_star + extra);
  }
  return r;
}

double amplitude_bound(const MechanicalSystem& sys, double r, double c0) {
  require(c0 > 0.0, "amplitude bound needs C0 > 0");
  require(r >= 0.0, "radius must be nonnegative");
  const double T = sys.forcing().period();
  return std::sqrt(static_cast<double>(sys.dim())) * (r + std::sqrt(T) * sys.forcing().l2_norm() / c0);
}

double rm_amplitude_bound(const MechanicalSystem& sys, double r, double c0) {
  return amplitude_bound(sys, r, c0) + sys.forcing().period() * sys.forcing().l2_norm() / c0;
}

// ---------------------------------------------------------------------------
// Nonexistence

std::optional<Nonexistence> check_global_extremum_nonexistence(const MechanicalSystem& sys) {
  const auto& nl = sys.nonlinearity();
  if (nl.kind() != Nonlinearity::Kind::pendulum) return std::nullopt;
  const double bound = std::abs(nl.pendulum_cp());
  const double fbar = sys.forcing().mean()[0];
  if (std::abs(fbar) <= bound) return std::nullopt;
  Nonexistence out{NonexistenceReason::global_extremum, bound, fbar, ""};
  out.detail = "S(q) = c_p sin q stays within [-" + fmt(bound) + ", " + fmt(bound) +
               "], but averaging the equation forces mean(S(q)) = fbar = " + fmt(fbar);
  return out;
}

double quadratic_forcing_threshold(double omega2, double c, double kappa, double omega) {
  require(kappa != 0.0, "quadratic threshold needs kappa != 0");
  const double k = std::abs(kappa);
  const double mod = std::abs(std::complex<double>(omega2 - omega * omega, c * omega));
  return omega2 / (2.0 * k) * (mod + 2.0 * omega2) + k * omega2 * omega2 / (4.0 * kappa * kappa);
}

std::optional<Nonexistence> check_quadratic_nonexistence(const MechanicalSystem& sys) {
  if (!is_polynomial_1d(sys)) return std::nullopt;
  auto s = poly::trim(univariate(sys.nonlinearity()));
  if (s.size() != 3 || s[0] != 0.0 || s[2] == 0.0) return std::nullopt;
  const double m = sys.mass()(0, 0);
  const double omega2 = s[1] / m;
  if (!(omega2 > 0.0)) return std::nullopt;
  const auto& fc = sys.forcing().coefficients();
  if (fc.c0[0] != 0.0 || fc.order() < 1) return std::nullopt;
  for (int k = 2; k <= fc.order(); ++k)
    if (fc.sin_coef(k - 1, 0) != 0.0 || fc.cos_coef(k - 1, 0) != 0.0) return std::nullopt;
  const double f = std::hypot(fc.sin_coef(0, 0), fc.cos_coef(0, 0)) / m;
  const double thr = quadratic_forcing_threshold(omega2, sys.damping()(0, 0) / m, s[2] / m, sys.forcing().omega());
  if (!(f > thr)) return std::nullopt;
  Nonexistence out{NonexistenceReason::quadratic_threshold, thr, f, ""};
  out.detail = "single-harmonic forcing amplitude " + fmt(f) + " exceeds the quadratic-oscillator threshold " + fmt(thr);
  return out;
}

CounterexampleThreshold counterexample1_threshold(double k1, double k2, double c1, double omega, double kappa,
                                                  double c2) {
  require(kappa > 0.0, "threshold needs kappa > 0");
  const double d = c1 + 2.0 * c2;
  require(d > 0.0 && omega > 0.0, "threshold needs positive damping and frequency");
  const double w = k1 + 2.0 * k2;
  // Tail after m: (1/(d^2 W^2)) sum_{j>m} j^-6 <= 1/(5 m^5 d^2 W^2).
  int m = 1;
  while (1.0 / (5.0 * std::pow(static_cast<double>(m), 5) * d * d * omega * omega) >= 1e-12) m += 2;
  const int terms = (m + 1) / 2;
  double sum = 0.0, comp = 0.0;
  for (int k = terms - 1; k >= 0; --k) {
    const double j = 2.0 * k + 1.0;
    const double re = w - j * j * omega * omega;
    const double im = j * d * omega;
    const double term = 1.0 / (j * j * j * j * (re * re + im * im));
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  CounterexampleThreshold out;
  out.c_inf = sum;
  out.terms = terms;
  out.f_threshold = std::sqrt(k1 * k1 * kPi * kPi * kPi * kPi / (512.0 * kappa * kappa * sum));
  return out;
}

std::optional<Nonexistence> check_counterexample1_nonexistence(const MechanicalSystem& sys) {
  if (sys.dim() != 2 || sys.nonlinearity().kind() != Nonlinearity::Kind::polynomial) return std::nullopt;
  const Mat& M = sys.mass();
  const Mat& C = sys.damping();
  if (M(0, 1) != 0.0 || M(1, 0) != 0.0 || M(0, 0) != M(1, 1)) return std::nullopt;
  if (C(0, 0) != C(1, 1) || C(0, 1) != C(1, 0)) return std::nullopt;
  const double m = M(0, 0);
  const double c2 = -C(0, 1);
  const double c1 = C(0, 0) - c2;

  auto field = poly::canonical(2, sys.nonlinearity().terms());
  auto coef = [&](int dof, std::vector<int> e) {
    auto it = field.find({dof, e});
    return it == field.end() ? 0.0 : it->second;
  };
  const double a = coef(0, {1, 0}), b = coef(0, {0, 1});
  const double kappa = coef(0, {2, 0});
  if (kappa == 0.0 || coef(0, {0, 2}) != kappa || coef(1, {2, 0}) != kappa || coef(1, {0, 2}) != kappa)
    return std::nullopt;
  if (coef(1, {1, 0}) != b || coef(1, {0, 1}) != a) return std::nullopt;
  int nonzero = 0;
  for (const auto& [k, v] : field) nonzero += v != 0.0;
  if (nonzero != 8 - (a == 0.0) * 2 - (b == 0.0) * 2) return std::nullopt;
  const double k2 = -b, k1 = a + b;

  const auto& fc = sys.forcing().coefficients();
  if (fc.c0[0] + fc.c0[1] != 0.0) return std::nullopt;
  for (int k = 0; k < fc.order(); ++k)
    if (fc.sin_coef(k, 0) != -fc.sin_coef(k, 1) || fc.cos_coef(k, 0) != -fc.cos_coef(k, 1)) return std::nullopt;

  // x2 = (q1 - q2)/2 obeys m x2'' + (c1 + 2 c2) x2' + (k1 + 2 k2) x2 = f1 exactly.
  const double d = c1 + 2.0 * c2, w = k1 + 2.0 * k2, W = sys.forcing().omega();
  double mean_sq = 0.0, osc_sq = 0.0;
  if (fc.c0[0] != 0.0) {
    if (w == 0.0) return std::nullopt;
    mean_sq = std::pow(0.5 * fc.c0[0] / w, 2);
  }
  for (int k = 1; k <= fc.order(); ++k) {
    const std::complex<double> F(fc.cos_coef(k - 1, 0), -fc.sin_coef(k - 1, 0));
    if (F == 0.0) continue;
    const std::complex<double> D(w - m * k * k * W * W, k * W * d);
    if (std::abs(D) == 0.0) return std::nullopt;
    osc_sq += 0.5 * std::norm(F / D);
  }
  const double x2_sq = mean_sq + osc_sq;
  const double critical = k1 * k1 / (16.0 * kappa * kappa);
  const bool nonconstant = osc_sq > 0.0;
  if (!(x2_sq > critical || (nonconstant && x2_sq >= critical))) return std::nullopt;

  Nonexistence out{NonexistenceReason::counterexample1_threshold, critical, x2_sq, ""};
  std::ostringstream os;
  os << "mean of x2^2 = " << fmt(x2_sq) << " reaches k1^2/(16 kappa^2) = " << fmt(critical)
     << ", so the averaged x1 equation has no solution";
  if (sys.forcing().kind() == ForcingSignal::Kind::triangular && mean_sq == 0.0) {
    const double fm = std::abs(sys.forcing().triangular_wave().amplitude * sys.forcing().scale() *
                               sys.forcing().triangular_wave().directions[0]);
    out.value = fm;
    out.threshold = fm * std::sqrt(critical / x2_sq);
    os << "; triangular amplitude " << fmt(fm) << " >= threshold " << fmt(out.threshold);
  }
  out.detail = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// Composition

CertificateReport certify(const MechanicalSystem& sys, const CertifyOptions& opts) {
  CertificateReport rep;
  rep.period = sys.forcing().period();
  rep.forcing_l2 = sys.forcing().l2_norm();
  rep.mean_forcing = sys.forcing().mean();
  const Vec fbar = rep.mean_forcing;

  rep.c1 = check_damping(sys.damping());
  if (rep.c1.sign < 0) rep.notes.push_back("damping is negative definite; the theorem still applies");
  rep.c2 = check_potential(sys.nonlinearity(), opts.potential);

  // C3*
  std::optional<double> r_hessian;
  if (auto h = analytic_hessian_definiteness(sys)) {
    rep.c3star = *h;
  } else {
    rep.c3star = check_hessian_definiteness(sys, 0.0, opts.scan);
    if (rep.c3star.verdict == Verdict::fail) {
      for (double rs : {1.0, 2.0, 5.0, 10.0}) {
        auto h2 = check_hessian_definiteness(sys, rs, opts.scan);
        if (h2.verdict != Verdict::fail) {
          rep.c3star = h2;
          break;
        }
      }
    }
  }
  const bool hess_ok = rep.c3star.verdict == Verdict::pass || rep.c3star.verdict == Verdict::evidence_only;
  bool extrema_exact = false;
  if (hess_ok && rep.c3star.cv > 0.0) {
    const auto ext = ball_extrema(sys, rep.c3star.cv_radius, opts.scan);
    extrema_exact = ext.exact;
    r_hessian = radius_from_hessian(rep.c3star.cv_radius, rep.c3star.cv, ext.s_min, ext.s_max, fbar);
  }

  // C3
  auto analytic = analytic_sign_condition(sys);
  if (analytic && analytic->verdict == Verdict::pass) {
    rep.c3 = *analytic;
    if (r_hessian && rep.c3star.verdict == Verdict::pass && extrema_exact && *r_hessian < rep.c3.r) {
      rep.c3.r = *r_hessian;
      rep.c3.detail += "; radius tightened by the Hessian estimate";
    }
  } else if (r_hessian) {
    rep.c3.verdict = rep.c3star.verdict == Verdict::pass && extrema_exact ? Verdict::pass : Verdict::evidence_only;
    rep.c3.mode = rep.c3.verdict == Verdict::pass ? Mode::analytic : Mode::evidence;
    rep.c3.r = *r_hessian;
    rep.c3.signs.assign(sys.dim(), rep.c3star.sign);
    rep.c3.n_positive = rep.c3star.sign > 0 ? sys.dim() : 0;
    rep.c3.detail = "radius from the Hessian estimate with r* = " + fmt(rep.c3star.cv_radius) +
                    ", C_v = " + fmt(rep.c3star.cv);
  } else if (analytic) {
    rep.c3 = *analytic;
  } else {
    for (double r : {0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
      rep.c3 = check_sign_condition(sys, r, opts.scan);
      if (rep.c3.verdict != Verdict::fail) break;
    }
  }
  rep.r = rep.c3.r;

  if (rep.c1.verdict == Verdict::pass && rep.c3.verdict != Verdict::fail) {
    rep.amplitude_bound = amplitude_bound(sys, rep.r, rep.c1.c0);
    rep.rm_bound = rm_amplitude_bound(sys, rep.r, rep.c1.c0);
  }

  for (auto detector : {check_counterexample1_nonexistence, check_quadratic_nonexistence,
                        check_global_extremum_nonexistence}) {
    if (auto ne = detector(sys)) {
      if (!rep.nonexistence) {
        rep.nonexistence = ne;
      } else {
        rep.notes.push_back(std::string("additional nonexistence argument: ") + to_string(ne->reason));
      }
    }
  }

  const bool c2_ok = rep.c2.verdict == Verdict::declared || (rep.c2.verdict == Verdict::pass && rep.c2.mode == Mode::analytic);
  const bool c3_ok = rep.c3.verdict == Verdict::pass || rep.c3star.verdict == Verdict::pass;
  if (rep.nonexistence) {
    rep.overall = Overall::no_periodic_orbit;
    if (rep.amplitude_bound) {
      rep.notes.push_back("amplitude bound withheld: nonexistence proven");
      rep.amplitude_bound.reset();
      rep.rm_bound.reset();
    }
  } else if (rep.c1.verdict == Verdict::pass && c2_ok && c3_ok) {
    rep.overall = Overall::exists;
  } else {
    rep.overall = Overall::inconclusive;
    const bool c2_any = c2_ok || rep.c2.verdict == Verdict::pass;
    const bool c3_any = rep.c3.verdict != Verdict::fail || hess_ok;
    if (rep.c1.verdict == Verdict::pass && c2_any && c3_any)
      rep.notes.push_back("hypotheses hold on sampled evidence only; a finite scan cannot prove them");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Json optional_vec(const std::optional<Vec>& v) { return v ? vector_to_json(*v) : Json(nullptr); }

}  // namespace

Json report_to_json(const CertificateReport& r) {
  Json j;
  j["overall"] = to_string(r.overall);
  j["c1"] = {{"verdict", to_string(r.c1.verdict)},
             {"mode", "analytic"},
             {"C0", r.c1.c0},
             {"sign", r.c1.sign > 0 ? "positive-definite" : (r.c1.sign < 0 ? "negative-definite" : "indefinite")},
             {"eigenvalues", vector_to_json(r.c1.eigenvalues)},
             {"detail", r.c1.detail}};
  j["c2"] = {{"verdict", to_string(r.c2.verdict)},
             {"mode", to_string(r.c2.mode)},
             {"max_asymmetry", r.c2.max_asymmetry},
             {"witness", optional_vec(r.c2.witness)},
             {"detail", r.c2.detail}};
  Json signs = Json::array();
  for (int s : r.c3.signs) signs.push_back(s > 0 ? "+" : (s < 0 ? "-" : "0"));
  j["c3"] = {{"verdict", to_string(r.c3.verdict)},
             {"mode", to_string(r.c3.mode)},
             {"r", r.c3.r},
             {"sign_pattern", signs},
             {"n", r.c3.n_positive},
             {"witness_a", optional_vec(r.c3.witness_a)},
             {"witness_b", optional_vec(r.c3.witness_b)},
             {"scan", r.c3.scan},
             {"detail", r.c3.detail}};
  j["c3star"] = {{"verdict", to_string(r.c3star.verdict)},
                 {"mode", to_string(r.c3star.mode)},
                 {"r_star", r.c3star.r_star},
                 {"C_v", r.c3star.cv},
                 {"cv_radius", r.c3star.cv_radius},
                 {"sign", r.c3star.sign},
                 {"witness", optional_vec(r.c3star.witness)},
                 {"scan", r.c3star.scan},
                 {"detail", r.c3star.detail}};
  j["r"] = r.r;
  j["period"] = r.period;
  j["C_f"] = r.forcing_l2;
  j["mean_forcing"] = vector_to_json(r.mean_forcing);
  j["amplitude_bound"] = r.amplitude_bound ? Json(*r.amplitude_bound) : Json(nullptr);
  j["rm_bound"] = r.rm_bound ? Json(*r.rm_bound) : Json(nullptr);
  if (r.nonexistence) {
    j["nonexistence"] = {{"reason", to_string(r.nonexistence->reason)},
                         {"threshold", r.nonexistence->threshold},
                         {"value", r.nonexistence->value},
                         {"detail", r.nonexistence->detail}};
  } else {
    j["nonexistence"] = nullptr;
  }
  j["notes"] = r.notes;
  return j;
}

}  // namespace perorbit
