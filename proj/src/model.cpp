#include "perorbit/model.hpp"

#include "perorbit/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace perorbit {

// ---------------------------------------------------------------------------
// ForcingSignal

ForcingSignal ForcingSignal::fourier(double period, FourierCoefficients coeffs) {
  require(period > 0.0 && std::isfinite(period), "forcing period must be positive");
  require(coeffs.sin_coef.rows() == coeffs.cos_coef.rows(), "sine and cosine tables differ in order");
  require(coeffs.sin_coef.cols() == coeffs.c0.size() && coeffs.cos_coef.cols() == coeffs.c0.size(),
          "forcing coefficient tables do not match the DOF count");
  require(coeffs.c0.size() > 0, "forcing needs at least one component");
  ForcingSignal f;
  f.kind_ = Kind::fourier;
  f.period_ = period;
  f.coeffs_ = std::move(coeffs);
  return f;
}

ForcingSignal ForcingSignal::constant(double period, const Vec& value) {
  FourierCoefficients c;
  c.c0 = 2.0 * value;
  c.sin_coef = Mat::Zero(0, value.size());
  c.cos_coef = Mat::Zero(0, value.size());
  return fourier(period, std::move(c));
}

ForcingSignal ForcingSignal::harmonic(double period, const Vec& amp_sin, const Vec& amp_cos) {
  require(amp_sin.size() == amp_cos.size(), "harmonic amplitude vectors differ in length");
  FourierCoefficients c;
  c.c0 = Vec::Zero(amp_sin.size());
  c.sin_coef = amp_sin.transpose();
  c.cos_coef = amp_cos.transpose();
  return fourier(period, std::move(c));
}

ForcingSignal ForcingSignal::triangular(double period, double amplitude, const Vec& directions, int terms) {
  require(period > 0.0, "forcing period must be positive");
  require(terms >= 1, "triangular wave needs at least one term");
  require(directions.size() > 0, "triangular wave needs a direction vector");
  ForcingSignal f;
  f.kind_ = Kind::triangular;
  f.period_ = period;
  f.tri_ = {amplitude, directions, terms};
  f.rebuild();
  return f;
}

ForcingSignal ForcingSignal::fejer(double period, int blocks, const Vec& directions, double op_m, double op_c,
                                   double op_k) {
  require(period > 0.0, "forcing period must be positive");
  require(blocks >= 1 && blocks <= 2, "Fejer forcing supports 1 or 2 blocks");
  require(directions.size() > 0, "Fejer forcing needs a direction vector");
  ForcingSignal f;
  f.kind_ = Kind::fejer;
  f.period_ = period;
  f.fej_ = {blocks, directions, op_m, op_c, op_k};
  f.rebuild();
  return f;
}

void ForcingSignal::rebuild() {
  const double w = omega();
  if (kind_ == Kind::triangular) {
    const auto n = tri_.directions.size();
    const int order = 2 * tri_.terms - 1;
    coeffs_.c0 = Vec::Zero(n);
    coeffs_.sin_coef = Mat::Zero(order, n);
    coeffs_.cos_coef = Mat::Zero(order, n);
    for (int k = 0; k < tri_.terms; ++k) {
      const double m = 2.0 * k + 1.0;
      const double a = tri_.amplitude * 8.0 / (kPi * kPi) * ((k % 2 == 0) ? 1.0 : -1.0) / (m * m);
      coeffs_.sin_coef.row(2 * k) = scale_ * a * tri_.directions.transpose();
    }
  } else if (kind_ == Kind::fejer) {
    const auto a = fejer_cosine_coefficients(fej_.blocks);
    const auto n = fej_.directions.size();
    const int order = static_cast<int>(a.size()) - 1;
    coeffs_.c0 = Vec::Zero(n);
    coeffs_.sin_coef = Mat::Zero(order, n);
    coeffs_.cos_coef = Mat::Zero(order, n);
    for (int m = 1; m <= order; ++m) {
      const double mw = m * w;
      const double cc = a[m] * (fej_.op_k - fej_.op_m * mw * mw);
      const double ss = -fej_.op_c * mw * a[m];
      coeffs_.cos_coef.row(m - 1) = scale_ * cc * fej_.directions.transpose();
      coeffs_.sin_coef.row(m - 1) = scale_ * ss * fej_.directions.transpose();
    }
  }
}

ForcingSignal ForcingSignal::with_period(double period) const {
  require(period > 0.0, "forcing period must be positive");
  ForcingSignal f = *this;
  f.period_ = period;
  if (kind_ == Kind::fejer) f.rebuild();
  return f;
}

ForcingSignal ForcingSignal::scaled(double factor) const {
  ForcingSignal f = *this;
  f.scale_ *= factor;
  if (kind_ == Kind::fourier) {
    f.coeffs_.c0 *= factor;
    f.coeffs_.sin_coef *= factor;
    f.coeffs_.cos_coef *= factor;
  } else {
    f.rebuild();
  }
  return f;
}

Vec ForcingSignal::eval(double t) const {
  const double tr = std::fmod(t, period_);
  const double theta = omega() * tr;
  Vec f = 0.5 * coeffs_.c0;
  const std::complex<double> step(std::cos(theta), std::sin(theta));
  std::complex<double> z = step;
  for (int k = 1; k <= coeffs_.order(); ++k) {
    if (k % 64 == 0) z = std::polar(1.0, k * theta);
    f += z.imag() * coeffs_.sin_coef.row(k - 1).transpose() + z.real() * coeffs_.cos_coef.row(k - 1).transpose();
    z *= step;
  }
  return f;
}

Vec ForcingSignal::mean() const { return 0.5 * coeffs_.c0; }

double ForcingSignal::l2_norm() const {
  const double mean_sq = (0.5 * coeffs_.c0).squaredNorm();
  const double osc_sq = 0.5 * (coeffs_.sin_coef.squaredNorm() + coeffs_.cos_coef.squaredNorm());
  return std::sqrt(period_ * (mean_sq + osc_sq));
}

std::vector<double> fejer_cosine_coefficients(int blocks) {
  require(blocks >= 1 && blocks <= 2, "Fejer sum supports 1 or 2 blocks");
  long top = 0;
  for (int k = 1; k <= blocks; ++k) top = std::max(top, (1L << (k * k * k + 1)) + (1L << (k * k * k)));
  std::vector<double> a(static_cast<std::size_t>(top) + 1, 0.0);
  for (int k = 1; k <= blocks; ++k) {
    const long p = 1L << (k * k * k + 1);
    const long q = 1L << (k * k * k);
    for (long l = 1; l <= q; ++l) {
      const double w = 1.0 / (static_cast<double>(k) * k * static_cast<double>(l));
      a[static_cast<std::size_t>(p - l)] += w;
      a[static_cast<std::size_t>(p + l)] -= w;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Spring laws

double SpringLaw::force(double d) const {
  double v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * d + *it;
  return v * d;
}

double SpringLaw::stiffness(double d) const {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * d + coeffs[i] * static_cast<double>(i + 1);
  return v;
}

double SpringLaw::energy(double d) const {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * d + coeffs[i] / static_cast<double>(i + 2);
  return v * d * d;
}

bool SpringLaw::absent() const {
  for (double c : coeffs)
    if (c != 0.0) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity Nonlinearity::polynomial(int dim, std::vector<PolyTerm> terms) {
  require(dim >= 1, "dimension must be positive");
  poly::canonical(dim, terms);  // validates indices
  Nonlinearity n;
  n.kind_ = Kind::polynomial;
  n.dim_ = dim;
  n.terms_ = std::move(terms);
  return n;
}

Nonlinearity Nonlinearity::polynomial(int dim, std::vector<PolyTerm> terms, std::vector<Monomial> potential) {
  Nonlinearity n = polynomial(dim, std::move(terms));
  const auto grad = poly::gradient(dim, poly::canonical(dim, potential));
  const auto field = poly::canonical(dim, n.terms_);
  double scale = 1.0;
  for (const auto& [k, c] : field) scale = std::max(scale, std::abs(c));
  require(poly::max_difference(grad, field) <= 1e-12 * scale,
          "declared potential does not reproduce the polynomial forces");
  n.potential_ = std::move(potential);
  n.declared_potential_ = true;
  return n;
}

Nonlinearity Nonlinearity::chain(std::vector<SpringLaw> springs) {
  require(springs.size() >= 2, "a chain needs N+1 >= 2 springs");
  Nonlinearity n;
  n.kind_ = Kind::chain;
  n.dim_ = static_cast<int>(springs.size()) - 1;
  n.springs_ = std::move(springs);
  return n;
}

Nonlinearity Nonlinearity::pendulum(double cp) {
  Nonlinearity n;
  n.kind_ = Kind::pendulum;
  n.dim_ = 1;
  n.cp_ = cp;
  return n;
}

Nonlinearity Nonlinearity::custom(int dim, ValueFn value, JacobianFn jacobian, PotentialFn potential) {
  require(dim >= 1, "dimension must be positive");
  require(static_cast<bool>(value), "custom nonlinearity needs a value callback");
  Nonlinearity n;
  n.kind_ = Kind::custom;
  n.dim_ = dim;
  n.value_fn_ = std::move(value);
  n.jacobian_fn_ = std::move(jacobian);
  n.potential_fn_ = std::move(potential);
  return n;
}

namespace {

// Chain displacement of spring j (0-based, j = 0..N): q_{j-1} - q_j with walls at zero.
double chain_delta(const Vec& q, int j) {
  const int n = static_cast<int>(q.size());
  const double left = j >= 1 ? q[j - 1] : 0.0;
  const double right = j < n ? q[j] : 0.0;
  return left - right;
}

}  // namespace

Vec Nonlinearity::value(const Vec& q) const {
  require(q.size() == dim_, "state dimension mismatch in nonlinearity evaluation");
  Vec s = Vec::Zero(dim_);
  switch (kind_) {
    case Kind::polynomial:
      for (const auto& t : terms_) s[t.dof] += poly::evaluate(t.mono, q);
      break;
    case Kind::chain:
      for (int j = 0; j <= dim_; ++j) {
        const double f = springs_[j].force(chain_delta(q, j));
        if (j >= 1) s[j - 1] += f;
        if (j < dim_) s[j] -= f;
      }
      break;
    case Kind::pendulum:
      s[0] = cp_ * std::sin(q[0]);
      break;
    case Kind::custom:
      value_fn_(q.data(), s.data());
      break;
  }
  return s;
}

Mat Nonlinearity::jacobian(const Vec& q) const {
  require(q.size() == dim_, "state dimension mismatch in Jacobian evaluation");
  Mat J = Mat::Zero(dim_, dim_);
  switch (kind_) {
    case Kind::polynomial:
      for (const auto& t : terms_) {
        const auto& e = t.mono.exponents;
        for (std::size_t i = 0; i < e.size(); ++i) {
          if (e[i] == 0) continue;
          Monomial d = t.mono;
          d.exponents[i] -= 1;
          d.coeff *= e[i];
          J(t.dof, static_cast<Eigen::Index>(i)) += poly::evaluate(d, q);
        }
      }
      break;
    case Kind::chain:
      for (int j = 0; j <= dim_; ++j) {
        const double k = springs_[j].stiffness(chain_delta(q, j));
        // d_j = e_{j-1} - e_j
        if (j >= 1) J(j - 1, j - 1) += k;
        if (j < dim_) J(j, j) += k;
        if (j >= 1 && j < dim_) {
          J(j - 1, j) -= k;
          J(j, j - 1) -= k;
        }
      }
      break;
    case Kind::pendulum:
      J(0, 0) = cp_ * std::cos(q[0]);
      break;
    case Kind::custom:
      if (jacobian_fn_) {
        jacobian_fn_(q.data(), J.data());
      } else {
        J = finite_difference_jacobian([this](const Vec& x) { return value(x); }, q);
      }
      break;
  }
  return J;
}

bool Nonlinearity::analytic_jacobian() const { return kind_ != Kind::custom || static_cast<bool>(jacobian_fn_); }

bool Nonlinearity::has_potential() const {
  switch (kind_) {
    case Kind::polynomial:
      return declared_potential_;
    case Kind::chain:
    case Kind::pendulum:
      return true;
    case Kind::custom:
      return static_cast<bool>(potential_fn_);
  }
  return false;
}

double Nonlinearity::potential(const Vec& q) const {
  require(has_potential(), "nonlinearity carries no potential");
  switch (kind_) {
    case Kind::polynomial: {
      double v = 0.0;
      for (const auto& m : potential_) v += poly::evaluate(m, q);
      return v;
    }
    case Kind::chain: {
      double v = 0.0;
      for (int j = 0; j <= dim_; ++j) v += springs_[j].energy(chain_delta(q, j));
      return v;
    }
    case Kind::pendulum:
      return cp_ * (1.0 - std::cos(q[0]));
    case Kind::custom:
      return potential_fn_(q.data());
  }
  return 0.0;
}

Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& q) {
  const auto n = q.size();
  Mat J(f(q).size(), n);
  Vec x = q;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(q[i]));
    x[i] = q[i] + h;
    const Vec fp = f(x);
    x[i] = q[i] - h;
    const Vec fm = f(x);
    x[i] = q[i];
    J.col(i) = (fp - fm) / (2.0 * h);
  }
  return J;
}

// ---------------------------------------------------------------------------
// MechanicalSystem

MechanicalSystem::MechanicalSystem(Mat mass, Mat damping, Nonlinearity nonlinearity, ForcingSignal forcing,
                                   std::string name)
    : mass_(std::move(mass)),
      damping_(std::move(damping)),
      nl_(std::move(nonlinearity)),
      forcing_(std::move(forcing)),
      name_(std::move(name)) {
  const auto n = mass_.rows();
  require(n >= 1 && mass_.cols() == n, "mass matrix must be square and nonempty");
  require(damping_.rows() == n && damping_.cols() == n, "damping matrix dimension mismatch");
  require(nl_.dim() == n, "nonlinearity dimension mismatch");
  require(forcing_.dim() == n, "forcing dimension mismatch");
  require(mass_.allFinite() && damping_.allFinite(), "matrices must be finite");
  const Eigen::MatrixXd sym = 0.5 * (mass_ + mass_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, "mass matrix must be positive definite");
}

MechanicalSystem MechanicalSystem::with_forcing(ForcingSignal forcing) const {
  return MechanicalSystem(mass_, damping_, nl_, std::move(forcing), name_);
}

MechanicalSystem MechanicalSystem::at_frequency(double omega) const {
  require(omega > 0.0, "frequency must be positive");
  return with_forcing(forcing_.with_period(2.0 * kPi / omega));
}

// ---------------------------------------------------------------------------
// Builders

namespace {

Mat diag(std::initializer_list<double> v) {
  Mat m = Mat::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    m(i, i) = x;
    ++i;
  }
  return m;
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<PolyTerm> linear_terms(const Mat& k) {
  std::vector<PolyTerm> terms;
  const int n = static_cast<int>(k.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (k(i, j) == 0.0) continue;
      std::vector<int> e(n, 0);
      e[j] = 1;
      terms.push_back({i, {e, k(i, j)}});
    }
  return terms;
}

}  // namespace

MechanicalSystem build_counterexample1(const Counterexample1Params& p) {
  Mat K(2, 2);
  K << p.k1 + p.k2, -p.k2, -p.k2, p.k1 + p.k2;
  Mat C(2, 2);
  C << p.c1 + p.c2, -p.c2, -p.c2, p.c1 + p.c2;
  auto terms = linear_terms(K);
  for (int dof = 0; dof < 2; ++dof) {
    terms.push_back({dof, {{2, 0}, p.kappa}});
    terms.push_back({dof, {{0, 2}, p.kappa}});
  }
  auto forcing = ForcingSignal::triangular(2.0 * kPi / p.omega, p.fm, vec({1.0, -1.0}), p.terms);
  return MechanicalSystem(diag({1.0, 1.0}), C, Nonlinearity::polynomial(2, std::move(terms)), std::move(forcing),
                          "counterexample1");
}

MechanicalSystem build_duffing(double c, double omega2, double kappa, double f, double omega) {
  std::vector<PolyTerm> terms{{0, {{1}, omega2}}, {0, {{3}, kappa}}};
  std::vector<Monomial> pot{{{2}, omega2 / 2.0}, {{4}, kappa / 4.0}};
  auto forcing = ForcingSignal::harmonic(2.0 * kPi / omega, vec({0.0}), vec({f}));
  return MechanicalSystem(diag({1.0}), diag({c}), Nonlinearity::polynomial(1, std::move(terms), std::move(pot)),
                          std::move(forcing), "duffing");
}

MechanicalSystem build_quadratic_oscillator(double c, double omega2, double kappa, double f, double omega) {
  std::vector<PolyTerm> terms{{0, {{1}, omega2}}, {0, {{2}, kappa}}};
  std::vector<Monomial> pot{{{2}, omega2 / 2.0}, {{3}, kappa / 3.0}};
  auto forcing = ForcingSignal::harmonic(2.0 * kPi / omega, vec({0.0}), vec({f}));
  return MechanicalSystem(diag({1.0}), diag({c}), Nonlinearity::polynomial(1, std::move(terms), std::move(pot)),
                          std::move(forcing), "quadratic");
}

MechanicalSystem build_pendulum(double c, double cp, const ForcingSignal& forcing) {
  return MechanicalSystem(diag({1.0}), diag({c}), Nonlinearity::pendulum(cp), forcing, "pendulum");
}

MechanicalSystem build_counter3(double c1, double c2, double omega1_sq, double omega2_sq, double kappa, double a,
                                double omega, const ForcingSignal& f1) {
  require(f1.dim() == 1, "counter3 expects a one-component f1 signal");
  std::vector<PolyTerm> terms{{0, {{1, 0}, omega1_sq}}, {0, {{1, 2}, kappa}}, {1, {{0, 1}, omega2_sq}}};
  const auto& src = f1.with_period(2.0 * kPi / omega).coefficients();
  const int order = std::max(1, src.order());
  FourierCoefficients fc;
  fc.c0 = vec({src.c0[0], 0.0});
  fc.sin_coef = Mat::Zero(order, 2);
  fc.cos_coef = Mat::Zero(order, 2);
  if (src.order() > 0) {
    fc.sin_coef.col(0) = src.sin_coef.col(0);
    fc.cos_coef.col(0) = src.cos_coef.col(0);
  }
  fc.sin_coef(0, 1) = a;
  return MechanicalSystem(diag({1.0, 1.0}), diag({c1, c2}), Nonlinearity::polynomial(2, std::move(terms)),
                          ForcingSignal::fourier(2.0 * kPi / omega, std::move(fc)), "counter3");
}

MechanicalSystem build_chain(const std::vector<double>& masses, const std::vector<double>& dampers,
                             const std::vector<SpringLaw>& springs, const ForcingSignal& forcing) {
  const auto n = static_cast<Eigen::Index>(masses.size());
  require(n >= 1, "chain needs at least one mass");
  require(dampers.size() == masses.size() + 1, "chain needs N+1 dampers");
  require(springs.size() == masses.size() + 1, "chain needs N+1 springs");
  Mat M = Mat::Zero(n, n);
  Mat C = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j <= n; ++j) {
    const double c = dampers[static_cast<std::size_t>(j)];
    if (j >= 1) C(j - 1, j - 1) += c;
    if (j < n) C(j, j) += c;
    if (j >= 1 && j < n) {
      C(j - 1, j) -= c;
      C(j, j - 1) -= c;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) M(j, j) = masses[static_cast<std::size_t>(j)];
  return MechanicalSystem(M, C, Nonlinearity::chain(springs), forcing, "chain");
}

MechanicalSystem build_linear(const Mat& mass, const Mat& damping, const Mat& stiffness, const ForcingSignal& forcing) {
  const int n = static_cast<int>(stiffness.rows());
  require(stiffness.cols() == n, "stiffness matrix must be square");
  auto terms = linear_terms(stiffness);
  Nonlinearity nl = Nonlinearity::polynomial(n, terms);
  if ((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff() == 0.0) {
    std::vector<Monomial> pot;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        if (stiffness(i, j) == 0.0) continue;
        std::vector<int> e(n, 0);
        e[i] += 1;
        e[j] += 1;
        pot.push_back({e, i == j ? stiffness(i, i) / 2.0 : stiffness(i, j)});
      }
    nl = Nonlinearity::polynomial(n, std::move(terms), std::move(pot));
  }
  return MechanicalSystem(mass, damping, std::move(nl), forcing, "linear");
}

MechanicalSystem build_linear_example() {
  FourierCoefficients fc;
  fc.c0 = Vec::Zero(1);
  fc.sin_coef = Mat::Zero(20, 1);
  fc.cos_coef = Mat::Zero(20, 1);
  fc.sin_coef(0, 0) = 399.0 / 400.0;
  fc.cos_coef(0, 0) = 0.01 / 400.0;
  fc.cos_coef(19, 0) = 0.2 / 400.0;
  auto sys = build_linear(diag({1.0}), diag({0.01}), diag({400.0}), ForcingSignal::fourier(2.0 * kPi, std::move(fc)));
  return MechanicalSystem(sys.mass(), sys.damping(), sys.nonlinearity(), sys.forcing(), "lin_sys");
}

std::vector<std::string> builtin_names() {
  return {"counterexample1", "duffing", "lin_sys", "quadratic", "pendulum", "counter3", "chain", "fejer_linear"};
}

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void check_keys(const std::map<std::string, double>& p, std::initializer_list<const char*> allowed,
                const std::string& name) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    require(ok, "unknown parameter '" + k + "' for built-in system '" + name + "'");
    require(std::isfinite(v), "parameter '" + k + "' must be finite");
  }
}

}  // namespace

MechanicalSystem build_builtin(const std::string& name, const std::map<std::string, double>& p) {
  if (name == "counterexample1") {
    check_keys(p, {"k1", "k2", "c1", "c2", "kappa", "fm", "omega", "terms"}, name);
    Counterexample1Params c;
    c.k1 = param(p, "k1", c.k1);
    c.k2 = param(p, "k2", c.k2);
    c.c1 = param(p, "c1", c.c1);
    c.c2 = param(p, "c2", c.c2);
    c.kappa = param(p, "kappa", c.kappa);
    c.fm = param(p, "fm", c.fm);
    c.omega = param(p, "omega", c.omega);
    c.terms = static_cast<int>(param(p, "terms", c.terms));
    return build_counterexample1(c);
  }
  if (name == "duffing") {
    check_keys(p, {"c", "omega2", "kappa", "f", "omega"}, name);
    return build_duffing(param(p, "c", 0.01), param(p, "omega2", 1.0), param(p, "kappa", 1.0), param(p, "f", 1.0),
                         param(p, "omega", 1.0));
  }
  if (name == "lin_sys") {
    check_keys(p, {}, name);
    return build_linear_example();
  }
  if (name == "quadratic") {
    check_keys(p, {"c", "omega2", "kappa", "f", "omega"}, name);
    return build_quadratic_oscillator(param(p, "c", 0.1), param(p, "omega2", 1.0), param(p, "kappa", 1.0),
                                      param(p, "f", 1.0), param(p, "omega", 1.0));
  }
  if (name == "pendulum") {
    check_keys(p, {"c", "cp", "fbar", "f", "omega"}, name);
    const double T = 2.0 * kPi / param(p, "omega", 1.0);
    FourierCoefficients fc;
    fc.c0 = vec({2.0 * param(p, "fbar", 0.0)});
    fc.sin_coef = Mat::Zero(1, 1);
    fc.cos_coef = Mat::Constant(1, 1, param(p, "f", 0.0));
    return build_pendulum(param(p, "c", 0.1), param(p, "cp", 1.0), ForcingSignal::fourier(T, std::move(fc)));
  }
  if (name == "counter3") {
    check_keys(p, {"c1", "c2", "omega1sq", "omega2sq", "kappa", "a", "omega", "f1bar", "f1"}, name);
    const double omega = param(p, "omega", 1.0);
    FourierCoefficients fc;
    fc.c0 = vec({2.0 * param(p, "f1bar", 0.0)});
    fc.sin_coef = Mat::Constant(1, 1, param(p, "f1", 0.0));
    fc.cos_coef = Mat::Zero(1, 1);
    return build_counter3(param(p, "c1", 0.01), param(p, "c2", 0.01), param(p, "omega1sq", 1.0),
                          param(p, "omega2sq", 1.0), param(p, "kappa", 1.0), param(p, "a", 0.01), omega,
                          ForcingSignal::fourier(2.0 * kPi / omega, std::move(fc)));
  }
  if (name == "chain") {
    check_keys(p, {"n", "m", "c", "k", "kappa", "f", "omega"}, name);
    const int n = static_cast<int>(param(p, "n", 3));
    require(n >= 1 && n <= 100, "chain length must be in [1, 100]");
    std::vector<double> masses(n, param(p, "m", 1.0));
    std::vector<double> dampers(n + 1, param(p, "c", 0.1));
    std::vector<SpringLaw> springs(n + 1, SpringLaw{{param(p, "k", 1.0), 0.0, param(p, "kappa", 0.5)}});
    Vec amp = Vec::Zero(n);
    amp[0] = param(p, "f", 1.0);
    return build_chain(masses, dampers, springs,
                       ForcingSignal::harmonic(2.0 * kPi / param(p, "omega", 1.0), Vec::Zero(n), amp));
  }
  if (name == "fejer_linear") {
    check_keys(p, {"blocks", "k", "c"}, name);
    const double k = param(p, "k", 400.0);
    const double c = param(p, "c", 0.01);
    auto f = ForcingSignal::fejer(2.0 * kPi, static_cast<int>(param(p, "blocks", 1)), vec({1.0}), 1.0, c, k);
    auto sys = build_linear(diag({1.0}), diag({c}), diag({k}), f);
    return MechanicalSystem(sys.mass(), sys.damping(), sys.nonlinearity(), sys.forcing(), "fejer_linear");
  }
  fail(ErrorCode::invalid_argument, "unknown built-in system '" + name + "'");
}

}  // namespace perorbit
