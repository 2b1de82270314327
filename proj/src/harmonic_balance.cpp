#include "perorbit/harmonic_balance.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace perorbit {

// ---------------------------------------------------------------------------
// Ansatz

FourierAnsatz FourierAnsatz::zeros(int dim, int K, double omega) {
  require(dim >= 1, "ansatz needs at least one DOF");
  require(K >= 0, "harmonic order must be nonnegative");
  require(omega > 0.0, "fundamental frequency must be positive");
  FourierAnsatz a;
  a.dim = dim;
  a.K = K;
  a.omega = omega;
  a.coeffs = Vec::Zero(dim * (2 * K + 1));
  return a;
}

namespace {

// Returns d-th derivative of the ansatz at t (d = 0, 1, 2).
Vec derivative_at(const FourierAnsatz& x, double t, int d) {
  Vec q = Vec::Zero(x.dim);
  const double theta = x.omega * std::fmod(t, x.period());
  for (int j = 0; j < x.dim; ++j) {
    double v = d == 0 ? 0.5 * x.c0(j) : 0.0;
    for (int k = 1; k <= x.K; ++k) {
      const double sn = std::sin(k * theta), cs = std::cos(k * theta);
      const double kw = k * x.omega;
      const double s = x.s(j, k), c = x.c(j, k);
      switch (d) {
        case 0: v += s * sn + c * cs; break;
        case 1: v += kw * (s * cs - c * sn); break;
        default: v -= kw * kw * (s * sn + c * cs); break;
      }
    }
    q[j] = v;
  }
  return q;
}

}  // namespace

Vec FourierAnsatz::eval(double t) const { return derivative_at(*this, t, 0); }
Vec FourierAnsatz::velocity(double t) const { return derivative_at(*this, t, 1); }
Vec FourierAnsatz::acceleration(double t) const { return derivative_at(*this, t, 2); }

Vec FourierAnsatz::mean() const {
  Vec m(dim);
  for (int j = 0; j < dim; ++j) m[j] = 0.5 * c0(j);
  return m;
}

FourierAnsatz FourierAnsatz::resized(int new_K) const {
  FourierAnsatz out = zeros(dim, new_K, omega);
  const int keep = std::min(K, new_K);
  for (int j = 0; j < dim; ++j) {
    out.c0(j) = c0(j);
    for (int k = 1; k <= keep; ++k) {
      out.s(j, k) = s(j, k);
      out.c(j, k) = c(j, k);
    }
  }
  return out;
}

int default_samples(int K) {
  int m = 1;
  while (m < 8 * K + 8) m *= 2;
  return m;
}

// ---------------------------------------------------------------------------
// AFT

namespace {

struct Basis {
  int K = 0;
  int M = 0;
  Eigen::MatrixXd E;  // M x (2K+1): samples of [1/2, sin t, cos t, ...]
  Eigen::MatrixXd P;  // (2K+1) x M: discrete projection onto the same basis

  Basis(int K_, int M_) : K(K_), M(M_), E(M_, 2 * K_ + 1), P(2 * K_ + 1, M_) {
    for (int i = 0; i < M; ++i) {
      const double theta = 2.0 * kPi * i / M;
      E(i, 0) = 0.5;
      P(0, i) = 2.0 / M;
      for (int k = 1; k <= K; ++k) {
        const double sn = std::sin(k * theta), cs = std::cos(k * theta);
        E(i, 2 * k - 1) = sn;
        E(i, 2 * k) = cs;
        P(2 * k - 1, i) = 2.0 / M * sn;
        P(2 * k, i) = 2.0 / M * cs;
      }
    }
  }
};

void check_frequency(const MechanicalSystem& sys, const FourierAnsatz& x) {
  require(x.dim == sys.dim(), "ansatz dimension does not match the system");
  require(std::abs(sys.forcing().omega() - x.omega) <= 1e-12 * x.omega,
          "ansatz frequency differs from the forcing frequency; retune the system with at_frequency()");
}

// Samples of q: M x N.
Eigen::MatrixXd time_samples(const Basis& b, const FourierAnsatz& x) {
  const int B = x.block();
  Eigen::MatrixXd Q(b.M, x.dim);
  for (int j = 0; j < x.dim; ++j) Q.col(j) = b.E * x.coeffs.segment(j * B, B);
  return Q;
}

// Linear part M q'' + C q' in coefficient space, minus the truncated forcing.
Vec linear_minus_forcing(const MechanicalSystem& sys, const FourierAnsatz& x) {
  const int N = x.dim, B = x.block();
  const Mat& M = sys.mass();
  const Mat& C = sys.damping();
  const auto& fc = sys.forcing().coefficients();
  Vec r = Vec::Zero(N * B);
  for (int j = 0; j < N; ++j) {
    r[j * B] = -fc.c0[j];
    for (int k = 1; k <= x.K; ++k) {
      const double kw = k * x.omega, kw2 = kw * kw;
      double rs = 0.0, rc = 0.0;
      for (int b = 0; b < N; ++b) {
        rs += -kw2 * M(j, b) * x.s(b, k) - kw * C(j, b) * x.c(b, k);
        rc += -kw2 * M(j, b) * x.c(b, k) + kw * C(j, b) * x.s(b, k);
      }
      if (k <= fc.order()) {
        rs -= fc.sin_coef(k - 1, j);
        rc -= fc.cos_coef(k - 1, j);
      }
      r[j * B + 2 * k - 1] = rs;
      r[j * B + 2 * k] = rc;
    }
  }
  return r;
}

Vec residual_with(const MechanicalSystem& sys, const FourierAnsatz& x, const Basis& b) {
  const int N = x.dim, B = x.block();
  Vec r = linear_minus_forcing(sys, x);
  const Eigen::MatrixXd Q = time_samples(b, x);
  Eigen::MatrixXd S(b.M, N);
  Vec q(N);
  for (int i = 0; i < b.M; ++i) {
    q = Q.row(i).transpose();
    S.row(i) = sys.nonlinearity().value(q).transpose();
  }
  for (int j = 0; j < N; ++j) r.segment(j * B, B) += b.P * S.col(j);
  return r;
}

Mat jacobian_with(const MechanicalSystem& sys, const FourierAnsatz& x, const Basis& b) {
  const int N = x.dim, B = x.block();
  const Mat& M = sys.mass();
  const Mat& C = sys.damping();
  Eigen::MatrixXd Jc = Eigen::MatrixXd::Zero(N * B, N * B);
  for (int j = 0; j < N; ++j)
    for (int bb = 0; bb < N; ++bb)
      for (int k = 1; k <= x.K; ++k) {
        const double kw = k * x.omega, kw2 = kw * kw;
        const int rs = j * B + 2 * k - 1, rc = j * B + 2 * k;
        const int cs = bb * B + 2 * k - 1, cc = bb * B + 2 * k;
        Jc(rs, cs) += -kw2 * M(j, bb);
        Jc(rs, cc) += -kw * C(j, bb);
        Jc(rc, cc) += -kw2 * M(j, bb);
        Jc(rc, cs) += kw * C(j, bb);
      }

  const Eigen::MatrixXd Q = time_samples(b, x);
  Eigen::MatrixXd samples(b.M, N * N);
  Vec q(N);
  for (int i = 0; i < b.M; ++i) {
    q = Q.row(i).transpose();
    const Mat J = sys.nonlinearity().jacobian(q);
    for (int a = 0; a < N; ++a)
      for (int c = 0; c < N; ++c) samples(i, a * N + c) = J(a, c);
  }
  for (int a = 0; a < N; ++a)
    for (int c = 0; c < N; ++c) {
      const auto col = samples.col(a * N + c);
      if (col.cwiseAbs().maxCoeff() == 0.0) continue;
      Jc.block(a * B, c * B, B, B) += b.P * (b.E.array().colwise() * col.array()).matrix();
    }
  return Jc;
}

int resolve_samples(int requested, int K) {
  const int M = requested > 0 ? requested : default_samples(K);
  require(M >= 4 * K + 2 && M % 2 == 0, "AFT needs an even sample count of at least 4K + 2");
  return M;
}

}  // namespace

Vec aft_residual(const MechanicalSystem& sys, const FourierAnsatz& x, int samples) {
  check_frequency(sys, x);
  return residual_with(sys, x, Basis(x.K, resolve_samples(samples, x.K)));
}

Mat aft_jacobian(const MechanicalSystem& sys, const FourierAnsatz& x, int samples) {
  check_frequency(sys, x);
  return jacobian_with(sys, x, Basis(x.K, resolve_samples(samples, x.K)));
}

Vec quadrature_residual(const MechanicalSystem& sys, const FourierAnsatz& x, int n_points) {
  check_frequency(sys, x);
  require(n_points > 2 * x.K, "too few quadrature points");
  const int N = x.dim, B = x.block();
  Vec r = Vec::Zero(N * B);
  const double T = x.period();
  for (int i = 0; i < n_points; ++i) {
    const double t = T * i / n_points;
    const Vec d = sys.mass() * x.acceleration(t) + sys.damping() * x.velocity(t) +
                  sys.nonlinearity().value(x.eval(t)) - sys.forcing().eval(t);
    const double theta = x.omega * t;
    for (int j = 0; j < N; ++j) {
      r[j * B] += d[j];
      for (int k = 1; k <= x.K; ++k) {
        r[j * B + 2 * k - 1] += d[j] * std::sin(k * theta);
        r[j * B + 2 * k] += d[j] * std::cos(k * theta);
      }
    }
  }
  return r * (2.0 / n_points);
}

// ---------------------------------------------------------------------------
// Solver

HBSolution hb_solve(const MechanicalSystem& base, double omega, int K, const std::optional<FourierAnsatz>& initial,
                    const HBOptions& opts) {
  require(K >= 1, "harmonic order must be at least 1");
  require(omega > 0.0 && std::isfinite(omega), "frequency must be positive");
  const MechanicalSystem sys = base.at_frequency(omega);
  const int M = resolve_samples(opts.samples, K);
  const Basis basis(K, M);

  FourierAnsatz x = FourierAnsatz::zeros(sys.dim(), K, omega);
  if (initial) {
    require(initial->dim == sys.dim(), "initial ansatz dimension does not match the system");
    x = initial->resized(K);
    x.omega = omega;
  }

  HBSolution sol;
  sol.samples = M;
  Vec R = residual_with(sys, x, basis);
  double nr = R.norm();
  bool stalled = false;
  int it = 0;
  for (; it < opts.max_iter && nr >= opts.tol; ++it) {
    const Eigen::MatrixXd J = jacobian_with(sys, x, basis);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
    if (qr.rank() < J.cols()) {
      sol.message = "singular Jacobian (fold proximity)";
      stalled = true;
      break;
    }
    const Vec dx = qr.solve(-R);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      FourierAnsatz trial = x;
      trial.coeffs += lambda * dx;
      Vec Rt = residual_with(sys, trial, basis);
      const double nt = Rt.norm();
      if (std::isfinite(nt) && nt < nr) {
        x = std::move(trial);
        R = std::move(Rt);
        nr = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      sol.message = "Newton step rejected after " + std::to_string(opts.max_halvings) + " halvings";
      stalled = true;
      ++it;
      break;
    }
  }

  if (nr >= opts.tol && opts.lm_fallback && (stalled || it >= opts.max_iter)) {
    // Levenberg-Marquardt on |R|^2 with a diagonal scaling.
    double mu = 1e-3;
    for (int lm = 0; lm < opts.lm_max_iter && nr >= opts.tol; ++lm, ++it) {
      const Eigen::MatrixXd J = jacobian_with(sys, x, basis);
      const Eigen::MatrixXd JtJ = J.transpose() * J;
      const Vec g = J.transpose() * R;
      const Vec d = JtJ.diagonal().cwiseMax(1e-12);
      bool improved = false;
      for (int tries = 0; tries < 30; ++tries) {
        Eigen::MatrixXd A = JtJ;
        A.diagonal() += mu * d;
        const Vec dx = A.ldlt().solve(-g);
        FourierAnsatz trial = x;
        trial.coeffs += dx;
        Vec Rt = residual_with(sys, trial, basis);
        const double nt = Rt.norm();
        if (std::isfinite(nt) && nt < nr) {
          const bool tiny = nr - nt <= 1e-15 * nr && dx.norm() <= 1e-15 * (1.0 + x.coeffs.norm());
          x = std::move(trial);
          R = std::move(Rt);
          nr = nt;
          mu = std::max(mu / 3.0, 1e-15);
          improved = !tiny;
          break;
        }
        mu *= 4.0;
      }
      if (!improved) break;
    }
    sol.message += sol.message.empty() ? "Levenberg-Marquardt fallback" : "; Levenberg-Marquardt fallback";
  }

  sol.converged = nr < opts.tol;
  if (!sol.converged && sol.message.empty()) sol.message = "iteration limit reached";
  sol.residual_norm = nr;
  sol.iterations = it;
  sol.ansatz = x;
  sol.amplitude = amplitude(x);
  return sol;
}

std::vector<ConvergenceRow> hb_convergence_study(const MechanicalSystem& sys, const std::vector<int>& Ks,
                                                 const HBOptions& opts) {
  require(!Ks.empty(), "empty harmonic list");
  require(std::is_sorted(Ks.begin(), Ks.end()), "harmonic list must be ascending");
  std::vector<ConvergenceRow> out;
  std::optional<FourierAnsatz> warm;
  const double omega = sys.forcing().omega();
  for (int K : Ks) {
    const HBSolution sol = hb_solve(sys, omega, K, warm, opts);
    ConvergenceRow row;
    row.K = K;
    row.amplitude = sol.amplitude[0];
    row.residual = sol.residual_norm;
    row.iterations = sol.iterations;
    row.converged = sol.converged;
    row.apparently_converged = !out.empty() && std::abs(row.amplitude - out.back().amplitude) < 1e-6;
    out.push_back(row);
    warm = sol.ansatz;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fejer demo

FejerDemo fejer_partial_sum_demo(int blocks, const std::vector<int>& ns) {
  require(blocks >= 1 && blocks <= 2, "Fejer demo supports K_b = 1 or 2");
  struct Pair {
    long lo, hi;
    double w;
  };
  std::vector<Pair> pairs;
  for (int k = 1; k <= blocks; ++k) {
    const long p = 1L << (k * k * k + 1), q = 1L << (k * k * k);
    for (long l = 1; l <= q; ++l) pairs.push_back({p - l, p + l, 1.0 / (static_cast<double>(k) * k * l)});
  }
  const auto a = fejer_cosine_coefficients(blocks);
  FejerDemo out;
  out.blocks = blocks;
  out.bandwidth = static_cast<int>(a.size()) - 1;

  // Pairs entirely inside the window cancel exactly, so they are skipped rather than summed.
  auto partial = [&](long n) {
    double s = 0.0;
    for (const auto& pr : pairs)
      if (pr.lo <= n && pr.hi > n) s += pr.w;
    return s;
  };
  for (int n = 0; n <= out.bandwidth; ++n) {
    const double s = std::abs(partial(n));
    if (s > out.max_partial) {
      out.max_partial = s;
      out.argmax_n = n;
    }
  }
  out.full_sum = partial(out.bandwidth);
  for (int n : ns) {
    require(n >= 0, "partial-sum index must be nonnegative");
    out.rows.push_back({n, partial(n)});
  }

  // sup |f_f|: f is even, so sample [0, pi], then polish the largest local maxima with Newton on f'.
  std::vector<int> freq;
  std::vector<double> amp;
  for (int m = 0; m <= out.bandwidth; ++m)
    if (a[static_cast<std::size_t>(m)] != 0.0) {
      freq.push_back(m);
      amp.push_back(a[static_cast<std::size_t>(m)]);
    }
  auto eval = [&](double t, int d) {
    double v = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const double m = freq[i];
      switch (d) {
        case 0: v += amp[i] * std::cos(m * t); break;
        case 1: v -= amp[i] * m * std::sin(m * t); break;
        default: v -= amp[i] * m * m * std::cos(m * t); break;
      }
    }
    return v;
  };
  const int S = 1 << 15;
  const double h = kPi / S;
  std::vector<double> samples(S + 1);
  for (int i = 0; i <= S; ++i) samples[static_cast<std::size_t>(i)] = std::abs(eval(i * h, 0));
  std::vector<std::pair<double, int>> peaks;
  for (int i = 0; i <= S; ++i) {
    const double left = i > 0 ? samples[static_cast<std::size_t>(i - 1)] : samples[1];
    const double right = i < S ? samples[static_cast<std::size_t>(i + 1)] : samples[static_cast<std::size_t>(S - 1)];
    const double c = samples[static_cast<std::size_t>(i)];
    if (c >= left && c >= right) peaks.emplace_back(c, i);
  }
  std::sort(peaks.begin(), peaks.end(), std::greater<>());
  if (peaks.size() > 64) peaks.resize(64);
  for (const auto& [val, i] : peaks) {
    double t = i * h;
    out.sup_norm = std::max(out.sup_norm, val);
    for (int it = 0; it < 30; ++it) {
      const double f2 = eval(t, 2);
      if (f2 == 0.0) break;
      const double step = std::clamp(-eval(t, 1) / f2, -h, h);
      t += step;
      if (std::abs(step) < 1e-15) break;
    }
    out.sup_norm = std::max(out.sup_norm, std::abs(eval(t, 0)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

Mat reconstruct(const FourierAnsatz& x, int n_samples) {
  require(n_samples >= 1, "need at least one sample");
  Mat out(n_samples, x.dim + 1);
  const double T = x.period();
  for (int i = 0; i < n_samples; ++i) {
    const double t = T * i / n_samples;
    out(i, 0) = t;
    out.row(i).tail(x.dim) = x.eval(t).transpose();
  }
  return out;
}

Vec amplitude(const FourierAnsatz& x) {
  const int n = 2048;
  const Mat grid = reconstruct(x, n);
  const double h = x.period() / n;
  Vec amp(x.dim);
  for (int j = 0; j < x.dim; ++j) {
    Eigen::Index best = 0;
    grid.col(j + 1).cwiseAbs().maxCoeff(&best);
    // Golden-section search for max |q_j| on the bracketing cells.
    auto f = [&](double t) { return std::abs(x.eval(t)[j]); };
    double lo = grid(best, 0) - h, hi = grid(best, 0) + h;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    double fa = f(a), fb = f(b);
    for (int it = 0; it < 60 && hi - lo > 1e-14 * x.period(); ++it) {
      if (fa > fb) {
        hi = b;
        b = a;
        fb = fa;
        a = hi - g * (hi - lo);
        fa = f(a);
      } else {
        lo = a;
        a = b;
        fa = fb;
        b = lo + g * (hi - lo);
        fb = f(b);
      }
    }
    amp[j] = std::max({std::abs(grid(best, j + 1)), fa, fb});
  }
  return amp;
}

// ---------------------------------------------------------------------------
// Serialization

Json solution_to_json(const HBSolution& sol) {
  Json j;
  j["dim"] = sol.ansatz.dim;
  j["K"] = sol.ansatz.K;
  j["omega"] = sol.ansatz.omega;
  j["layout"] = "dof-major [c0, s1, c1, ..., sK, cK]";
  j["coefficients"] = vector_to_json(sol.ansatz.coeffs);
  j["residual_norm"] = sol.residual_norm;
  j["iterations"] = sol.iterations;
  j["aft_samples"] = sol.samples;
  j["converged"] = sol.converged;
  j["amplitude"] = vector_to_json(sol.amplitude);
  j["message"] = sol.message;
  return j;
}

HBSolution solution_from_json(const Json& j) {
  try {
    HBSolution sol;
    sol.ansatz = FourierAnsatz::zeros(j.at("dim").get<int>(), j.at("K").get<int>(), j.at("omega").get<double>());
    const Vec c = vector_from_json(j.at("coefficients"), "coefficients");
    if (c.size() != sol.ansatz.coeffs.size()) fail(ErrorCode::parse, "coefficient vector has the wrong length");
    sol.ansatz.coeffs = c;
    sol.residual_norm = j.value("residual_norm", 0.0);
    sol.iterations = j.value("iterations", 0);
    sol.samples = j.value("aft_samples", 0);
    sol.converged = j.value("converged", false);
    sol.amplitude = amplitude(sol.ansatz);
    sol.message = j.value("message", std::string());
    return sol;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("bad HB solution: ") + e.what());
  }
}

std::string solution_csv(const FourierAnsatz& x, int n_samples) {
  std::ostringstream os;
  os << "t";
  for (int j = 0; j < x.dim; ++j) os << ",q" << (j + 1);
  os << "\n";
  const Mat rows = reconstruct(x, n_samples);
  for (int i = 0; i < rows.rows(); ++i) {
    for (int c = 0; c < rows.cols(); ++c) os << (c ? "," : "") << format_double(rows(i, c));
    os << "\n";
  }
  return os.str();
}

}  // namespace perorbit
