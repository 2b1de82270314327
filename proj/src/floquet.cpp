#include "perorbit/floquet.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace perorbit {

const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::ok: return "ok";
    case IntegrationStatus::escape: return "escape";
    case IntegrationStatus::step_underflow: return "step-underflow";
    case IntegrationStatus::max_steps: return "max-steps";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;

bool escaped(const Vec& x, double limit) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || std::abs(x[i]) > limit) return true;
  return false;
}

}  // namespace

Trajectory integrate(const Rhs& rhs, const Vec& x0, double t0, double t1, const IntegratorOptions& opts,
                     bool keep_steps) {
  require(std::isfinite(t0) && std::isfinite(t1), "integration window must be finite");
  require(opts.rtol > 0.0 && opts.atol > 0.0, "tolerances must be positive");
  const Eigen::Index n = x0.size();
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  Trajectory tr;
  Vec x = x0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y(n), xn(n), err(n);
  rhs(t0, x, k1);
  tr.t.push_back(t0);
  tr.x.push_back(x);
  tr.dx.push_back(k1);
  if (span == 0.0) return tr;

  auto scale = [&](const Vec& a, const Vec& b) {
    return (opts.atol + opts.rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };

  double h = opts.initial_step;
  if (h <= 0.0) {
    const Vec sc = scale(x, x);
    const double d0 = std::sqrt((x.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((k1.array() / sc.array()).square().mean());
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }
  h = std::min(h, span);

  double t = t0;
  while (true) {
    const double remaining = std::abs(t1 - t);
    if (remaining <= 0.0) break;
    if (tr.steps >= opts.max_steps) {
      tr.status = IntegrationStatus::max_steps;
      break;
    }
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      tr.status = IntegrationStatus::step_underflow;
      break;
    }
    const double hs = dir * h;
    y = x + hs * a21 * k1;
    rhs(t + c2 * hs, y, k2);
    y = x + hs * (a31 * k1 + a32 * k2);
    rhs(t + c3 * hs, y, k3);
    y = x + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * hs, y, k4);
    y = x + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * hs, y, k5);
    y = x + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + hs, y, k6);
    xn = x + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double tn = last ? t1 : t + hs;
    rhs(tn, xn, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = std::sqrt((err.array() / scale(x, xn).array()).square().mean());

    if (!std::isfinite(en)) {
      h *= 0.2;
      ++tr.rejected;
      continue;
    }
    if (en <= 1.0) {
      t = tn;
      x = xn;
      k1 = k7;
      ++tr.steps;
      if (keep_steps || last) {
        tr.t.push_back(t);
        tr.x.push_back(x);
        tr.dx.push_back(k1);
      }
      if (escaped(x, opts.escape)) {
        if (!keep_steps && !last) {
          tr.t.push_back(t);
          tr.x.push_back(x);
          tr.dx.push_back(k1);
        }
        tr.status = IntegrationStatus::escape;
        break;
      }
      if (last) break;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      ++tr.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
  }
  return tr;
}

Vec Trajectory::at(double time) const {
  require(!t.empty(), "empty trajectory");
  const bool forward = t.back() >= t.front();
  const double lo = std::min(t.front(), t.back()), hi = std::max(t.front(), t.back());
  require(time >= lo - 1e-12 * std::max(1.0, std::abs(lo)) && time <= hi + 1e-12 * std::max(1.0, std::abs(hi)),
          "time outside the integrated window");
  if (t.size() == 1) return x.front();
  std::size_t i;
  if (forward) {
    i = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), time) - t.begin());
  } else {
    i = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), time, std::greater<>()) - t.begin());
  }
  i = std::clamp<std::size_t>(i, 1, t.size() - 1);
  const double ta = t[i - 1], tb = t[i];
  const double h = tb - ta;
  const double s = (time - ta) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * x[i - 1] + h10 * h * dx[i - 1] + h01 * x[i] + h11 * h * dx[i];
}

// ---------------------------------------------------------------------------
// Monodromy

MonodromyResult monodromy(const LTPSystem& ltp, double period, const IntegratorOptions& opts) {
  require(ltp.n >= 1 && ltp.A, "LTP system needs a coefficient map");
  require(period > 0.0, "period must be positive");
  const double ratio = period / ltp.period;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 1.0,
          "monodromy period must be an integer multiple of the coefficient period");
  const int n = ltp.n;
  Vec z = Vec::Zero(n * n + 1);
  for (int i = 0; i < n; ++i) z[i * n + i] = 1.0;

  Mat A(n, n);
  Rhs rhs = [&](double t, const Vec& s, Vec& ds) {
    ltp.A(t, A);
    Eigen::Map<const Eigen::MatrixXd> phi(s.data(), n, n);
    Eigen::Map<Eigen::MatrixXd> dphi(ds.data(), n, n);
    dphi.noalias() = A * phi;
    ds[n * n] = A.trace();
  };
  const Trajectory tr = integrate(rhs, z, 0.0, period, opts, false);
  MonodromyResult out;
  out.status = tr.status;
  require(tr.status == IntegrationStatus::ok, std::string("monodromy integration failed: ") + to_string(tr.status));
  const Vec& zf = tr.final_state();
  out.phi = Eigen::Map<const Eigen::MatrixXd>(zf.data(), n, n);
  out.trace_integral = zf[n * n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(out.phi), false);
  out.multipliers = es.eigenvalues();
  std::complex<double> prod = 1.0;
  for (Eigen::Index i = 0; i < out.multipliers.size(); ++i) prod *= out.multipliers[i];
  out.liouville_defect = std::abs(prod - std::exp(out.trace_integral));
  out.max_abs = out.multipliers.cwiseAbs().maxCoeff();
  out.stable = out.max_abs < 1.0;
  return out;
}

MonodromyResult monodromy(const LTPSystem& ltp, const IntegratorOptions& opts) {
  return monodromy(ltp, ltp.period, opts);
}

FrequencyResponse linear_frf(double omega2, double c, double a, double Omega) {
  const double re = omega2 - Omega * Omega, im = c * Omega;
  const double den = std::hypot(re, im);
  require(den > 0.0, "undamped exact resonance");
  return {a / den, std::atan2(im, re)};
}

LTPSystem mathieu_ltp(double c1, double omega1_sq, double kappa, double A, double psi, double Omega) {
  require(Omega > 0.0, "frequency must be positive");
  LTPSystem ltp;
  ltp.n = 2;
  ltp.period = kPi / Omega;
  const double h = 0.5 * kappa * A * A;
  ltp.A = [=](double t, Mat& out) {
    out(0, 0) = 0.0;
    out(0, 1) = 1.0;
    out(1, 0) = -omega1_sq - h + h * std::cos(2.0 * Omega * t - 2.0 * psi);
    out(1, 1) = -c1;
  };
  return ltp;
}

LTPSystem variational_ltp(const MechanicalSystem& sys, const FourierAnsatz& orbit) {
  require(orbit.dim == sys.dim(), "orbit dimension does not match the system");
  const int N = sys.dim();
  const Eigen::MatrixXd Minv = Eigen::MatrixXd(sys.mass()).inverse();
  const Eigen::MatrixXd MC = Minv * Eigen::MatrixXd(sys.damping());
  LTPSystem ltp;
  ltp.n = 2 * N;
  ltp.period = orbit.period();
  const Nonlinearity nl = sys.nonlinearity();
  ltp.A = [=](double t, Mat& out) {
    out.setZero();
    out.block(0, N, N, N).setIdentity();
    out.block(N, 0, N, N) = -Minv * Eigen::MatrixXd(nl.jacobian(orbit.eval(t)));
    out.block(N, N, N, N) = -MC;
  };
  return ltp;
}

// ---------------------------------------------------------------------------
// Stability map

namespace {

template <class F>
void parallel_for(int count, int jobs, F&& body) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

LTPSystem cell_ltp(const MathieuParams& p, double a, double omega1) {
  const auto frf = linear_frf(p.omega2 * p.omega2, p.c2, a, p.Omega);
  return mathieu_ltp(p.c1, omega1 * omega1, p.kappa, frf.A, frf.psi, p.Omega);
}

}  // namespace

LTPSystem boundary_ltp(const MathieuParams& p, const BoundaryPoint& b) { return cell_ltp(p, b.a, b.omega1); }

StabilityCell stability_cell(const MathieuParams& p, double a, double omega1, const IntegratorOptions& opts) {
  const auto res = monodromy(cell_ltp(p, a, omega1), opts);
  StabilityCell c;
  c.a = a;
  c.omega1 = omega1;
  c.multipliers = res.multipliers;
  const double half = res.multipliers.cwiseAbs().maxCoeff();
  c.max_abs = half * half;
  std::complex<double> prod = res.multipliers[0] * res.multipliers[1];
  c.liouville_defect = std::abs(prod - std::exp(-p.c1 * p.forcing_period() / 2.0));
  c.stable = c.max_abs < 1.0;
  return c;
}

StabilityMap stability_map(const MathieuParams& p, const std::vector<double>& a_grid,
                           const std::vector<double>& omega1_grid, const IntegratorOptions& opts, int jobs) {
  require(!a_grid.empty() && !omega1_grid.empty(), "empty stability grid");
  require(std::is_sorted(a_grid.begin(), a_grid.end()), "a grid must be ascending");
  StabilityMap map;
  map.params = p;
  map.a_grid = a_grid;
  map.omega1_grid = omega1_grid;
  const int na = static_cast<int>(a_grid.size()), nw = static_cast<int>(omega1_grid.size());
  map.cells.resize(static_cast<std::size_t>(na * nw));
  parallel_for(na * nw, jobs, [&](int idx) {
    const int i = idx / na, j = idx % na;
    map.cells[static_cast<std::size_t>(idx)] = stability_cell(p, a_grid[j], omega1_grid[i], opts);
  });

  // Bisection rows are independent; collect per row, then concatenate in row order.
  std::vector<std::vector<BoundaryPoint>> rows(static_cast<std::size_t>(nw));
  parallel_for(nw, jobs, [&](int i) {
    for (int j = 0; j + 1 < na; ++j) {
      const auto& left = map.cells[static_cast<std::size_t>(i * na + j)];
      const auto& right = map.cells[static_cast<std::size_t>(i * na + j + 1)];
      if (left.stable == right.stable) continue;
      double lo = left.a, hi = right.a;
      const bool lo_stable = left.stable;
      BoundaryPoint best;
      best.omega1 = omega1_grid[i];
      best.max_abs = std::numeric_limits<double>::infinity();
      for (int step = 1; step <= 60; ++step) {
        const double mid = 0.5 * (lo + hi);
        const auto c = stability_cell(p, mid, omega1_grid[i], opts);
        if (std::abs(c.max_abs - 1.0) < std::abs(best.max_abs - 1.0)) {
          best.a = mid;
          best.max_abs = c.max_abs;
          best.multipliers = c.multipliers;
          best.bisection_steps = step;
        }
        if (std::abs(c.max_abs - 1.0) < 1e-8) break;
        (c.stable == lo_stable ? lo : hi) = mid;
      }
      rows[static_cast<std::size_t>(i)].push_back(best);
    }
  });
  for (auto& r : rows) map.boundary.insert(map.boundary.end(), r.begin(), r.end());
  return map;
}

std::string stability_map_csv(const StabilityMap& m) {
  std::ostringstream os;
  os << "a,omega1,max_abs_rho,stable\n";
  for (const auto& c : m.cells)
    os << format_double(c.a) << "," << format_double(c.omega1) << "," << format_double(c.max_abs) << ","
       << (c.stable ? 1 : 0) << "\n";
  return os.str();
}

std::string boundary_csv(const StabilityMap& m) {
  std::ostringstream os;
  os << "a,omega1,max_abs_rho,bisection_steps\n";
  for (const auto& b : m.boundary)
    os << format_double(b.a) << "," << format_double(b.omega1) << "," << format_double(b.max_abs) << ","
       << b.bisection_steps << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Adjoint

Vec AdjointSolution::at(double t) const {
  const double T = forcing_period;
  double tr = std::fmod(t, T);
  if (tr < 0.0) tr += T;
  return trajectory.at(tr).head(2);
}

namespace {

AdjointSolution adjoint_for(const LTPSystem& ltp, const CVec& mu, const Eigen::MatrixXcd& vecs,
                            int which, const IntegratorOptions& opts, double tolerance) {
  require(which == 1 || which == -1, "multiplier selector must be +1 or -1");
  Eigen::Index best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double d = std::abs(mu[i] - static_cast<double>(which));
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  if (dist >= tolerance)
    fail(ErrorCode::numerical, "no adjoint multiplier within " + format_double(tolerance) + " of " +
                                   std::to_string(which) + " (closest at distance " + format_double(dist) + ")");
  const int n = ltp.n;
  Vec y0 = vecs.col(best).real();
  if (y0.norm() < 1e-8) y0 = vecs.col(best).imag();
  y0.normalize();

  // Augmented state: y, int y.y, int y2^2, int y2.
  Mat A(n, n);
  Rhs rhs = [&](double t, const Vec& s, Vec& ds) {
    ltp.A(t, A);
    ds.head(n).noalias() = -A.transpose() * s.head(n);
    ds[n] = s.head(n).squaredNorm();
    ds[n + 1] = s[1] * s[1];
    ds[n + 2] = s[1];
  };
  Vec z0 = Vec::Zero(n + 3);
  z0.head(n) = y0;
  const double TA = ltp.period;
  Trajectory first = integrate(rhs, z0, 0.0, TA, opts, true);
  require(first.status == IntegrationStatus::ok, "adjoint integration failed");
  Trajectory second = integrate(rhs, first.final_state(), TA, 2.0 * TA, opts, true);
  require(second.status == IntegrationStatus::ok, "adjoint integration failed");

  AdjointSolution out;
  out.sigma = which;
  out.forcing_period = 2.0 * TA;
  out.trajectory = first;
  out.trajectory.t.insert(out.trajectory.t.end(), second.t.begin() + 1, second.t.end());
  out.trajectory.x.insert(out.trajectory.x.end(), second.x.begin() + 1, second.x.end());
  out.trajectory.dx.insert(out.trajectory.dx.end(), second.dx.begin() + 1, second.dx.end());
  out.trajectory.steps += second.steps;

  const Vec& zf = second.final_state();
  const double scale = 1.0 / std::sqrt(zf[n]);
  for (auto* series : {&out.trajectory.x, &out.trajectory.dx})
    for (auto& v : *series) {
      v.head(n) *= scale;
      v.segment(n, 2) *= scale * scale;
      v[n + 2] *= scale;
    }
  const Vec yT = out.trajectory.x.back().head(n);
  const Vec yA = first.final_state().head(n) * scale;
  const Vec y0s = y0 * scale;
  out.periodicity_defect = std::max((yA - which * y0s).norm(), (yT - y0s).norm());
  out.l2_norm = out.trajectory.x.back()[n];
  out.int_y2_sq = out.trajectory.x.back()[n + 1];
  out.int_y2 = out.trajectory.x.back()[n + 2];
  return out;
}

struct AdjointMonodromy {
  CVec mu;
  Eigen::MatrixXcd vecs;
};

AdjointMonodromy adjoint_monodromy(const LTPSystem& ltp, const IntegratorOptions& opts) {
  LTPSystem adj;
  adj.n = ltp.n;
  adj.period = ltp.period;
  adj.A = [&ltp](double t, Mat& out) {
    ltp.A(t, out);
    out = (-out.transpose()).eval();
  };
  const auto res = monodromy(adj, opts);
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(res.phi), true);
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

AdjointSolution adjoint_periodic_solution(const LTPSystem& ltp, int which, const IntegratorOptions& opts,
                                          double tolerance) {
  const auto am = adjoint_monodromy(ltp, opts);
  return adjoint_for(ltp, am.mu, am.vecs, which, opts, tolerance);
}

AdjointSolution adjoint_periodic_solution(const LTPSystem& ltp, const IntegratorOptions& opts, double tolerance) {
  const auto am = adjoint_monodromy(ltp, opts);
  double dp = std::numeric_limits<double>::infinity(), dm = dp;
  for (Eigen::Index i = 0; i < am.mu.size(); ++i) {
    dp = std::min(dp, std::abs(am.mu[i] - 1.0));
    dm = std::min(dm, std::abs(am.mu[i] + 1.0));
  }
  return adjoint_for(ltp, am.mu, am.vecs, dp <= dm ? 1 : -1, opts, tolerance);
}

OrthogonalityForcing orthogonality_violating_forcing(const AdjointSolution& y) {
  if (!(y.int_y2_sq > 1e-10)) fail(ErrorCode::numerical, "adjoint second component is degenerate");
  OrthogonalityForcing f;
  f.sign = y.int_y2 < 0.0 ? 1.0 : -1.0;
  f.integral = f.sign * y.int_y2_sq;
  f.period = y.forcing_period;
  f.mean = f.sign * y.int_y2 / y.forcing_period;
  return f;
}

}  // namespace perorbit
