#include "perorbit/continuation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace perorbit {

SystemFamily frequency_family(const MechanicalSystem& sys) {
  SystemFamily fam;
  fam.parameter = "Omega";
  fam.system = [sys](double l) { return sys.at_frequency(l); };
  fam.omega = [](double l) { return l; };
  return fam;
}

SystemFamily amplitude_family(const MechanicalSystem& sys, double omega) {
  require(omega > 0.0, "frequency must be positive");
  SystemFamily fam;
  fam.parameter = "f";
  const MechanicalSystem tuned = sys.at_frequency(omega);
  fam.system = [tuned](double l) { return tuned.with_forcing(tuned.forcing().scaled(l)); };
  fam.omega = [omega](double) { return omega; };
  return fam;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::unknown: break;
  }
  return "unknown";
}

std::vector<double> Branch::amplitudes_at(double l, int dof) const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i].param, b = points[i + 1].param;
    if ((l - a) * (l - b) > 0.0 || a == b) continue;
    // A value shared by two segments is reported once.
    if (l == b && i + 2 < points.size()) continue;
    const double w = (l - a) / (b - a);
    out.push_back((1.0 - w) * points[i].solution.amplitude[dof] + w * points[i + 1].solution.amplitude[dof]);
  }
  return out;
}

double top_harmonic_energy_fraction(const FourierAnsatz& x) {
  if (x.K < 1) return 0.0;
  double total = 0.0, top = 0.0;
  for (int j = 0; j < x.dim; ++j) {
    total += 0.25 * x.c0(j) * x.c0(j);
    for (int k = 1; k <= x.K; ++k) {
      const double e = 0.5 * (x.s(j, k) * x.s(j, k) + x.c(j, k) * x.c(j, k));
      total += e;
      if (k == x.K) top += e;
    }
  }
  return total > 0.0 ? top / total : 0.0;
}

MonodromyResult orbit_monodromy(const MechanicalSystem& sys, const FourierAnsatz& orbit,
                                const IntegratorOptions& opts) {
  return monodromy(variational_ltp(sys.at_frequency(orbit.omega), orbit), opts);
}

namespace {

void classify(const SystemFamily& fam, BranchPoint& p, const IntegratorOptions& opts) {
  const MonodromyResult m = orbit_monodromy(fam.system(p.param), p.solution.ansatz, opts);
  p.max_multiplier = m.max_abs;
  if (m.status != IntegrationStatus::ok)
    p.stability = Stability::unknown;
  else
    p.stability = m.max_abs < 1.0 ? Stability::stable : Stability::unstable;
}

BranchPoint make_point(double l, HBSolution sol) {
  BranchPoint p;
  p.param = l;
  p.solution = std::move(sol);
  return p;
}

HBSolution package(const MechanicalSystem& sys, const FourierAnsatz& x, int samples, const std::string& msg) {
  HBSolution s;
  s.ansatz = x;
  s.samples = samples;
  s.residual_norm = aft_residual(sys, x, samples).norm();
  s.amplitude = amplitude(x);
  s.message = msg;
  return s;
}

// Extended system on z = [coefficients; l].
class Extended {
 public:
  Extended(const SystemFamily& fam, int dim, int K, int samples) : fam_(&fam), dim_(dim), K_(K), samples_(samples) {}

  int size() const { return dim_ * (2 * K_ + 1) + 1; }
  int K() const { return K_; }
  int samples() const { return samples_; }

  FourierAnsatz ansatz(const Vec& z) const {
    const double l = z[z.size() - 1];
    FourierAnsatz x = FourierAnsatz::zeros(dim_, K_, fam_->omega(l));
    x.coeffs = z.head(z.size() - 1);
    return x;
  }

  Vec residual(const Vec& z) const {
    const double l = z[z.size() - 1];
    return aft_residual(fam_->system(l), ansatz(z), samples_);
  }

  /// [J_x, J_l]; J_l by central differences.
  Eigen::MatrixXd jacobian(const Vec& z) const {
    const double l = z[z.size() - 1];
    const int n = size() - 1;
    Eigen::MatrixXd J(n, n + 1);
    J.leftCols(n) = aft_jacobian(fam_->system(l), ansatz(z), samples_);
    const double h = 1e-6 * std::max(1.0, std::abs(l));
    Vec zp = z, zm = z;
    zp[n] += h;
    zm[n] -= h;
    J.col(n) = (residual(zp) - residual(zm)) / (2.0 * h);
    return J;
  }

  /// Unit null vector of [J_x, J_l] oriented along `prev`.
  Vec tangent(const Vec& z, const Vec& prev) const {
    const Eigen::MatrixXd J = jacobian(z);
    const int n = J.rows();
    Eigen::MatrixXd B(n + 1, n + 1);
    B.topRows(n) = J;
    B.row(n) = prev.transpose();
    Vec rhs = Vec::Zero(n + 1);
    rhs[n] = 1.0;
    Vec t = B.colPivHouseholderQr().solve(rhs);
    t.normalize();
    if (t.dot(prev) < 0.0) t = -t;
    return t;
  }

  struct Corrected {
    Vec z;
    bool ok = false;
    int iterations = 0;
    double residual = 0.0;
  };

  /// Newton on [F(z); t.(z - z_pred)] = 0.
  Corrected correct(const Vec& z_pred, const Vec& t, double tol, int max_iter = 12) const {
    Corrected c;
    c.z = z_pred;
    const int n = size() - 1;
    for (int it = 0; it <= max_iter; ++it) {
      const Vec F = residual(c.z);
      c.residual = F.norm();
      c.iterations = it;
      if (!std::isfinite(c.residual)) return c;
      if (c.residual < tol) {
        c.ok = true;
        return c;
      }
      if (it == max_iter) break;
      Eigen::MatrixXd B(n + 1, n + 1);
      B.topRows(n) = jacobian(c.z);
      B.row(n) = t.transpose();
      Vec rhs(n + 1);
      rhs.head(n) = -F;
      rhs[n] = -t.dot(c.z - z_pred);
      c.z += B.colPivHouseholderQr().solve(rhs);
    }
    return c;
  }

 private:
  const SystemFamily* fam_;
  int dim_;
  int K_;
  int samples_;
};

Vec pack(const FourierAnsatz& x, double l) {
  Vec z(x.coeffs.size() + 1);
  z.head(x.coeffs.size()) = x.coeffs;
  z[z.size() - 1] = l;
  return z;
}

Vec pad_tangent(const Vec& t, int dim, int K_old, int K_new) {
  FourierAnsatz x = FourierAnsatz::zeros(dim, K_old, 1.0);
  x.coeffs = t.head(t.size() - 1);
  const FourierAnsatz y = x.resized(K_new);
  Vec out = pack(y, t[t.size() - 1]);
  return out.normalized();
}

}  // namespace

// ---------------------------------------------------------------------------
// Natural sweep

Branch sweep_natural(const SystemFamily& fam, double from, double to, const ContinuationOptions& opts,
                     const std::optional<FourierAnsatz>& initial) {
  require(opts.initial_step > 0.0 && opts.max_step >= opts.initial_step, "invalid continuation step sizes");
  Branch br;
  br.parameter = fam.parameter;
  const double dir = to >= from ? 1.0 : -1.0;
  int K = opts.K;

  HBSolution sol = hb_solve(fam.system(from), fam.omega(from), K, initial, opts.hb);
  if (!sol.converged) {
    br.message = "no converged solution at the start: " + sol.message;
    return br;
  }
  br.points.push_back(make_point(from, sol));

  double l = from, h = opts.initial_step;
  int halvings = 0, successes = 0;
  while (dir * (to - l) > 1e-14 * std::max(1.0, std::abs(to)) &&
         static_cast<int>(br.points.size()) < opts.max_points) {
    const double next = dir * (l + dir * h - to) > 0.0 ? to : l + dir * h;
    HBSolution s = hb_solve(fam.system(next), fam.omega(next), K, br.points.back().solution.ansatz, opts.hb);
    if (!s.converged) {
      h *= 0.5;
      successes = 0;
      if (++halvings > opts.max_halvings || h < opts.min_step) {
        br.message = "stopped after " + std::to_string(halvings) + " consecutive halvings (fold suspected)";
        break;
      }
      continue;
    }
    halvings = 0;
    if (opts.auto_raise_K && K < opts.max_K && top_harmonic_energy_fraction(s.ansatz) > opts.energy_threshold) {
      K = std::min(K + 2, opts.max_K);
      s = hb_solve(fam.system(next), fam.omega(next), K, s.ansatz, opts.hb);
      if (!s.converged) continue;
    }
    const double ds = std::abs(next - l);
    l = next;
    BranchPoint p = make_point(l, std::move(s));
    p.arclength = br.points.back().arclength + ds;
    p.tangent_param = dir;
    br.points.push_back(std::move(p));
    if (++successes >= 3) {
      h = std::min(1.3 * h, opts.max_step);
      successes = 0;
    }
  }
  if (br.message.empty()) br.message = "reached the end of the range";
  if (opts.tag_stability) tag_stability(fam, br, opts.integrator);
  return br;
}

// ---------------------------------------------------------------------------
// Arclength sweep

Branch sweep_arclength(const SystemFamily& fam, double from, double to, const ContinuationOptions& opts,
                       const std::optional<FourierAnsatz>& initial) {
  require(opts.initial_step > 0.0 && opts.max_step >= opts.initial_step, "invalid continuation step sizes");
  require(from != to, "continuation range is empty");
  Branch br;
  br.parameter = fam.parameter;
  const double lo = std::min(from, to), hi = std::max(from, to);
  const double dir = to > from ? 1.0 : -1.0;
  const double tol = opts.hb.tol;

  HBSolution start = hb_solve(fam.system(from), fam.omega(from), opts.K, initial, opts.hb);
  if (!start.converged) {
    br.message = "no converged solution at the start: " + start.message;
    return br;
  }
  const int dim = start.ansatz.dim;
  int K = opts.K;
  auto samples_for = [&](int k) { return opts.hb.samples > 0 ? opts.hb.samples : default_samples(k); };
  Extended ext(fam, dim, K, samples_for(K));

  Vec z = pack(start.ansatz, from);
  Vec seed = Vec::Zero(z.size());
  seed[z.size() - 1] = dir;
  Vec t = ext.tangent(z, seed);

  BranchPoint first = make_point(from, std::move(start));
  first.tangent_param = t[t.size() - 1];
  br.points.push_back(std::move(first));

  auto tangent_param = [](const Vec& v) { return v[v.size() - 1]; };
  auto in_range = [&](double l) { return l >= lo - 1e-12 && l <= hi + 1e-12; };

  double ds = opts.initial_step;
  int halvings = 0, successes = 0;
  while (static_cast<int>(br.points.size()) < opts.max_points) {
    const Vec z_pred = z + ds * t;
    const Extended::Corrected c = ext.correct(z_pred, t, tol);
    Vec t_new;
    bool ok = c.ok;
    if (ok) {
      t_new = ext.tangent(c.z, t);
      // Large tangent turns mean the corrector jumped between sheets.
      ok = t_new.dot(t) > 0.9;
    }
    if (!ok) {
      ds *= 0.5;
      successes = 0;
      if (++halvings > opts.max_halvings || ds < opts.min_step) {
        br.message = "stopped after " + std::to_string(halvings) + " consecutive step halvings";
        break;
      }
      continue;
    }
    halvings = 0;

    const double l_new = c.z[c.z.size() - 1];
    if (!in_range(l_new)) {
      // Land on the end of the range when the branch leaves through it.
      const double edge = l_new > hi ? hi : lo;
      const FourierAnsatz guess = ext.ansatz(z);
      HBSolution s = hb_solve(fam.system(edge), fam.omega(edge), K, guess, opts.hb);
      if (s.converged && std::abs(edge - z[z.size() - 1]) > 1e-14) {
        BranchPoint p = make_point(edge, std::move(s));
        p.arclength = br.points.back().arclength + (pack(p.solution.ansatz, edge) - z).norm();
        p.tangent_param = tangent_param(t);
        br.points.push_back(std::move(p));
      }
      br.message = "left the parameter range at " + format_double(edge);
      break;
    }

    // Fold between the previous point and this one: refine by bisection on the step length.
    if (tangent_param(t) * tangent_param(t_new) < 0.0) {
      double a = 0.0, b = ds;
      Vec zf = c.z, tf = t_new;
      for (int it = 0; it < 60 && b - a > 1e-13 * std::max(1.0, ds); ++it) {
        const double m = 0.5 * (a + b);
        const Extended::Corrected cm = ext.correct(z + m * t, t, tol);
        if (!cm.ok) break;
        const Vec tm = ext.tangent(cm.z, t);
        zf = cm.z;
        tf = tm;
        if (std::abs(tangent_param(tm)) < 1e-12) break;
        if (tangent_param(tm) * tangent_param(t) > 0.0)
          a = m;
        else
          b = m;
      }
      FoldPoint f;
      f.param = zf[zf.size() - 1];
      f.arclength = br.points.back().arclength + (zf - z).norm();
      f.amplitude = amplitude(ext.ansatz(zf));
      f.after = br.points.size() - 1;
      br.folds.push_back(std::move(f));
    }

    BranchPoint p = make_point(l_new, package(fam.system(l_new), ext.ansatz(c.z), ext.samples(), "arclength"));
    p.solution.converged = true;
    p.solution.iterations = c.iterations;
    p.arclength = br.points.back().arclength + (c.z - z).norm();
    p.tangent_param = tangent_param(t_new);
    p.fold = !br.folds.empty() && br.folds.back().after + 1 == br.points.size();
    br.points.push_back(std::move(p));
    z = c.z;
    t = t_new;

    if (c.iterations <= 3 && ++successes >= 3) {
      ds = std::min(1.3 * ds, opts.max_step);
      successes = 0;
    } else if (c.iterations > 6) {
      ds *= 0.7;
    }

    if (opts.auto_raise_K && K < opts.max_K &&
        top_harmonic_energy_fraction(br.points.back().solution.ansatz) > opts.energy_threshold) {
      const int K_new = std::min(K + 2, opts.max_K);
      const double l = z[z.size() - 1];
      HBSolution s = hb_solve(fam.system(l), fam.omega(l), K_new, ext.ansatz(z), opts.hb);
      if (s.converged) {
        t = pad_tangent(t, dim, K, K_new);
        K = K_new;
        ext = Extended(fam, dim, K, samples_for(K));
        z = pack(s.ansatz, l);
        t = ext.tangent(z, t);
        br.points.back().solution = std::move(s);
      }
    }
  }
  if (br.message.empty()) br.message = "reached the point limit";
  if (opts.tag_stability) tag_stability(fam, br, opts.integrator);
  return br;
}

void tag_stability(const SystemFamily& fam, Branch& branch, const IntegratorOptions& opts) {
  for (auto& p : branch.points) classify(fam, p, opts);
}

StabilityChange refine_stability_change(const SystemFamily& fam, const Branch& branch, std::size_t i,
                                        const ContinuationOptions& opts, double tol) {
  require(i + 1 < branch.points.size(), "stability change index out of range");
  const BranchPoint& p0 = branch.points[i];
  const BranchPoint& p1 = branch.points[i + 1];
  StabilityChange out;
  if (p0.stability == p1.stability || p0.stability == Stability::unknown || p1.stability == Stability::unknown ||
      p1.fold)
    return out;
  double a = p0.param, b = p1.param;
  FourierAnsatz xa = p0.solution.ansatz;
  double mult = p0.max_multiplier;
  while (std::abs(b - a) > tol) {
    const double m = 0.5 * (a + b);
    const HBSolution s = hb_solve(fam.system(m), fam.omega(m), xa.K, xa, opts.hb);
    if (!s.converged) return out;
    BranchPoint pm = make_point(m, s);
    classify(fam, pm, opts.integrator);
    mult = pm.max_multiplier;
    if (pm.stability == p0.stability) {
      a = m;
      xa = s.ansatz;
    } else {
      b = m;
    }
  }
  out.param = 0.5 * (a + b);
  out.width = std::abs(b - a);
  out.max_multiplier = mult;
  out.found = true;
  return out;
}

// ---------------------------------------------------------------------------
// Softening Duffing in the forcing amplitude

DuffingBranches duffing_amplitude_sweep(double c, double omega2, double kappa, double Omega, double f_max,
                                        const ContinuationOptions& opts) {
  require(kappa < 0.0, "the three-branch sweep needs a softening spring (kappa < 0)");
  require(omega2 > 0.0 && f_max > 0.0, "invalid Duffing sweep parameters");
  const MechanicalSystem base = build_duffing(c, omega2, kappa, 1.0, Omega);
  const SystemFamily fam = amplitude_family(base, Omega);
  const double q_eq = std::sqrt(-omega2 / kappa);

  auto run = [&](double q0) {
    FourierAnsatz x = FourierAnsatz::zeros(1, opts.K, Omega);
    x.c0(0) = 2.0 * q0;
    return sweep_arclength(fam, 0.0, f_max, opts, x);
  };
  DuffingBranches out;
  out.trivial = run(0.0);
  out.positive = run(q_eq);
  out.negative = run(-q_eq);
  return out;
}

// ---------------------------------------------------------------------------
// Output

std::string branch_csv(const Branch& b) {
  std::ostringstream os;
  const int N = b.points.empty() ? 1 : b.points.front().solution.ansatz.dim;
  os << b.parameter;
  for (int j = 1; j <= N; ++j) os << ",amp_" << j;
  for (int j = 1; j <= N; ++j) os << ",mean_" << j;
  os << ",stable,fold,max_multiplier\n";
  for (const auto& p : b.points) {
    os << format_double(p.param);
    for (int j = 0; j < N; ++j) os << "," << format_double(p.solution.amplitude[j]);
    const Vec mean = p.solution.ansatz.mean();
    for (int j = 0; j < N; ++j) os << "," << format_double(mean[j]);
    const int st = p.stability == Stability::stable ? 1 : p.stability == Stability::unstable ? 0 : -1;
    os << "," << st << "," << (p.fold ? 1 : 0) << "," << format_double(p.max_multiplier) << "\n";
  }
  return os.str();
}

Json branch_to_json(const Branch& b) {
  Json j;
  j["parameter"] = b.parameter;
  j["message"] = b.message;
  Json pts = Json::array();
  for (const auto& p : b.points) {
    pts.push_back({{"param", p.param},
                   {"stability", to_string(p.stability)},
                   {"max_multiplier", p.max_multiplier},
                   {"arclength", p.arclength},
                   {"tangent_param", p.tangent_param},
                   {"fold", p.fold},
                   {"solution", solution_to_json(p.solution)}});
  }
  j["points"] = std::move(pts);
  Json folds = Json::array();
  for (const auto& f : b.folds)
    folds.push_back({{"param", f.param}, {"arclength", f.arclength}, {"amplitude", vector_to_json(f.amplitude)},
                     {"after", f.after}});
  j["folds"] = std::move(folds);
  return j;
}

}  // namespace perorbit
