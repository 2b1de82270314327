#include "perorbit/repro.hpp"

#include "perorbit/continuation.hpp"
#include "perorbit/existence.hpp"
#include "perorbit/floquet.hpp"
#include "perorbit/harmonic_balance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace perorbit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) { return format_double(x); }

// Short form for labels such as forcing amplitudes.
std::string label(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Collects criteria and artifacts for one subset.
class Session {
 public:
  Session(const ReproOptions& opts, ReproReport& report) : opts_(opts), report_(report) {}

  const ReproOptions& opts() const { return opts_; }

  void write(const std::string& rel, const std::string& body, bool csv = true) {
    if (opts_.out_dir.empty()) return;
    const std::filesystem::path p = std::filesystem::path(opts_.out_dir) / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) fail(ErrorCode::io, "cannot write " + p.string());
    if (csv) f << opts_.header;
    f << body;
    if (!f) fail(ErrorCode::io, "write failed for " + p.string());
    report_.files.push_back(p.string());
  }

  // JSON has no comments, so the header lines travel in a "meta" array.
  void write_json(const std::string& rel, const Json& j) {
    Json out = j;
    if (!opts_.header.empty() && out.is_object()) {
      Json lines = Json::array();
      std::istringstream in(opts_.header);
      for (std::string line; std::getline(in, line);) lines.push_back(line.substr(line.find_first_not_of("# ")));
      out["meta"] = lines;
    }
    write(rel, out.dump(2) + "\n", false);
  }

  CriterionResult& add(int id, std::string title, double limit) {
    CriterionResult c;
    c.id = id;
    c.title = std::move(title);
    c.time_limit = limit;
    report_.criteria.push_back(std::move(c));
    return report_.criteria.back();
  }

 private:
  const ReproOptions& opts_;
  ReproReport& report_;
};

// Applies the runtime limit after the checks have run.
void finish(CriterionResult& c, bool checks, Clock::time_point t0) {
  c.seconds = seconds_since(t0);
  const bool in_time = c.seconds < c.time_limit;
  if (!in_time) c.details.push_back("runtime " + num(c.seconds) + " s exceeds " + num(c.time_limit) + " s");
  c.pass = checks && in_time;
}

Rhs first_order(const MechanicalSystem& sys) {
  const int N = sys.dim();
  const Eigen::MatrixXd Minv = Eigen::MatrixXd(sys.mass()).inverse();
  return [=](double t, const Vec& x, Vec& dx) {
    const Vec q = x.head(N), v = x.tail(N);
    dx.head(N) = v;
    dx.tail(N) = Minv * (sys.forcing().eval(t) - sys.damping() * v - sys.nonlinearity().value(q));
  };
}

// ---------------------------------------------------------------------------
// 1: threshold constants

void thresholds(Session& s) {
  const auto t0 = Clock::now();
  CriterionResult& c = s.add(1, "nonexistence threshold constants", 1.0);
  const Counterexample1Params p;
  const CounterexampleThreshold th = counterexample1_threshold(p.k1, p.k2, p.c1, p.omega, p.kappa, p.c2);
  const CertificateReport rep = certify(build_counterexample1(p));
  const bool c_ok = std::abs(th.c_inf - 1371.7577441) < 1e-4;
  const bool f_ok = std::abs(th.f_threshold - 0.011777) < 1e-6;
  const bool above = rep.overall == Overall::no_periodic_orbit && rep.nonexistence &&
                     rep.nonexistence->reason == NonexistenceReason::counterexample1_threshold &&
                     rep.nonexistence->value > rep.nonexistence->threshold;
  c.details.push_back("c_inf = " + num(th.c_inf) + " (target 1371.7577441 +- 1e-4)");
  c.details.push_back("f_threshold = " + num(th.f_threshold) + " (target 0.011777 +- 1e-6)");
  if (rep.nonexistence)
    c.details.push_back("f_m = " + num(rep.nonexistence->value) + " against truncated threshold " +
                        num(rep.nonexistence->threshold) + ", overall " + to_string(rep.overall));
  finish(c, c_ok && f_ok && above, t0);
  s.write_json("thresholds/thresholds.json", {{"c_inf", th.c_inf},
                                              {"f_threshold", th.f_threshold},
                                              {"terms", th.terms},
                                              {"certificate", report_to_json(rep)}});
}

// ---------------------------------------------------------------------------
// 2: false positive of the HB convergence study

void counter1(Session& s) {
  const auto t0 = Clock::now();
  CriterionResult& c = s.add(2, "false-positive HB convergence study", 60.0);
  const MechanicalSystem sys = build_counterexample1();
  std::vector<int> Ks;
  for (int K = 2; K <= 50; K += 2) Ks.push_back(K);
  const auto rows = hb_convergence_study(sys, Ks);
  const CertificateReport rep = certify(sys);

  bool ok = rep.overall == Overall::no_periodic_orbit;
  std::ostringstream csv;
  csv << "K,amplitude,expected,residual,iterations,converged,apparently_converged\n";
  double worst = 0.0;
  int worst_K = 0;
  bool flags = true;
  for (const auto& r : rows) {
    const double expected = r.K == 2 ? 0.001195 : r.K == 4 ? 0.6168 : 0.6132;
    const double err = std::abs(r.amplitude - expected);
    if (err > worst) {
      worst = err;
      worst_K = r.K;
    }
    ok = ok && err <= 5e-3;
    if (r.K >= 8) flags = flags && r.apparently_converged;
    csv << r.K << "," << num(r.amplitude) << "," << num(expected) << "," << num(r.residual) << "," << r.iterations
        << "," << r.converged << "," << r.apparently_converged << "\n";
  }
  ok = ok && flags;
  c.details.push_back("K = 2 amplitude " + num(rows.front().amplitude) + " (expected 0.001195)");
  c.details.push_back("K = 4 amplitude " + num(rows[1].amplitude) + " (expected 0.6168), converged " +
                      (rows[1].converged ? "yes" : "no"));
  c.details.push_back("K = 50 amplitude " + num(rows.back().amplitude) + " (expected 0.6132), residual " +
                      num(rows.back().residual));
  c.details.push_back("largest deviation " + num(worst) + " at K = " + std::to_string(worst_K) +
                      " (tolerance 5e-3); apparently-converged flag set for K >= 8: " + (flags ? "yes" : "no"));
  c.details.push_back(std::string("certificate: ") + to_string(rep.overall));
  if (!ok && worst > 5e-3) {
    // The projected mean equation has no real root once <x2^2> exceeds the critical value, so
    // every truncation order K >= 3 returns the least-squares point instead of 0.6132.
    c.known_unattainable = true;
    c.details.push_back("the truncated HB equations have no real root for K >= 3; reported amplitudes are "
                        "least-squares minimisers");
  }
  finish(c, ok, t0);
  s.write("counter1/convergence.csv", csv.str());
  s.write_json("counter1/certificate.json", report_to_json(rep));

  if (s.opts().escape_demo) {
    const double T = sys.forcing().period();
    const Trajectory tr = integrate(first_order(sys), Vec::Zero(4), 0.0, 5000 * T, {}, false);
    s.write_json("counter1/escape.json", {{"status", to_string(tr.status)},
                                          {"periods", tr.final_time() / T},
                                          {"steps", tr.steps},
                                          {"final_state", vector_to_json(tr.final_state())}});
  }
}

// ---------------------------------------------------------------------------
// 3: linear truncation failure

void linear_example(Session& s) {
  const auto t0 = Clock::now();
  CriterionResult& c = s.add(3, "linear truncation failure", 5.0);
  const MechanicalSystem sys = build_linear_example();
  bool ok = true;
  std::ostringstream csv;
  csv << "K,amplitude,max_deviation_from_exact,converged\n";
  for (int K : {5, 10, 15, 20, 25, 30}) {
    const HBSolution sol = hb_solve(sys, 1.0, K);
    const Mat rows = reconstruct(sol.ansatz, 8192);
    double dev = 0.0;
    for (int i = 0; i < rows.rows(); ++i) {
      const double t = rows(i, 0);
      dev = std::max(dev, std::abs(rows(i, 1) - 0.0025 * (std::sin(t) + std::sin(20 * t))));
    }
    const double amp = sol.amplitude[0];
    bool row_ok = sol.converged;
    if (K < 20) {
      row_ok = row_ok && std::abs(amp - 0.0025) <= 1e-4;
    } else {
      row_ok = row_ok && dev < 1e-8 && std::abs(amp - 0.0049937) <= 1e-5;
    }
    ok = ok && row_ok;
    c.details.push_back("K = " + std::to_string(K) + ": amplitude " + num(amp) + ", deviation from exact orbit " +
                        num(dev) + (row_ok ? "" : "  <-- out of tolerance"));
    csv << K << "," << num(amp) << "," << num(dev) << "," << sol.converged << "\n";
  }
  finish(c, ok, t0);
  s.write("linear-example/k_study.csv", csv.str());
}

// ---------------------------------------------------------------------------
// 4: Duffing certificates and bounds

double bound_at(const MechanicalSystem& sys) {
  const CertificateReport rep = certify(sys);
  return rep.amplitude_bound ? *rep.amplitude_bound : std::nan("");
}

void duffing_soft(Session& s) {
  CriterionResult& c = s.add(4, "Duffing certificates and amplitude bound", 30.0);
  const auto t0 = Clock::now();

  const auto tc = Clock::now();
  const CertificateReport hard = certify(build_duffing(0.01, 1.0, 1.0, 1.0, 1.0));
  const CertificateReport soft = certify(build_duffing(0.01, 1.0, -1.0, 1.0, 1.0));
  const double cert_seconds = seconds_since(tc);

  const bool hard_ok = hard.overall == Overall::exists && hard.r == 0.0 && hard.amplitude_bound.has_value();
  const bool soft_ok = soft.overall == Overall::exists && std::abs(soft.c3star.r_star - 1.0 / std::sqrt(3.0)) < 1e-12 &&
                       std::abs(soft.r - 1.0) < 1e-12 && soft.amplitude_bound.has_value();
  c.details.push_back(std::string("kappa = +1: ") + to_string(hard.overall) + ", r = " + num(hard.r) +
                      ", bound = " + (hard.amplitude_bound ? num(*hard.amplitude_bound) : "none"));
  c.details.push_back(std::string("kappa = -1: ") + to_string(soft.overall) + ", r* = " + num(soft.c3star.r_star) +
                      ", r = " + num(soft.r) + ", bound = " + (soft.amplitude_bound ? num(*soft.amplitude_bound) : "none"));
  c.details.push_back("certificates took " + num(cert_seconds) + " s (limit 1 s)");

  // Hardening sweep with the stated parameters; each orbit is compared with the bound at its own period.
  const MechanicalSystem base = build_duffing(0.01, 1.0, 1.0, 1.0, 0.6);
  const SystemFamily fam = frequency_family(base);
  const Branch hb = sweep_arclength(fam, 0.6, 8.25);
  int violations = 0;
  double worst_ratio = 0.0;
  for (const auto& p : hb.points) {
    const double b = bound_at(fam.system(p.param));
    const double ratio = p.solution.amplitude[0] / b;
    worst_ratio = std::max(worst_ratio, ratio);
    violations += !(ratio < 1.0);
  }

  // Softening sweep in the forcing amplitude at Omega = 1 from the three equilibria.
  ContinuationOptions o;
  o.max_step = 0.02;
  const DuffingBranches soft_br = duffing_amplitude_sweep(0.01, 1.0, -1.0, 1.0, 0.5, o);
  const MechanicalSystem soft_base = build_duffing(0.01, 1.0, -1.0, 1.0, 1.0);
  const SystemFamily soft_fam = amplitude_family(soft_base, 1.0);
  bool limits = true;
  const std::pair<const Branch*, double> starts[] = {
      {&soft_br.trivial, 0.0}, {&soft_br.positive, 1.0}, {&soft_br.negative, -1.0}};
  std::size_t soft_points = 0;
  for (const auto& [br, q0] : starts) {
    if (br->points.empty()) {
      limits = false;
      continue;
    }
    limits = limits && std::abs(br->points.front().solution.ansatz.mean()[0] - q0) < 1e-9;
    for (const auto& p : br->points) {
      ++soft_points;
      if (p.param <= 0.0) continue;  // no forcing, no bound to compare with
      const double ratio = p.solution.amplitude[0] / bound_at(soft_fam.system(p.param));
      worst_ratio = std::max(worst_ratio, ratio);
      violations += !(ratio < 1.0);
    }
  }
  c.details.push_back("swept orbits: " + std::to_string(hb.points.size() + soft_points) + ", bound violations " +
                      std::to_string(violations) + ", largest amplitude / bound = " + num(worst_ratio));
  c.details.push_back(std::string("softening branches start at the equilibria 0, +1, -1: ") + (limits ? "yes" : "no"));
  finish(c, hard_ok && soft_ok && cert_seconds < 1.0 && violations == 0 && limits, t0);

  s.write_json("duffing-soft/certificates.json", {{"kappa_plus", report_to_json(hard)}, {"kappa_minus", report_to_json(soft)}});
  s.write("duffing-soft/trivial.csv", branch_csv(soft_br.trivial));
  s.write("duffing-soft/positive.csv", branch_csv(soft_br.positive));
  s.write("duffing-soft/negative.csv", branch_csv(soft_br.negative));
  s.write("duffing-soft/hardening_c0.01_f1.csv", branch_csv(hb));
}

// ---------------------------------------------------------------------------
// 5: Duffing frequency response curves

struct Anchor {
  double f, omega, amp;
  bool stable;  // solid line
};

// Tabulated frequency-response data (Omega, max q) for c = 0.02, omega^2 = 1, kappa = 1.
const Anchor kAnchors[] = {
#include "frf_anchors.inc"
};

// Spot checks away from stability changes: (f, Omega, amplitude) of table rows.
const Anchor kSpots[] = {
    {1.0, 0.6, 0.9384967793951, true},
    {1.0, 0.903081285457935, 1.06429766501611, true},
    {1.0, 1.56258598538301, 1.68788906850593, true},
    {1.0, 2.82191517709147, 3.18020841398973, true},
    {1.0, 5.1301513553287, 5.95135853456293, true},
    {1.0, 2.1323157324608, 0.287070543246399, true},
    {1.0, 4.06111087945702, 0.0645594290095293, true},
    {1.0, 8.21746165455097, 0.0150315492033481, true},
    {1.0, 2.38436606447296, 2.42229227951784, false},
    {1.0, 4.33599414591443, 4.94578887901755, false},
    {1.0, 1.83059907182369, 1.51048751121727, false},
    {0.1, 0.92924460291885, 0.395938504698883, true},
    {0.1, 1.61241883236415, 1.50838326562746, true},
    {0.1, 1.24385621361276, 0.192438770776089, true},
    {0.1, 3.60663937152344, 0.00832777234897009, true},
    {0.1, 1.56130738425346, 1.36771287090931, false},
    {0.1, 1.25886747834914, 0.786685570868225, false},
    {0.01, 0.871622564702805, 0.0412910020404631, true},
    {0.01, 1.13468496713133, 0.0347782085690187, true},
    {0.01, 1.0508527097915, 0.332397817552563, false},
};

struct Fold {
  double f, omega, amp;
};
const Fold kFolds[] = {{1.0, 6.63849714585131, 7.74223765222456}, {0.1, 2.21142996842709, 2.31700508517089}};

// Nearest branch point in the (Omega, amplitude) plane, both scaled by the anchor.
std::size_t nearest_point(const Branch& b, double omega, double amp) {
  std::size_t best = 0;
  double bd = 1e300;
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    const double dw = (b.points[i].param - omega) / omega;
    const double da = (b.points[i].solution.amplitude[0] - amp) / amp;
    const double d = dw * dw + da * da;
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

// Distance from the anchor to the polyline of the branch in the (Omega, amplitude) plane.
double curve_distance(const Branch& b, double omega, double amp) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < b.points.size(); ++i) {
    const double x0 = b.points[i].param, y0 = b.points[i].solution.amplitude[0];
    const double x1 = b.points[i + 1].param, y1 = b.points[i + 1].solution.amplitude[0];
    const double ux = x1 - x0, uy = y1 - y0;
    const double len2 = ux * ux + uy * uy;
    double w = len2 > 0 ? ((omega - x0) * ux + (amp - y0) * uy) / len2 : 0.0;
    w = std::clamp(w, 0.0, 1.0);
    best = std::min(best, std::hypot(x0 + w * ux - omega, y0 + w * uy - amp));
  }
  return best;
}

void duffing_frf(Session& s) {
  CriterionResult& c = s.add(5, "Duffing frequency-response curves", 600.0);
  const auto t0 = Clock::now();
  const double damping = 0.02;
  ContinuationOptions o;
  o.max_step = 0.02;

  struct Run {
    double f, hi;
    Branch branch;
    SystemFamily fam;
  };
  std::vector<Run> runs = {{1.0, 8.25, {}, {}}, {0.1, 8.1, {}, {}}, {0.01, 3.0, {}, {}}};
  for (auto& r : runs) {
    r.fam = frequency_family(build_duffing(damping, 1.0, 1.0, r.f, 0.6));
    r.branch = sweep_arclength(r.fam, 0.6, r.hi, o);
    std::ostringstream name;
    name << "duffing-frf/branch_f" << r.f << ".csv";
    s.write(name.str(), branch_csv(r.branch));
    s.write_json(name.str().substr(0, name.str().size() - 4) + ".json", branch_to_json(r.branch));
  }
  auto run_for = [&](double f) -> Run& {
    for (auto& r : runs)
      if (r.f == f) return r;
    fail(ErrorCode::invalid_argument, "no sweep for this forcing amplitude");
  };

  // Anchors: HB at the anchor's own Omega, warm-started from the nearest computed point.
  std::ostringstream acsv;
  acsv << "f,Omega,table_amplitude,hb_amplitude,relative_error,curve_distance,solid\n";
  bool anchors_ok = true;
  for (double f : {1.0, 0.1, 0.01}) {
    Run& r = run_for(f);
    int total = 0, within = 0;
    double worst = 0.0;
    for (const auto& a : kAnchors) {
      if (a.f != f) continue;
      ++total;
      const std::size_t i = nearest_point(r.branch, a.omega, a.amp);
      const HBSolution sol = hb_solve(r.fam.system(a.omega), a.omega, r.branch.points[i].solution.ansatz.K,
                                      r.branch.points[i].solution.ansatz);
      const double vert = sol.converged ? std::abs(sol.amplitude[0] - a.amp) / a.amp : 1e300;
      const double dist = curve_distance(r.branch, a.omega, a.amp) / a.amp;
      const double err = std::min(vert, dist);
      worst = std::max(worst, err);
      within += err <= 0.01;
      acsv << num(f) << "," << num(a.omega) << "," << num(a.amp) << ","
           << (sol.converged ? num(sol.amplitude[0]) : "nan") << "," << num(vert) << "," << num(dist) << ","
           << a.stable << "\n";
    }
    const bool ok = within >= 10;
    anchors_ok = anchors_ok && ok;
    c.details.push_back("f = " + label(f) + ": " + std::to_string(within) + " of " + std::to_string(total) +
                        " table points within 1%, worst " + num(worst) + "; " +
                        std::to_string(r.branch.points.size()) + " branch points, " +
                        std::to_string(r.branch.folds.size()) + " folds");
  }

  bool folds_ok = true;
  for (const auto& fd : kFolds) {
    const Branch& b = run_for(fd.f).branch;
    double best = 1e300;
    const FoldPoint* hit = nullptr;
    for (const auto& fp : b.folds) {
      const double d = std::hypot((fp.param - fd.omega) / fd.omega, (fp.amplitude[0] - fd.amp) / fd.amp);
      if (d < best) {
        best = d;
        hit = &fp;
      }
    }
    const bool ok = hit && std::abs(hit->param - fd.omega) / fd.omega <= 0.01 &&
                    std::abs(hit->amplitude[0] - fd.amp) / fd.amp <= 0.01;
    folds_ok = folds_ok && ok;
    c.details.push_back("f = " + label(fd.f) + " fold: " +
                        (hit ? "(" + num(hit->param) + ", " + num(hit->amplitude[0]) + ")" : std::string("none")) +
                        " against (" + num(fd.omega) + ", " + num(fd.amp) + ")");
  }

  int spot_ok = 0;
  std::ostringstream scsv;
  scsv << "f,Omega,amplitude,table_stable,computed_stable,max_multiplier\n";
  for (const auto& sp : kSpots) {
    Run& r = run_for(sp.f);
    const std::size_t i = nearest_point(r.branch, sp.omega, sp.amp);
    const HBSolution sol = hb_solve(r.fam.system(sp.omega), sp.omega, r.branch.points[i].solution.ansatz.K,
                                    r.branch.points[i].solution.ansatz);
    bool stable = false;
    double mult = std::nan("");
    if (sol.converged) {
      const MonodromyResult m = orbit_monodromy(r.fam.system(sp.omega), sol.ansatz);
      stable = m.stable;
      mult = m.max_abs;
    }
    spot_ok += sol.converged && stable == sp.stable;
    scsv << num(sp.f) << "," << num(sp.omega) << "," << num(sp.amp) << "," << sp.stable << "," << stable << ","
         << num(mult) << "\n";
  }
  const int n_spots = static_cast<int>(std::size(kSpots));
  c.details.push_back("stability tags matching solid/dashed membership: " + std::to_string(spot_ok) + " of " +
                      std::to_string(n_spots));

  // Refine every stability change on fold-free segments.
  std::ostringstream chcsv;
  chcsv << "f,Omega,bracket,max_multiplier\n";
  int changes = 0, localised = 0;
  for (auto& r : runs) {
    for (std::size_t i = 0; i + 1 < r.branch.points.size(); ++i) {
      const auto& p0 = r.branch.points[i];
      const auto& p1 = r.branch.points[i + 1];
      if (p0.stability == p1.stability || p1.fold || p0.fold) continue;
      ++changes;
      const StabilityChange ch = refine_stability_change(r.fam, r.branch, i, o, 5e-5);
      localised += ch.found && ch.width < 1e-4;
      chcsv << num(r.f) << "," << num(ch.param) << "," << num(ch.width) << "," << num(ch.max_multiplier) << "\n";
    }
  }
  c.details.push_back("stability changes away from folds: " + std::to_string(changes) + ", localised within 1e-4: " +
                      std::to_string(localised));
  s.write("duffing-frf/anchors.csv", acsv.str());
  s.write("duffing-frf/stability_spots.csv", scsv.str());
  s.write("duffing-frf/stability_changes.csv", chcsv.str());

  // The stated damping 0.01 moves the f = 1 fold out of the tabulated range.
  const Branch caption = sweep_arclength(frequency_family(build_duffing(0.01, 1.0, 1.0, 1.0, 0.6)), 0.6, 12.0, o);
  std::string where = "none";
  if (!caption.folds.empty())
    where = "(" + num(caption.folds.front().param) + ", " + num(caption.folds.front().amplitude[0]) + ")";
  c.details.push_back("diagnostic: with c = 0.01 the first f = 1 fold lies at " + where);

  finish(c, anchors_ok && folds_ok && spot_ok == n_spots && localised == changes, t0);
}

// ---------------------------------------------------------------------------
// 6, 7: Floquet map and orthogonality construction

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

void floquet(Session& s) {
  CriterionResult& c6 = s.add(6, "Floquet invariants on the stability map", 300.0);
  auto t0 = Clock::now();
  const MathieuParams p;
  const StabilityMap map = stability_map(p, linspace(0.0, 0.1, 50), linspace(0.2, 2.0, 50), {}, s.opts().jobs);
  double worst_liouville = 0.0;
  int unstable = 0;
  bool zero_column = true;
  for (std::size_t i = 0; i < map.omega1_grid.size(); ++i)
    zero_column = zero_column && map.cells[i * map.a_grid.size()].stable;
  for (const auto& cell : map.cells) {
    worst_liouville = std::max(worst_liouville, cell.liouville_defect);
    unstable += !cell.stable;
  }
  double worst_boundary = 0.0;
  for (const auto& b : map.boundary) worst_boundary = std::max(worst_boundary, std::abs(b.max_abs - 1.0));
  c6.details.push_back("cells " + std::to_string(map.cells.size()) + ", unstable " + std::to_string(unstable) +
                       ", largest Liouville defect " + num(worst_liouville));
  c6.details.push_back(std::string("a = 0 column stable: ") + (zero_column ? "yes" : "no"));
  c6.details.push_back("boundary points " + std::to_string(map.boundary.size()) + ", largest ||rho| - 1| " +
                       num(worst_boundary));
  finish(c6,
         worst_liouville < 1e-8 && zero_column && unstable > 0 && !map.boundary.empty() && worst_boundary < 1e-8, t0);
  s.write("floquet/stability_map.csv", stability_map_csv(map));
  s.write("floquet/boundary.csv", boundary_csv(map));

  CriterionResult& c7 = s.add(7, "orthogonality-violating forcing at every boundary point", 60.0);
  t0 = Clock::now();
  int ok = 0;
  double worst_defect = 0.0, min_integral = 1e300, max_mean = -1e300;
  std::ostringstream csv;
  csv << "a,omega1,sigma,periodicity_defect,int_y2_sq,integral,mean\n";
  for (const auto& b : map.boundary) {
    try {
      const AdjointSolution y = adjoint_periodic_solution(boundary_ltp(p, b));
      const OrthogonalityForcing f = orthogonality_violating_forcing(y);
      worst_defect = std::max(worst_defect, y.periodicity_defect);
      min_integral = std::min(min_integral, std::abs(f.integral));
      max_mean = std::max(max_mean, f.mean);
      ok += y.periodicity_defect < 1e-6 && std::abs(f.integral) > 1e-6 && f.mean <= 0.0;
      csv << num(b.a) << "," << num(b.omega1) << "," << num(y.sigma) << "," << num(y.periodicity_defect) << ","
          << num(y.int_y2_sq) << "," << num(f.integral) << "," << num(f.mean) << "\n";
    } catch (const Error& e) {
      c7.details.push_back("boundary point (" + num(b.a) + ", " + num(b.omega1) + "): " + e.what());
    }
  }
  c7.details.push_back(std::to_string(ok) + " of " + std::to_string(map.boundary.size()) +
                       " boundary points certified; largest defect " + num(worst_defect) +
                       ", smallest |integral| " + num(min_integral) + ", largest mean " + num(max_mean));
  finish(c7, !map.boundary.empty() && ok == static_cast<int>(map.boundary.size()), t0);
  s.write("floquet/orthogonality.csv", csv.str());
}

// ---------------------------------------------------------------------------
// 8: global-extremum and quadratic-threshold nonexistence

void nonexistence(Session& s) {
  CriterionResult& c = s.add(8, "global-extremum and quadratic-threshold nonexistence", 30.0);
  const auto t0 = Clock::now();
  const CertificateReport pend = certify(build_builtin("pendulum", {{"cp", 1.0}, {"fbar", 2.0}}));
  const bool pend_ok = pend.overall == Overall::no_periodic_orbit && pend.nonexistence &&
                       pend.nonexistence->reason == NonexistenceReason::global_extremum;
  const double q1 = quadratic_forcing_threshold(1.0, 0.0, 1.0, 1.0);
  const double q2 = quadratic_forcing_threshold(1.0, 2.0, 1.0, 1.0);
  const bool hand_ok = q1 == 1.25 && q2 == 2.25;
  c.details.push_back(std::string("pendulum c_p = 1, fbar = 2: ") + to_string(pend.overall));
  c.details.push_back("quadratic thresholds " + num(q1) + " and " + num(q2) + " (hand values 1.25 and 2.25)");

  const double cq = 0.1, w2 = 1.0, kappa = 1.0, W = 1.0;
  const double thr = quadratic_forcing_threshold(w2, cq, kappa, W);
  const MechanicalSystem sys = build_quadratic_oscillator(cq, w2, kappa, 2.0 * thr, W);
  const HBSolution hb = hb_solve(sys, W, 7);
  std::mt19937_64 rng(s.opts().seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int escaped = 0;
  std::ostringstream csv;
  csv << "q0,v0,status,time\n";
  for (int i = 0; i < 10; ++i) {
    Vec x0(2);
    x0 << u(rng), u(rng);
    const Trajectory tr = integrate(first_order(sys), x0, 0.0, 200 * 2 * kPi / W, {}, false);
    escaped += tr.status == IntegrationStatus::escape;
    csv << num(x0[0]) << "," << num(x0[1]) << "," << to_string(tr.status) << "," << num(tr.final_time()) << "\n";
  }
  const bool demo_ok = escaped == 10 || !hb.converged;
  c.details.push_back("f = 2 x threshold (" + num(2.0 * thr) + "): " + std::to_string(escaped) +
                      " of 10 random starts escape; HB K = 7 converged: " + (hb.converged ? "yes" : "no"));
  finish(c, pend_ok && hand_ok && demo_ok, t0);
  s.write("nonexistence/quadratic_escape.csv", csv.str());
  s.write_json("nonexistence/pendulum.json", report_to_json(pend));
}

// ---------------------------------------------------------------------------
// 9: chain certificates

struct ChainSpec {
  std::vector<double> m, c;
  std::vector<SpringLaw> k;
};

ChainSpec random_chain(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> un(1, 10);
  std::uniform_real_distribution<double> um(0.5, 2.0), uc(0.01, 0.5), uk(0.5, 5.0), ukap(0.0, 2.0);
  const int n = un(rng);
  ChainSpec s;
  for (int j = 0; j < n; ++j) s.m.push_back(um(rng));
  for (int j = 0; j <= n; ++j) {
    s.c.push_back(uc(rng));
    s.k.push_back(SpringLaw{{uk(rng), 0.0, ukap(rng)}});
  }
  return s;
}

MechanicalSystem chain_system(const ChainSpec& s, double omega) {
  const int n = static_cast<int>(s.m.size());
  Vec amp = Vec::Zero(n);
  amp[0] = 1.0;
  return build_chain(s.m, s.c, s.k, ForcingSignal::harmonic(2 * kPi / omega, Vec::Zero(n), amp));
}

void chain(Session& s) {
  CriterionResult& c = s.add(9, "chain certificates", 30.0);
  const auto t0 = Clock::now();
  std::mt19937_64 rng(s.opts().seed + 9);
  std::uniform_real_distribution<double> uq(-3.0, 3.0);
  int damping_ok = 0, hessian_ok = 0, exists = 0, right_free = 0, left_free = 0, both_free = 0;
  std::ostringstream csv;
  csv << "n,C0,min_hessian_eig,overall,right_free,left_free,both_free\n";
  const int count = 100;
  for (int i = 0; i < count; ++i) {
    const ChainSpec spec = random_chain(rng);
    const int n = static_cast<int>(spec.m.size());
    const MechanicalSystem sys = chain_system(spec, 1.0);
    const DampingCheck d = check_damping(sys.damping());
    damping_ok += d.verdict == Verdict::pass && d.sign == 1;
    double min_eig = 1e300;
    for (int k = 0; k < 100; ++k) {
      Vec q(n);
      for (int j = 0; j < n; ++j) q[j] = uq(rng);
      const Eigen::MatrixXd H = sys.nonlinearity().jacobian(q);
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff());
    }
    hessian_ok += min_eig > 0.0;
    const CertificateReport rep = certify(sys);
    exists += rep.overall == Overall::exists;

    ChainSpec r = spec, l = spec, b = spec;
    r.c.back() = 0.0;
    r.k.back() = SpringLaw{};
    l.c.front() = 0.0;
    l.k.front() = SpringLaw{};
    b.c.front() = b.c.back() = 0.0;
    b.k.front() = b.k.back() = SpringLaw{};
    const CertificateReport rr = certify(chain_system(r, 1.0));
    const CertificateReport lr = certify(chain_system(l, 1.0));
    const CertificateReport br = certify(chain_system(b, 1.0));
    right_free += rr.overall == Overall::exists;
    left_free += lr.overall == Overall::exists;
    const bool c1_or_c3 = br.c1.verdict == Verdict::fail || br.c3.verdict == Verdict::fail ||
                          br.c3star.verdict == Verdict::fail;
    both_free += br.overall != Overall::exists && c1_or_c3;
    csv << n << "," << num(d.c0) << "," << num(min_eig) << "," << to_string(rep.overall) << ","
        << to_string(rr.overall) << "," << to_string(lr.overall) << "," << to_string(br.overall) << "\n";
  }
  c.details.push_back("damping definite " + std::to_string(damping_ok) + "/100, Hessian definite at 100 points " +
                      std::to_string(hessian_ok) + "/100, exists " + std::to_string(exists) + "/100");
  c.details.push_back("right wall removed exists " + std::to_string(right_free) + "/100, left wall removed exists " +
                      std::to_string(left_free) + "/100, both removed fail C1 or C3 " + std::to_string(both_free) +
                      "/100");
  finish(c,
         damping_ok == count && hessian_ok == count && exists == count && right_free == count && left_free == count &&
             both_free == count,
         t0);
  s.write("chain/random_chains.csv", csv.str());
  s.write_json("chain/builtin_certificate.json", report_to_json(certify(build_builtin("chain"))));
}

// ---------------------------------------------------------------------------
// 10: oracle equivalences

Mat random_spd(int n, std::mt19937_64& rng, double shift) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = u(rng);
  Mat S = A * A.transpose();
  S.diagonal().array() += shift;
  return S;
}

void oracles(Session& s) {
  CriterionResult& c = s.add(10, "oracle equivalences", 120.0);
  const auto t0 = Clock::now();
  using cd = std::complex<double>;
  std::mt19937_64 rng(s.opts().seed + 10);
  std::uniform_real_distribution<double> u(-1.0, 1.0), uw(0.3, 2.0);

  // (a) linear band-limited problems against per-harmonic complex solves.
  double worst_lin = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, H = 1 + trial % 4;
    const Mat M = random_spd(n, rng, 0.5), C = random_spd(n, rng, 0.05) * 0.2, K = random_spd(n, rng, 0.5);
    const double W = uw(rng);
    FourierCoefficients fc;
    fc.c0 = Vec::Zero(n);
    fc.sin_coef = Mat::Zero(H, n);
    fc.cos_coef = Mat::Zero(H, n);
    for (int j = 0; j < n; ++j) {
      fc.c0[j] = u(rng);
      for (int k = 0; k < H; ++k) {
        fc.sin_coef(k, j) = u(rng);
        fc.cos_coef(k, j) = u(rng);
      }
    }
    const MechanicalSystem sys = build_linear(M, C, K, ForcingSignal::fourier(2 * kPi / W, fc));
    const int Khb = H + 2;
    const HBSolution sol = hb_solve(sys, W, Khb);
    FourierAnsatz ref = FourierAnsatz::zeros(n, Khb, W);
    const Vec c0 = Eigen::MatrixXd(K).ldlt().solve(fc.c0);
    for (int j = 0; j < n; ++j) ref.c0(j) = c0[j];
    for (int k = 1; k <= H; ++k) {
      Eigen::MatrixXcd D(n, n);
      Eigen::VectorXcd F(n);
      for (int a = 0; a < n; ++a) {
        F[a] = cd(fc.cos_coef(k - 1, a), -fc.sin_coef(k - 1, a));
        for (int b = 0; b < n; ++b) D(a, b) = cd(K(a, b) - k * k * W * W * M(a, b), k * W * C(a, b));
      }
      const Eigen::VectorXcd Q = D.partialPivLu().solve(F);
      for (int j = 0; j < n; ++j) {
        ref.c(j, k) = Q[j].real();
        ref.s(j, k) = -Q[j].imag();
      }
    }
    const double scale = std::max(1.0, ref.coeffs.cwiseAbs().maxCoeff());
    worst_lin = std::max(worst_lin, (sol.ansatz.coeffs - ref.coeffs).cwiseAbs().maxCoeff() / scale);
  }
  const bool lin_ok = worst_lin <= 1e-10;
  c.details.push_back("(a) 20 random linear problems, largest coefficient error " + num(worst_lin));

  // (b) stable Duffing orbits against 200 periods of time integration.
  double worst_shadow = 0.0;
  bool all_stable = true;
  std::ostringstream csv;
  csv << "Omega,amplitude,max_multiplier,max_deviation\n";
  for (double W : {0.6, 0.9, 1.5, 2.5}) {
    const MechanicalSystem sys = build_duffing(0.01, 1.0, 1.0, 0.01, W);
    const HBSolution sol = hb_solve(sys, W, 15);
    const MonodromyResult m = orbit_monodromy(sys, sol.ansatz);
    all_stable = all_stable && sol.converged && m.stable;
    Vec x0(2);
    x0 << sol.ansatz.eval(0.0)[0], sol.ansatz.velocity(0.0)[0];
    const double T = 2 * kPi / W;
    const Trajectory tr = integrate(first_order(sys), x0, 0.0, 200 * T);
    double dev = tr.status == IntegrationStatus::ok ? 0.0 : 1e300;
    for (int i = 0; i <= 8000 && tr.status == IntegrationStatus::ok; ++i) {
      const double t = 200 * T * i / 8000.0;
      dev = std::max(dev, std::abs(tr.at(t)[0] - sol.ansatz.eval(t)[0]));
    }
    worst_shadow = std::max(worst_shadow, dev);
    csv << num(W) << "," << num(sol.amplitude[0]) << "," << num(m.max_abs) << "," << num(dev) << "\n";
  }
  const bool shadow_ok = all_stable && worst_shadow < 1e-4;
  c.details.push_back("(b) f = 0.01 orbits at Omega = 0.6, 0.9, 1.5, 2.5: all stable " +
                      std::string(all_stable ? "yes" : "no") + ", largest deviation over 200 periods " +
                      num(worst_shadow));

  // (c) bound ordering on every system that carries a bound.
  std::vector<MechanicalSystem> systems;
  for (const auto& name : builtin_names()) systems.push_back(build_builtin(name));
  systems.push_back(build_builtin("duffing", {{"kappa", -1.0}}));
  for (int i = 0; i < 10; ++i) systems.push_back(chain_system(random_chain(rng), uw(rng)));
  double worst_rel = 0.0;
  int with_bound = 0;
  for (const auto& sys : systems) {
    const CertificateReport rep = certify(sys);
    if (!rep.amplitude_bound || !rep.rm_bound) continue;
    ++with_bound;
    const double rhs = *rep.amplitude_bound + rep.period * rep.forcing_l2 / rep.c1.c0;
    worst_rel = std::max(worst_rel, std::abs(*rep.rm_bound - rhs) / *rep.rm_bound);
  }
  const bool bound_ok = with_bound > 0 && worst_rel <= 4 * std::numeric_limits<double>::epsilon();
  c.details.push_back("(c) " + std::to_string(with_bound) + " systems with bounds, largest relative gap " +
                      num(worst_rel));
  finish(c, lin_ok && shadow_ok && bound_ok, t0);
  s.write("oracles/shadowing.csv", csv.str());
}

// ---------------------------------------------------------------------------
// 11: Fejer partial sums

void fejer(Session& s) {
  CriterionResult& c = s.add(11, "Fejer partial-sum demo", 60.0);
  const auto t0 = Clock::now();
  std::vector<int> ns;
  for (int n = 0; n <= 768; n += 16) ns.push_back(n);
  ns.push_back(511);
  std::sort(ns.begin(), ns.end());
  const FejerDemo d = fejer_partial_sum_demo(2, ns);
  // Oracle values from an independent dense-sampling computation.
  const double oracle_sup = 3.0558859801811336, oracle_max = 1.5310862407043202, fraction = 0.5;
  const bool interior = d.argmax_n > 0 && d.argmax_n < d.bandwidth;
  const bool oracle_ok = std::abs(d.sup_norm - oracle_sup) < 1e-9 && std::abs(d.max_partial - oracle_max) < 1e-12;
  const bool exceeds = d.max_partial > fraction * oracle_sup;
  const bool zero = d.full_sum == 0.0;
  c.details.push_back("max_n |S_n(0)| = " + num(d.max_partial) + " at n = " + std::to_string(d.argmax_n) +
                      " of " + std::to_string(d.bandwidth) + "; ||f_f||_inf = " + num(d.sup_norm) +
                      "; pinned fraction 0.5");
  c.details.push_back("full-bandwidth sum S_" + std::to_string(d.bandwidth) + "(0) = " + num(d.full_sum));
  finish(c, interior && oracle_ok && exceeds && zero, t0);
  std::ostringstream csv;
  csv << "n,partial_sum\n";
  for (const auto& r : d.rows) csv << r.n << "," << num(r.partial_sum) << "\n";
  s.write("fejer/partial_sums.csv", csv.str());
}

const std::vector<std::pair<std::string, std::function<void(Session&)>>>& table() {
  static const std::vector<std::pair<std::string, std::function<void(Session&)>>> t = {
      {"thresholds", thresholds}, {"counter1", counter1}, {"linear-example", linear_example},
      {"duffing-soft", duffing_soft}, {"duffing-frf", duffing_frf}, {"floquet", floquet},
      {"nonexistence", nonexistence}, {"chain", chain}, {"oracles", oracles}, {"fejer", fejer}};
  return t;
}

}  // namespace

bool ReproReport::all_pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.pass; });
}

Json ReproReport::to_json() const {
  Json j;
  j["subset"] = subset;
  j["version"] = kVersion;
  Json cs = Json::array();
  for (const auto& c : criteria)
    cs.push_back({{"id", c.id},
                  {"title", c.title},
                  {"pass", c.pass},
                  {"known_unattainable", c.known_unattainable},
                  {"seconds", c.seconds},
                  {"time_limit", c.time_limit},
                  {"details", c.details}});
  j["criteria"] = std::move(cs);
  j["files"] = files;
  j["all_pass"] = all_pass();
  return j;
}

std::vector<std::string> repro_subsets() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : table()) out.push_back(name);
  out.push_back("all");
  return out;
}

ReproReport run_repro(const std::string& subset, const ReproOptions& opts) {
  ReproReport report;
  report.subset = subset;
  Session session(opts, report);
  bool found = false;
  for (const auto& [name, fn] : table()) {
    if (subset != "all" && subset != name) continue;
    found = true;
    fn(session);
  }
  require(found, "unknown repro subset '" + subset + "'");
  std::sort(report.criteria.begin(), report.criteria.end(),
            [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
  if (!opts.out_dir.empty()) {
    const std::filesystem::path p = std::filesystem::path(opts.out_dir) / "summary.json";
    report.files.push_back(p.string());
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p);
    if (!f) fail(ErrorCode::io, "cannot write " + p.string());
    f << report.to_json().dump(2) << "\n";
  }
  return report;
}

}  // namespace perorbit
