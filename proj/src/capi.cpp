#include "perorbit/perorbit.h"

#include "perorbit/continuation.hpp"
#include "perorbit/existence.hpp"
#include "perorbit/floquet.hpp"
#include "perorbit/harmonic_balance.hpp"
#include "perorbit/json_io.hpp"
#include "perorbit/repro.hpp"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

using namespace perorbit;

struct po_system {
  MechanicalSystem sys;
};

namespace {

thread_local std::string g_last_error;

po_status set_error(po_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

po_status from_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return PO_INVALID_ARGUMENT;
    case ErrorCode::parse: return PO_PARSE_ERROR;
    case ErrorCode::not_converged: return PO_NOT_CONVERGED;
    case ErrorCode::numerical: return PO_NUMERICAL_ERROR;
    case ErrorCode::io: return PO_IO_ERROR;
  }
  return PO_INTERNAL_ERROR;
}

// Runs fn and translates exceptions into status codes.
template <class F>
po_status guarded(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    return set_error(from_code(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(PO_PARSE_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PO_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PO_INTERNAL_ERROR, e.what());
  } catch (...) {
    return set_error(PO_INTERNAL_ERROR, "unknown exception");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

HBOptions hb_options(const po_hb_options* o) {
  HBOptions h;
  if (!o) return h;
  require(o->tol > 0.0, "tol must be positive");
  require(o->max_iter > 0, "max_iter must be positive");
  require(o->samples >= 0, "samples must be nonnegative");
  h.tol = o->tol;
  h.max_iter = o->max_iter;
  h.samples = o->samples;
  return h;
}

ContinuationOptions continuation_options(const po_sweep_options& o) {
  ContinuationOptions c;
  require(o.K >= 1, "K must be at least 1");
  require(o.initial_step > 0.0 && o.max_step > 0.0, "steps must be positive");
  require(o.max_points > 1, "max_points must exceed 1");
  c.K = o.K;
  c.initial_step = o.initial_step;
  c.max_step = o.max_step;
  c.max_points = o.max_points;
  c.tag_stability = o.tag_stability != 0;
  c.hb = hb_options(&o.hb);
  if (o.rtol > 0.0) c.integrator.rtol = o.rtol;
  if (o.atol > 0.0) c.integrator.atol = o.atol;
  return c;
}

std::vector<double> span(const double* p, size_t n, const char* what) {
  require(p != nullptr && n > 0, std::string(what) + " grid is empty");
  return {p, p + n};
}

}  // namespace

extern "C" {

const char* po_version(void) { return kVersion; }

const char* po_status_string(po_status s) {
  switch (s) {
    case PO_OK: return "ok";
    case PO_INVALID_ARGUMENT: return "invalid argument";
    case PO_PARSE_ERROR: return "parse error";
    case PO_NOT_CONVERGED: return "not converged";
    case PO_NUMERICAL_ERROR: return "numerical error";
    case PO_IO_ERROR: return "i/o error";
    case PO_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* po_last_error(void) { return g_last_error.c_str(); }

void po_string_free(char* s) { std::free(s); }

po_status po_system_builtin(const char* name, const char* params_json, po_system** out) {
  return guarded([&] {
    require(name && out, "name and output handle are required");
    std::map<std::string, double> params;
    if (params_json && *params_json) {
      const Json j = Json::parse(params_json);
      require(j.is_object(), "builtin parameters must be a JSON object");
      for (const auto& [k, v] : j.items()) {
        require(v.is_number(), "builtin parameter '" + k + "' is not a number");
        params[k] = v.get<double>();
      }
    }
    *out = new po_system{build_builtin(name, params)};
    return PO_OK;
  });
}

po_status po_system_from_json(const char* text, po_system** out) {
  return guarded([&] {
    require(text && out, "text and output handle are required");
    *out = new po_system{system_from_json_text(text)};
    return PO_OK;
  });
}

po_status po_system_custom(int dim, const double* mass, const double* damping, po_force_fn force,
                           po_jacobian_fn jacobian, po_potential_fn potential, void* user, const char* forcing_json,
                           po_system** out) {
  return guarded([&] {
    require(dim >= 1, "dim must be positive");
    require(mass && damping && force && forcing_json && out, "mass, damping, force, forcing and output are required");
    const Mat M = Eigen::Map<const Mat>(mass, dim, dim);
    const Mat C = Eigen::Map<const Mat>(damping, dim, dim);
    Nonlinearity::JacobianFn jac;
    if (jacobian) jac = [jacobian, user](const double* q, double* J) { jacobian(q, J, user); };
    Nonlinearity::PotentialFn pot;
    if (potential) pot = [potential, user](const double* q) { return potential(q, user); };
    Nonlinearity nl = Nonlinearity::custom(
        dim, [force, user](const double* q, double* s) { force(q, s, user); }, jac, pot);
    ForcingSignal f = forcing_from_json(Json::parse(forcing_json), dim);
    *out = new po_system{MechanicalSystem(M, C, std::move(nl), std::move(f), "custom")};
    return PO_OK;
  });
}

void po_system_free(po_system* sys) { delete sys; }

int po_system_dim(const po_system* sys) { return sys ? sys->sys.dim() : 0; }

double po_system_omega(const po_system* sys) { return sys ? sys->sys.forcing().omega() : 0.0; }

po_status po_system_to_json(const po_system* sys, char** out) {
  return guarded([&] {
    require(sys && out, "system and output are required");
    put(out, system_to_json(sys->sys).dump(2));
    return PO_OK;
  });
}

po_status po_builtin_names(char** json_out) {
  return guarded([&] {
    require(json_out, "output is required");
    put(json_out, Json(builtin_names()).dump());
    return PO_OK;
  });
}

po_status po_certify(const po_system* sys, uint64_t seed, char** report_json) {
  return guarded([&] {
    require(sys && report_json, "system and output are required");
    CertifyOptions o;
    o.potential.seed = seed;
    o.scan.seed = seed;
    put(report_json, report_to_json(certify(sys->sys, o)).dump(2));
    return PO_OK;
  });
}

po_status po_counterexample1_threshold(double k1, double k2, double c1, double omega, double kappa, double c2,
                                       double* c_inf, double* f_threshold) {
  return guarded([&] {
    const CounterexampleThreshold t = counterexample1_threshold(k1, k2, c1, omega, kappa, c2);
    if (c_inf) *c_inf = t.c_inf;
    if (f_threshold) *f_threshold = t.f_threshold;
    return PO_OK;
  });
}

po_hb_options po_hb_options_default(void) {
  const HBOptions h;
  return {h.tol, h.max_iter, h.samples};
}

po_status po_hb_solve(const po_system* sys, double omega, int K, const po_hb_options* opts, char** solution_json) {
  return guarded([&] {
    require(sys && solution_json, "system and output are required");
    const HBSolution s = hb_solve(sys->sys, omega, K, std::nullopt, hb_options(opts));
    put(solution_json, solution_to_json(s).dump(2));
    if (!s.converged) return set_error(PO_NOT_CONVERGED, s.message);
    return PO_OK;
  });
}

po_status po_hb_solution_csv(const char* solution_json, int n_samples, char** csv) {
  return guarded([&] {
    require(solution_json && csv, "solution and output are required");
    require(n_samples >= 2, "at least two samples are required");
    put(csv, solution_csv(solution_from_json(Json::parse(solution_json)).ansatz, n_samples));
    return PO_OK;
  });
}

po_status po_hb_study(const po_system* sys, const int* Ks, size_t n, const po_hb_options* opts, char** study_json) {
  return guarded([&] {
    require(sys && Ks && n > 0 && study_json, "system, K list and output are required");
    const auto rows = hb_convergence_study(sys->sys, std::vector<int>(Ks, Ks + n), hb_options(opts));
    Json j = Json::array();
    for (const auto& r : rows)
      j.push_back({{"K", r.K},
                   {"amplitude", r.amplitude},
                   {"residual", r.residual},
                   {"iterations", r.iterations},
                   {"converged", r.converged},
                   {"apparently_converged", r.apparently_converged}});
    put(study_json, j.dump(2));
    return PO_OK;
  });
}

po_sweep_options po_sweep_options_default(void) {
  const ContinuationOptions c;
  const IntegratorOptions io;
  po_sweep_options o;
  o.method = PO_SWEEP_ARCLENGTH;
  o.parameter = PO_PARAM_FREQUENCY;
  o.omega = 0.0;
  o.K = c.K;
  o.initial_step = c.initial_step;
  o.max_step = c.max_step;
  o.max_points = c.max_points;
  o.tag_stability = c.tag_stability ? 1 : 0;
  o.hb = po_hb_options_default();
  o.rtol = io.rtol;
  o.atol = io.atol;
  return o;
}

po_status po_sweep(const po_system* sys, double from, double to, const po_sweep_options* opts, char** branch_json,
                   char** branch_csv_out) {
  return guarded([&] {
    require(sys != nullptr, "system is required");
    const po_sweep_options o = opts ? *opts : po_sweep_options_default();
    const ContinuationOptions c = continuation_options(o);
    SystemFamily fam;
    if (o.parameter == PO_PARAM_AMPLITUDE) {
      fam = amplitude_family(sys->sys, o.omega > 0.0 ? o.omega : sys->sys.forcing().omega());
    } else {
      require(o.parameter == PO_PARAM_FREQUENCY, "unknown sweep parameter");
      fam = frequency_family(sys->sys);
    }
    require(o.method == PO_SWEEP_ARCLENGTH || o.method == PO_SWEEP_NATURAL, "unknown sweep method");
    const Branch b = o.method == PO_SWEEP_NATURAL ? sweep_natural(fam, from, to, c) : sweep_arclength(fam, from, to, c);
    if (branch_json) put(branch_json, branch_to_json(b).dump(2));
    if (branch_csv_out) put(branch_csv_out, branch_csv(b));
    if (b.points.empty()) return set_error(PO_NOT_CONVERGED, b.message.empty() ? "no point converged" : b.message);
    return PO_OK;
  });
}

po_status po_duffing_amplitude_sweep(double c, double omega2, double kappa, double Omega, double f_max,
                                     const po_sweep_options* opts, char** json) {
  return guarded([&] {
    require(json != nullptr, "output is required");
    const po_sweep_options o = opts ? *opts : po_sweep_options_default();
    const DuffingBranches b = duffing_amplitude_sweep(c, omega2, kappa, Omega, f_max, continuation_options(o));
    put(json, Json{{"trivial", branch_to_json(b.trivial)},
                   {"positive", branch_to_json(b.positive)},
                   {"negative", branch_to_json(b.negative)}}
                  .dump(2));
    return PO_OK;
  });
}

po_mathieu_params po_mathieu_params_default(void) {
  const MathieuParams p;
  return {p.omega2, p.c1, p.c2, p.kappa, p.Omega};
}

po_status po_floquet_map(const po_mathieu_params* p, const double* a, size_t na, const double* omega1, size_t nw,
                         double rtol, double atol, int jobs, char** map_csv, char** boundary_csv_out,
                         char** summary_json) {
  return guarded([&] {
    MathieuParams mp;
    if (p) {
      mp.omega2 = p->omega2;
      mp.c1 = p->c1;
      mp.c2 = p->c2;
      mp.kappa = p->kappa;
      mp.Omega = p->Omega;
    }
    IntegratorOptions io;
    if (rtol > 0.0) io.rtol = rtol;
    if (atol > 0.0) io.atol = atol;
    const StabilityMap m = stability_map(mp, span(a, na, "a"), span(omega1, nw, "omega1"), io, jobs < 1 ? 1 : jobs);
    if (map_csv) put(map_csv, stability_map_csv(m));
    if (boundary_csv_out) put(boundary_csv_out, boundary_csv(m));
    if (summary_json) {
      int unstable = 0;
      double liouville = 0.0;
      for (const auto& c : m.cells) {
        unstable += !c.stable;
        liouville = std::max(liouville, c.liouville_defect);
      }
      Json b = Json::array();
      for (const auto& x : m.boundary) b.push_back({{"a", x.a}, {"omega1", x.omega1}, {"max_abs", x.max_abs}});
      put(summary_json, Json{{"cells", m.cells.size()},
                             {"unstable", unstable},
                             {"max_liouville_defect", liouville},
                             {"boundary", b}}
                            .dump(2));
    }
    return PO_OK;
  });
}

po_status po_fejer_demo(int blocks, const int* ns, size_t n, char** json) {
  return guarded([&] {
    require(json != nullptr, "output is required");
    const FejerDemo d = fejer_partial_sum_demo(blocks, ns ? std::vector<int>(ns, ns + n) : std::vector<int>{});
    Json rows = Json::array();
    for (const auto& r : d.rows) rows.push_back({{"n", r.n}, {"partial_sum", r.partial_sum}});
    put(json, Json{{"blocks", d.blocks},
                   {"bandwidth", d.bandwidth},
                   {"sup_norm", d.sup_norm},
                   {"max_partial", d.max_partial},
                   {"argmax_n", d.argmax_n},
                   {"full_sum", d.full_sum},
                   {"rows", rows}}
                  .dump(2));
    return PO_OK;
  });
}

po_status po_repro_subsets(char** json) {
  return guarded([&] {
    require(json != nullptr, "output is required");
    put(json, Json(repro_subsets()).dump());
    return PO_OK;
  });
}

po_status po_repro(const char* subset, const char* out_dir, const char* header, uint64_t seed, int jobs,
                   char** summary_json) {
  return guarded([&] {
    require(subset && summary_json, "subset and output are required");
    ReproOptions o;
    if (out_dir) o.out_dir = out_dir;
    if (header) o.header = header;
    o.seed = seed;
    o.jobs = jobs < 1 ? 1 : jobs;
    put(summary_json, run_repro(subset, o).to_json().dump(2));
    return PO_OK;
  });
}

}  // extern "C"
