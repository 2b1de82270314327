// Command-line front end. Talks to the library only through the C interface.

#include "perorbit/perorbit.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;

struct Failure {
  int exit_code;
  std::string message;
};

// Owns a library-allocated string.
struct CString {
  char* p = nullptr;
  ~CString() { po_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

void check(po_status s, const char* what) {
  if (s == PO_OK) return;
  const int code = s == PO_NOT_CONVERGED ? kExitNotConverged : kExitInput;
  throw Failure{code, std::string(what) + ": " + po_status_string(s) + ": " + po_last_error()};
}

struct SystemDeleter {
  void operator()(po_system* s) const { po_system_free(s); }
};
using SystemPtr = std::unique_ptr<po_system, SystemDeleter>;

struct Config {
  std::string builtin;
  std::string input;
  std::vector<std::string> params;
  std::optional<double> kappa, cp, fbar;
  int K = 7;
  std::optional<double> omega;
  double tol = 1e-10;
  int samples = 0;
  double rtol = 1e-10;
  double atol = 1e-12;
  std::string out;
  std::uint64_t seed = 20240611;
  int jobs = 0;

  // sweep
  double from = 0.0, to = 0.0;
  std::string method = "arclength";
  std::string parameter = "omega";
  double initial_step = 0.01, max_step = 0.05;
  int max_points = 20000;
  bool no_stability = false;

  // hb
  std::string study;
  int csv_samples = 2048;

  // floquet-map
  std::string a_range = "0:0.002:0.1";
  std::string w_range = "0.2:0.036:2";

  std::string subset = "all";
};

std::map<std::string, double> parse_params(const Config& c) {
  std::map<std::string, double> out;
  for (const auto& kv : c.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Failure{kExitInput, "--param expects key=value, got '" + kv + "'"};
    try {
      std::size_t used = 0;
      const std::string v = kv.substr(eq + 1);
      out[kv.substr(0, eq)] = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw Failure{kExitInput, "--param value is not a number: '" + kv + "'"};
    }
  }
  if (c.kappa) out["kappa"] = *c.kappa;
  if (c.cp) out["cp"] = *c.cp;
  if (c.fbar) out["fbar"] = *c.fbar;
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Failure{kExitInput, "cannot open " + path};
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

SystemPtr load_system(const Config& c) {
  po_system* raw = nullptr;
  if (!c.input.empty()) {
    check(po_system_from_json(read_file(c.input).c_str(), &raw), "loading system");
  } else {
    const Json params(parse_params(c));
    check(po_system_builtin(c.builtin.c_str(), params.dump().c_str(), &raw), "building system");
  }
  return SystemPtr(raw);
}

// lo:step:hi inclusive of hi up to rounding.
std::vector<double> parse_range(const std::string& spec, const char* what) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ':');) {
    try {
      parts.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Failure{kExitInput, std::string(what) + ": bad range '" + spec + "'"};
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0])
    throw Failure{kExitInput, std::string(what) + ": expected lo:step:hi, got '" + spec + "'"};
  const long n = std::lround(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9)) + 1;
  std::vector<double> out;
  for (long i = 0; i < n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
  return out;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  if (spec.find(':') != std::string::npos) {
    for (double x : parse_range(spec, "--study")) out.push_back(static_cast<int>(std::lround(x)));
    return out;
  }
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw Failure{kExitInput, "--study: bad K list '" + spec + "'"};
    }
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Everything that influences numbers; output location and thread count do not.
Json config_json(const std::string& command, const Config& c) {
  return {{"command", command},     {"builtin", c.builtin},      {"input", c.input},
          {"params", parse_params(c)}, {"K", c.K},               {"omega", c.omega ? Json(*c.omega) : Json()},
          {"tol", c.tol},           {"samples", c.samples},      {"rtol", c.rtol},
          {"atol", c.atol},         {"seed", c.seed},            {"from", c.from},
          {"to", c.to},             {"method", c.method},        {"parameter", c.parameter},
          {"initial_step", c.initial_step}, {"max_step", c.max_step}, {"max_points", c.max_points},
          {"stability", !c.no_stability}, {"study", c.study},     {"csv_samples", c.csv_samples},
          {"a", c.a_range},         {"omega1", c.w_range},       {"subset", c.subset}};
}

std::string header(const std::string& command, const Config& c) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_json(command, c).dump())));
  std::ostringstream h;
  h << "# perorbit " << po_version() << "\n# config_hash " << hash << "\n# seed " << c.seed << "\n";
  return h.str();
}

Json meta(const std::string& command, const Config& c) {
  Json lines = Json::array();
  std::istringstream in(header(command, c));
  for (std::string line; std::getline(in, line);) lines.push_back(line.substr(2));
  return lines;
}

void write_out(const Config& c, const std::string& name, const std::string& body) {
  const std::filesystem::path p = std::filesystem::path(c.out) / name;
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream f(p, std::ios::binary);
  if (!f || !(f << body)) throw Failure{kExitInput, "cannot write " + p.string()};
  std::cerr << "wrote " << p.string() << "\n";
}

int jobs_of(const Config& c) {
  if (c.jobs > 0) return c.jobs;
  if (const char* env = std::getenv("PERORBIT_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  return 1;
}

po_hb_options hb_opts(const Config& c) {
  po_hb_options o = po_hb_options_default();
  o.tol = c.tol;
  o.samples = c.samples;
  return o;
}

// ---------------------------------------------------------------------------

int cmd_certify(const Config& c) {
  const SystemPtr sys = load_system(c);
  CString out;
  check(po_certify(sys.get(), c.seed, &out.p), "certify");
  Json rep = Json::parse(out.str());
  rep["meta"] = meta("certify", c);
  const std::string text = rep.dump(2) + "\n";
  if (!c.out.empty()) write_out(c, "certificate.json", text);
  std::cout << text;
  return kExitOk;
}

int cmd_hb(const Config& c) {
  const SystemPtr sys = load_system(c);
  const po_hb_options o = hb_opts(c);
  const std::string head = header("hb", c);
  if (!c.study.empty()) {
    const std::vector<int> Ks = parse_int_list(c.study);
    if (Ks.empty()) throw Failure{kExitInput, "--study needs at least one K"};
    CString out;
    check(po_hb_study(sys.get(), Ks.data(), Ks.size(), &o, &out.p), "convergence study");
    const Json rows = Json::parse(out.str());
    std::ostringstream csv;
    csv << head << "K,amplitude,residual,iterations,converged,apparently_converged\n";
    csv.precision(17);
    for (const auto& r : rows)
      csv << r["K"].get<int>() << "," << r["amplitude"].get<double>() << "," << r["residual"].get<double>() << ","
          << r["iterations"].get<int>() << "," << r["converged"].get<bool>() << ","
          << r["apparently_converged"].get<bool>() << "\n";
    if (!c.out.empty()) write_out(c, "convergence.csv", csv.str());
    std::cout << csv.str();
    return kExitOk;
  }

  const double omega = c.omega ? *c.omega : po_system_omega(sys.get());
  CString sol;
  const po_status st = po_hb_solve(sys.get(), omega, c.K, &o, &sol.p);
  if (st != PO_NOT_CONVERGED) check(st, "harmonic balance");
  const std::string failure = st == PO_NOT_CONVERGED ? po_last_error() : "";
  Json j = Json::parse(sol.str());
  if (!c.out.empty()) {
    CString csv;
    check(po_hb_solution_csv(sol.p, c.csv_samples, &csv.p), "time series");
    write_out(c, "solution.csv", head + csv.str());
    Json full = j;
    full["meta"] = meta("hb", c);
    write_out(c, "solution.json", full.dump(2) + "\n");
  }
  const Json summary = {{"K", c.K},
                        {"omega", omega},
                        {"converged", j["converged"]},
                        {"residual_norm", j["residual_norm"]},
                        {"iterations", j["iterations"]},
                        {"amplitude", j["amplitude"]}};
  std::cout << summary.dump(2) << "\n";
  if (st == PO_NOT_CONVERGED) {
    std::cerr << "error: harmonic balance did not converge: " << failure << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_sweep(const Config& c) {
  const SystemPtr sys = load_system(c);
  po_sweep_options o = po_sweep_options_default();
  if (c.method == "natural") {
    o.method = PO_SWEEP_NATURAL;
  } else if (c.method != "arclength") {
    throw Failure{kExitInput, "--method must be arclength or natural"};
  }
  if (c.parameter == "amplitude") {
    o.parameter = PO_PARAM_AMPLITUDE;
    o.omega = c.omega.value_or(0.0);
  } else if (c.parameter != "omega") {
    throw Failure{kExitInput, "--parameter must be omega or amplitude"};
  }
  o.K = c.K;
  o.initial_step = c.initial_step;
  o.max_step = c.max_step;
  o.max_points = c.max_points;
  o.tag_stability = c.no_stability ? 0 : 1;
  o.hb = hb_opts(c);
  o.rtol = c.rtol;
  o.atol = c.atol;
  CString json, csv;
  const po_status st = po_sweep(sys.get(), c.from, c.to, &o, &json.p, &csv.p);
  if (st != PO_NOT_CONVERGED) check(st, "sweep");
  const std::string head = header("sweep", c);
  if (!c.out.empty()) {
    write_out(c, "branch.csv", head + csv.str());
    Json j = Json::parse(json.str());
    j["meta"] = meta("sweep", c);
    write_out(c, "branch.json", j.dump(2) + "\n");
    const Json b = Json::parse(json.str());
    std::cout << Json{{"points", b["points"].size()}, {"folds", b["folds"]}, {"message", b["message"]}}.dump(2) << "\n";
  } else {
    std::cout << head << csv.str();
  }
  if (st == PO_NOT_CONVERGED) {
    std::cerr << "error: " << po_last_error() << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_floquet_map(const Config& c) {
  po_mathieu_params p = po_mathieu_params_default();
  for (const auto& [k, v] : parse_params(c)) {
    if (k == "omega2") p.omega2 = v;
    else if (k == "c1") p.c1 = v;
    else if (k == "c2") p.c2 = v;
    else if (k == "kappa") p.kappa = v;
    else if (k == "Omega") p.Omega = v;
    else throw Failure{kExitInput, "unknown stability-map parameter '" + k + "' (omega2, c1, c2, kappa, Omega)"};
  }
  const std::vector<double> a = parse_range(c.a_range, "--a");
  const std::vector<double> w = parse_range(c.w_range, "--omega1");
  CString map, boundary, summary;
  check(po_floquet_map(&p, a.data(), a.size(), w.data(), w.size(), c.rtol, c.atol, jobs_of(c), &map.p, &boundary.p,
                       &summary.p),
        "stability map");
  const std::string head = header("floquet-map", c);
  if (!c.out.empty()) {
    write_out(c, "stability_map.csv", head + map.str());
    write_out(c, "boundary.csv", head + boundary.str());
    const Json s = Json::parse(summary.str());
    std::cout << Json{{"cells", s["cells"]},
                      {"unstable", s["unstable"]},
                      {"boundary_points", s["boundary"].size()},
                      {"max_liouville_defect", s["max_liouville_defect"]}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << head << map.str();
  }
  return kExitOk;
}

int cmd_repro(const Config& c) {
  const std::string out = c.out.empty() ? "repro_out" : c.out;
  CString summary;
  check(po_repro(c.subset.c_str(), out.c_str(), header("repro", c).c_str(), c.seed, jobs_of(c), &summary.p), "repro");
  const Json s = Json::parse(summary.str());
  std::vector<std::string> failed;
  for (const auto& cr : s["criteria"]) {
    const bool pass = cr["pass"].get<bool>();
    std::printf("%s criterion %d: %s (%.2f s)\n", pass ? "PASS" : "FAIL", cr["id"].get<int>(),
                cr["title"].get<std::string>().c_str(), cr["seconds"].get<double>());
    for (const auto& d : cr["details"]) std::printf("    %s\n", d.get<std::string>().c_str());
    if (!pass) failed.push_back(std::to_string(cr["id"].get<int>()));
  }
  std::printf("artifacts in %s\n", out.c_str());
  if (failed.empty()) return kExitOk;
  std::string list;
  for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
  std::fprintf(stderr, "failed criteria: %s\n", list.c_str());
  return kExitNotConverged;
}

void add_system_options(CLI::App* cmd, Config& c) {
  auto* b = cmd->add_option("--builtin", c.builtin, "built-in system name");
  auto* i = cmd->add_option("--input", c.input, "system JSON file");
  b->excludes(i);
  cmd->add_option("--param", c.params, "builder override key=value (repeatable)");
  cmd->add_option("--kappa", c.kappa, "shortcut for --param kappa=VALUE");
  cmd->add_option("--cp", c.cp, "shortcut for --param cp=VALUE");
  cmd->add_option("--fbar", c.fbar, "shortcut for --param fbar=VALUE");
}

void add_solver_options(CLI::App* cmd, Config& c) {
  cmd->add_option("--K", c.K, "number of harmonics")->check(CLI::Range(1, 1000));
  cmd->add_option("--omega", c.omega, "forcing frequency");
  cmd->add_option("--tol", c.tol, "residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", c.samples, "time samples per period (0 = default)")->check(CLI::NonNegativeNumber);
}

void add_common(CLI::App* cmd, Config& c) {
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "seed for randomized sampling");
  cmd->add_option("--jobs", c.jobs, "worker threads (default: PERORBIT_JOBS or 1)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--rtol", c.rtol, "integrator relative tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--atol", c.atol, "integrator absolute tolerance")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic orbits of forced, damped nonlinear mechanical systems"};
  app.set_version_flag("--version", std::string(po_version()));
  app.require_subcommand(1);
  Config c;

  auto* certify = app.add_subcommand("certify", "existence certificate for a system");
  add_system_options(certify, c);
  add_common(certify, c);

  auto* hb = app.add_subcommand("hb", "harmonic balance solve or convergence study");
  add_system_options(hb, c);
  add_solver_options(hb, c);
  add_common(hb, c);
  hb->add_option("--study", c.study, "K list for a convergence study, e.g. 2,4,8 or 2:2:50");
  hb->add_option("--csv-samples", c.csv_samples, "time samples in solution.csv")->check(CLI::Range(2, 10000000));

  auto* sweep = app.add_subcommand("sweep", "continuation of a branch of periodic orbits");
  add_system_options(sweep, c);
  add_solver_options(sweep, c);
  add_common(sweep, c);
  sweep->add_option("--from", c.from, "start parameter")->required();
  sweep->add_option("--to", c.to, "end parameter")->required();
  sweep->add_option("--method", c.method, "arclength or natural");
  sweep->add_option("--parameter", c.parameter, "omega or amplitude (forcing scale at fixed --omega)");
  sweep->add_option("--initial-step", c.initial_step)->check(CLI::PositiveNumber);
  sweep->add_option("--max-step", c.max_step)->check(CLI::PositiveNumber);
  sweep->add_option("--max-points", c.max_points)->check(CLI::Range(2, 100000000));
  sweep->add_flag("--no-stability", c.no_stability, "skip Floquet stability tags");

  auto* fmap = app.add_subcommand("floquet-map", "Floquet stability map over (a, omega1)");
  add_common(fmap, c);
  fmap->add_option("--a", c.a_range, "a values lo:step:hi");
  fmap->add_option("--omega1", c.w_range, "omega1 values lo:step:hi");
  fmap->add_option("--param", c.params, "omega2, c1, c2, kappa or Omega as key=value");

  auto* repro = app.add_subcommand("repro", "regenerate artifacts and evaluate acceptance criteria");
  add_common(repro, c);
  repro->add_option("subset", c.subset, "counter1, linear-example, duffing-frf, duffing-soft, chain, thresholds, "
                                        "floquet, fejer, nonexistence, oracles or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    const bool needs_system = certify->parsed() || hb->parsed() || sweep->parsed();
    if (needs_system && c.builtin.empty() && c.input.empty())
      throw Failure{kExitInput, "one of --builtin or --input is required"};
    if (certify->parsed()) return cmd_certify(c);
    if (hb->parsed()) return cmd_hb(c);
    if (sweep->parsed()) return cmd_sweep(c);
    if (fmap->parsed()) return cmd_floquet_map(c);
    if (repro->parsed()) return cmd_repro(c);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
