#include "mamf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "mamf/certificates.hpp"
#include "mamf/density_io.hpp"
#include "mamf/experiments.hpp"
#include "mamf/ma_ball.hpp"
#include "mamf/ma_pn.hpp"
#include "mamf/meanfield.hpp"

namespace mamf::cli {

namespace {

using nlohmann::json;
namespace fsys = std::filesystem;

const std::vector<std::string> kCommands = {"solve", "sweep", "stability", "verify-fs", "certify"};

[[noreturn]] void invalid(const std::string& path, const std::string& msg) { throw ConfigError(path, msg); }

void check_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
  if (!obj.is_object()) invalid(path.empty() ? "/" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      invalid(path + "/" + key, "unknown key");
    }
  }
}

double number_at(const json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_number()) invalid(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(path + "/" + key, "expected a finite number");
  return x;
}

long long integer_at(const json& obj, const std::string& key, const std::string& path, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_number_integer()) invalid(path + "/" + key, "expected an integer");
  return v.get<long long>();
}

bool bool_at(const json& obj, const std::string& key, const std::string& path, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) invalid(path + "/" + key, "expected a boolean");
  return obj[key].get<bool>();
}

std::string string_at(const json& obj, const std::string& key, const std::string& path,
                      const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) invalid(path + "/" + key, "expected a string");
  return obj[key].get<std::string>();
}

std::vector<double> numbers_at(const json& obj, const std::string& key, const std::string& path,
                               const std::vector<double>& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_array() || v.empty()) invalid(path + "/" + key, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) invalid(path + "/" + key + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

json sub_object(const json& obj, const std::string& key, const std::string& path,
                const std::vector<std::string>& allowed) {
  if (!obj.contains(key)) return json::object();
  check_keys(obj[key], path + "/" + key, allowed);
  return obj[key];
}

meanfield::Geometry geometry_of(const json& config) {
  return config["geometry"] == "pn" ? meanfield::Geometry::pn : meanfield::Geometry::ball;
}

GridPtr grid_of(const json& config) {
  const auto& g = config["grid"];
  const bool pn = config["geometry"] == "pn";
  return make_grid(pn ? GridKind::pn : GridKind::ball, g["nodes"].get<int>(), g["t_min"].get<double>(),
                   g["t_max"].get<double>(), config["n"].get<int>());
}

meanfield::SolverOptions solver_of(const json& config) {
  const auto& s = config["solver"];
  meanfield::SolverOptions o;
  o.tol = s["tol"].get<double>();
  o.max_iter = s["max_iter"].get<int>();
  o.damping = s["damping"].get<double>();
  o.blowup_cap = s["blowup_cap"].get<double>();
  return o;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      invalid("--eps", "bad number '" + item + "'");
    }
  }
  if (out.empty()) invalid("--eps", "expected a comma-separated list");
  return out;
}

void write_text(const fsys::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_json(const fsys::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json report_json(const meanfield::SolveReport& r) {
  json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["diverged"] = r.diverged;
  j["cause"] = r.cause;
  j["monotone"] = r.monotone;
  j["direction"] = meanfield::to_string(r.direction);
  j["normalization_constant"] = r.normalization_constant;
  j["sup_norm"] = r.sup_norm;
  j["final_residual"] = r.final_residual;
  j["damping"] = r.damping;
  j["damping_escalated"] = r.damping_escalated;
  j["step_trace"] = r.step_trace;
  j["residual_trace"] = r.residual_trace;
  return j;
}

json tagged_json(const cert::Tagged& t) {
  return json{{"value", t.value}, {"heuristic", t.heuristic}, {"provenance", t.provenance}};
}

// Certificate block shared by solve and certify.
json certificates_json(const json& config, const RadialDensity& f, const RadialPotential* u) {
  const int n = config["n"].get<int>();
  const double gamma = config["gamma"].get<double>();
  const auto& c = config["certificates"];
  const bool ball = config["geometry"] == "ball";
  json j;
  j["mode"] = c["mode"];
  if (u != nullptr && gamma > 0.0) {
    j["smallness"] = cert::smallness_certificate(*u, gamma, n);
    j["gamma_sup_norm"] = gamma * u->sup_norm();
  }
  if (ball) {
    const auto emp = cert::empirical_gamma0(f, n);
    j["gamma0_empirical"] = tagged_json(emp);
    if (gamma > 0.0) {
      const auto a = cert::empirical_A(f, gamma, n, cert::default_battery(f.grid()));
      j["empirical_A"] = json{{"value", std::isfinite(a.value) ? json(a.value) : json("inf")},
                              {"argmax", a.argmax},
                              {"label", a.label}};
    }
  }
  if (c["mode"] == "certified") {
    cert::CertificateInputs in;
    in.beta = c["beta"].get<double>();
    in.A = c["A"].get<double>();
    in.gamma = gamma;
    in.n = n;
    in.p = f.p();
    in.mode = cert::Mode::certified;
    j["gamma0_certified"] = tagged_json(cert::gamma0(in));
    if (gamma > 0.0) {
      json b;
      if (ball) {
        b["kind"] = "local";
        b["bound"] = cert::linfty_bound_local(in.A, gamma, n);
      } else if (gamma <= n) {
        b["kind"] = "global";
        b["bound"] = cert::linfty_bound_global_fs(in.A, gamma, n);
      }
      if (b.contains("bound") && u != nullptr) {
        b["min_u"] = u->inf();
        b["margin"] = u->inf() + b["bound"].get<double>();
        b["holds"] = b["margin"].get<double>() >= 0.0;
      }
      if (!b.empty()) j["linfty"] = b;
    }
  }
  return j;
}

int cmd_solve(const json& config, const fsys::path& dir, std::ostream& out) {
  const auto grid = grid_of(config);
  const int n = config["n"].get<int>();
  const auto f = density_from_json(config["density"], grid, n);
  const meanfield::MeanFieldProblem prob{geometry_of(config), n, f, config["gamma"].get<double>(),
                                         config["normalized"].get<bool>(), config["m"].get<double>()};
  const auto s = meanfield::solve(prob, std::nullopt, solver_of(config));
  {
    std::ostringstream csv;
    exper::write_solution_csv(csv, s.u, prob.geometry, n);
    write_text(dir / "solution.csv", csv.str());
  }
  json j;
  j["config"] = config;
  j["report"] = report_json(s.report);
  j["certificates"] = certificates_json(config, f, s.report.diverged ? nullptr : &s.u);
  write_json(dir / "report.json", j);
  out << "solve: " << (s.report.converged ? "converged" : (s.report.diverged ? "diverged" : "not converged"))
      << " after " << s.report.iterations << " iterations, sup|u| = " << exper::format_double(s.report.sup_norm)
      << "\n";
  if (s.report.diverged && config["fail_on_divergence"].get<bool>()) return kExitDivergence;
  return kExitOk;
}

int cmd_sweep(const json& config, const fsys::path& dir, std::ostream& out) {
  if (config["geometry"] != "ball") invalid("/geometry", "sweep runs on the ball");
  const auto grid = grid_of(config);
  const int n = config["n"].get<int>();
  const auto f = density_from_json(config["density"], grid, n);
  const auto& sw = config["sweep"];
  exper::SweepOptions so;
  so.m_lo = sw["m_window"][0].get<double>();
  so.m_hi = sw["m_window"][1].get<double>();
  so.m_steps = sw["m_steps"].get<int>();
  so.threads = config["threads"].get<int>();
  if (config["certificates"]["mode"] == "certified") {
    cert::CertificateInputs in;
    in.beta = config["certificates"]["beta"].get<double>();
    in.A = config["certificates"]["A"].get<double>();
    in.n = n;
    in.mode = cert::Mode::certified;
    so.certified = in;
  }
  const auto res = exper::gamma_sweep(f, n, sw["gammas"].get<std::vector<double>>(), so, solver_of(config));
  std::ostringstream csv;
  exper::write_sweep_csv(csv, res);
  write_text(dir / "sweep.csv", csv.str());
  json j;
  j["config"] = config;
  j["critical_gamma"] = res.critical_gamma;
  j["gamma0_empirical"] = tagged_json(res.gamma0_empirical);
  if (res.gamma0_certified) j["gamma0_certified"] = tagged_json(*res.gamma0_certified);
  write_json(dir / "sweep.json", j);
  out << "sweep: " << res.rows.size() << " rows, largest convergent gamma "
      << exper::format_double(res.critical_gamma) << "\n";
  return kExitOk;
}

int cmd_stability(const json& config, const fsys::path& dir, std::ostream& out) {
  const auto grid = grid_of(config);
  const int n = config["n"].get<int>();
  const auto f = density_from_json(config["density"], grid, n);
  const auto& st = config["stability"];
  const auto mode = exper::stability_mode_from_string(st["mode"].get<std::string>());
  const auto fam = exper::perturbation_family(f, mode, n, st["epsilons"].get<std::vector<double>>(),
                                              config["seed"].get<std::uint64_t>(), solver_of(config));
  std::ostringstream csv;
  exper::write_family_csv(csv, fam);
  write_text(dir / "stability.csv", csv.str());
  json j;
  j["config"] = config;
  j["max_variation"] = fam.max_variation;
  write_json(dir / "stability.json", j);
  out << "stability: " << fam.rows.size() << " perturbations, max ratio variation "
      << exper::format_double(fam.max_variation) << "\n";
  return kExitOk;
}

int cmd_verify_fs(const json& config, const fsys::path& dir, std::ostream& out) {
  const auto grid = grid_of(config);
  const int n = config["n"].get<int>();
  const auto demo = exper::fs_nonuniqueness_demo(n, config["verify_fs"]["epsilons"].get<std::vector<double>>(),
                                                 grid, solver_of(config));
  std::ostringstream csv;
  exper::write_fs_csv(csv, demo);
  write_text(dir / "verify_fs.csv", csv.str());
  json j;
  j["config"] = config;
  j["min_distance"] = demo.min_distance;
  j["distances"] = demo.distances;
  write_json(dir / "verify_fs.json", j);
  out << csv.str();
  out << "min pairwise distance " << exper::format_double(demo.min_distance) << "\n";
  return kExitOk;
}

int cmd_certify(const json& config, const fsys::path& dir, std::ostream& out) {
  const auto grid = grid_of(config);
  const int n = config["n"].get<int>();
  const auto f = density_from_json(config["density"], grid, n);
  // The potential the L^infty theorems speak about: (dd^c phi)^n = mu.
  std::optional<RadialPotential> phi;
  if (config["geometry"] == "ball") {
    phi = ball::solve_dirichlet(cumulative_mass(f, n), n, ball::OriginAtom::reject);
  } else {
    const pn::PnGeometry geom(n);
    auto nu = pn::density_to_measure_pn(f, nullptr, 0.0, geom);
    phi = pn::solve_pn(nu.scaled(geom.volume() / nu.total_mass()), geom);
  }
  json j;
  j["config"] = config;
  j["certificates"] = certificates_json(config, f, &*phi);
  write_json(dir / "certify.json", j);
  out << j["certificates"].dump() << "\n";
  return kExitOk;
}

}  // namespace

json resolve_config(const std::string& command, const json& input, const Overrides& ov) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    invalid("/command", "unknown command '" + command + "'");
  }
  check_keys(input, "",
             {"command", "geometry", "n", "density", "gamma", "normalized", "m", "grid", "solver",
              "certificates", "seed", "output_dir", "threads", "fail_on_divergence", "sweep",
              "stability", "verify_fs"});
  if (input.contains("command") && input["command"] != command) {
    invalid("/command", "config is for '" + input["command"].dump() + "', not '" + command + "'");
  }
  json c;
  c["command"] = command;
  const std::string default_geometry = (command == "verify-fs" || command == "stability") ? "pn" : "ball";
  const std::string geometry = string_at(input, "geometry", "", default_geometry);
  if (geometry != "ball" && geometry != "pn") invalid("/geometry", "expected \"ball\" or \"pn\"");
  if (command == "verify-fs" && geometry != "pn") invalid("/geometry", "verify-fs runs on pn");
  c["geometry"] = geometry;
  const long long n = ov.n ? *ov.n : integer_at(input, "n", "", 1);
  if (n < 1 || n > 16) invalid("/n", "dimension must be in [1, 16]");
  c["n"] = n;
  c["gamma"] = number_at(input, "gamma", "", 0.0);
  c["normalized"] = bool_at(input, "normalized", "", true);
  c["m"] = number_at(input, "m", "", 0.0);

  const bool pn = geometry == "pn";
  const json g = sub_object(input, "grid", "", {"nodes", "t_min", "t_max"});
  const long long nodes = integer_at(g, "nodes", "/grid", 4096);
  if (nodes < 16 || nodes > 10'000'000) invalid("/grid/nodes", "expected an integer >= 16");
  const double t_max = number_at(g, "t_max", "/grid", pn ? 15.0 : 0.0);
  const double t_min = number_at(g, "t_min", "/grid", pn ? -t_max : -20.0);
  if (!pn && t_max != 0.0) invalid("/grid/t_max", "ball grids end at t = 0");
  if (!(t_min < 0.0)) invalid("/grid/t_min", "expected a negative number");
  if (pn && !(t_max > 0.0)) invalid("/grid/t_max", "expected a positive number");
  if (pn && t_min != -t_max) invalid("/grid/t_min", "pn grids are symmetric: t_min = -t_max");
  c["grid"] = {{"nodes", nodes}, {"t_min", t_min}, {"t_max", t_max}};

  const json s = sub_object(input, "solver", "", {"tol", "max_iter", "damping", "blowup_cap"});
  const double tol = number_at(s, "tol", "/solver", 1e-9);
  const long long max_iter = integer_at(s, "max_iter", "/solver", 1000);
  const double damping = number_at(s, "damping", "/solver", 0.0);
  const double cap = number_at(s, "blowup_cap", "/solver", 1e4);
  if (!(tol > 0.0)) invalid("/solver/tol", "expected a positive number");
  if (max_iter < 1 || max_iter > 100'000'000) invalid("/solver/max_iter", "expected a positive integer");
  if (!(damping >= 0.0 && damping < 1.0)) invalid("/solver/damping", "expected a number in [0, 1)");
  if (!(cap > 0.0)) invalid("/solver/blowup_cap", "expected a positive number");
  c["solver"] = {{"tol", tol}, {"max_iter", max_iter}, {"damping", damping}, {"blowup_cap", cap}};

  json density = input.contains("density") ? input["density"] : json{{"preset", "uniform"}};
  c["density"] = density;

  // Building the grid and density validates them against each other.
  double p = 2.0;
  try {
    const auto grid = grid_of(c);
    if (command != "verify-fs") p = density_from_json(c["density"], grid, static_cast<int>(n)).p();
  } catch (const MamfError& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    if (!what.empty() && what[0] == '/' && colon != std::string::npos) {
      invalid(what.substr(0, colon), what.substr(colon + 2));
    }
    invalid("/grid", what);
  }

  const json ce = sub_object(input, "certificates", "", {"mode", "beta", "A"});
  const std::string mode = string_at(ce, "mode", "/certificates", "empirical");
  if (mode != "empirical" && mode != "certified") {
    invalid("/certificates/mode", "expected \"empirical\" or \"certified\"");
  }
  json cj{{"mode", mode}};
  if (mode == "certified") {
    if (!ce.contains("A")) invalid("/certificates/A", "certified mode needs an upper bound A");
    const double A = number_at(ce, "A", "/certificates", 1.0);
    if (!(A >= 1.0)) invalid("/certificates/A", "expected a number >= 1");
    // Default beta = n / q with q the conjugate exponent of p.
    const double beta = number_at(ce, "beta", "/certificates", static_cast<double>(n) * (p - 1.0) / p);
    if (!(beta > 0.0)) invalid("/certificates/beta", "expected a positive number");
    cj["A"] = A;
    cj["beta"] = beta;
  }
  c["certificates"] = cj;

  long long seed = integer_at(input, "seed", "", 0);
  if (seed < 0) invalid("/seed", "expected a nonnegative integer");
  c["seed"] = ov.seed ? static_cast<long long>(*ov.seed) : seed;
  long long threads = integer_at(input, "threads", "", 1);
  if (ov.threads) threads = *ov.threads;
  if (threads < 1 || threads > 1024) invalid("/threads", "expected an integer in [1, 1024]");
  c["threads"] = threads;
  c["fail_on_divergence"] = ov.fail_on_divergence || bool_at(input, "fail_on_divergence", "", false);

  std::string out_dir = string_at(input, "output_dir", "", "");
  if (ov.output_dir) out_dir = *ov.output_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("MAMF_OUTPUT_DIR");
    out_dir = env != nullptr && *env != '\0' ? env : ".";
  }
  c["output_dir"] = out_dir;

  const json sw = sub_object(input, "sweep", "", {"gammas", "m_window", "m_steps"});
  if (command == "sweep") {
    std::vector<double> gammas = numbers_at(sw, "gammas", "/sweep", {0.1, 0.2, 0.3, 0.4, 0.5});
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      if (!(gammas[i] > 0.0) || (i > 0 && !(gammas[i] > gammas[i - 1]))) {
        invalid("/sweep/gammas/" + std::to_string(i), "gammas must be positive and increasing");
      }
    }
    const auto window = numbers_at(sw, "m_window", "/sweep", {-2.0, 2.0});
    if (window.size() != 2 || !(window[0] < window[1])) invalid("/sweep/m_window", "expected [lo, hi] with lo < hi");
    const long long steps = integer_at(sw, "m_steps", "/sweep", 9);
    if (steps < 2 || steps > 100000) invalid("/sweep/m_steps", "expected an integer >= 2");
    c["sweep"] = {{"gammas", gammas}, {"m_window", window}, {"m_steps", steps}};
  }
  const json st = sub_object(input, "stability", "", {"mode", "epsilons"});
  if (command == "stability") {
    const std::string smode = string_at(st, "mode", "/stability", "exp-sign");
    if (smode != "exp-sign" && smode != "dirichlet-normalized") {
      invalid("/stability/mode", "expected \"exp-sign\" or \"dirichlet-normalized\"");
    }
    const auto eps = numbers_at(st, "epsilons", "/stability", {1e-1, 1e-2, 1e-3, 1e-4});
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(std::abs(eps[i]) <= 1.0) || eps[i] == 0.0) {
        invalid("/stability/epsilons/" + std::to_string(i), "expected a nonzero number in [-1, 1]");
      }
    }
    c["stability"] = {{"mode", smode}, {"epsilons", eps}};
  }
  const json vf = sub_object(input, "verify_fs", "", {"epsilons"});
  if (command == "verify-fs") {
    auto eps = ov.epsilons ? *ov.epsilons : numbers_at(vf, "epsilons", "/verify_fs", {0.25, 1.0, 4.0});
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0)) invalid("/verify_fs/epsilons/" + std::to_string(i), "expected a positive number");
    }
    c["verify_fs"] = {{"epsilons", eps}};
  }

  return c;
}

int execute(const json& config, std::ostream& out, std::ostream& err) {
  const fsys::path dir = config["output_dir"].get<std::string>();
  try {
    fsys::create_directories(dir);
    const std::string cmd = config["command"].get<std::string>();
    if (cmd == "solve") return cmd_solve(config, dir, out);
    if (cmd == "sweep") return cmd_sweep(config, dir, out);
    if (cmd == "stability") return cmd_stability(config, dir, out);
    if (cmd == "verify-fs") return cmd_verify_fs(config, dir, out);
    if (cmd == "certify") return cmd_certify(config, dir, out);
    invalid("/command", "unknown command '" + cmd + "'");
  } catch (const ConfigError& e) {
    err << "validation error at " << e.what() << "\n";
    return kExitValidation;
  } catch (const MamfError& e) {
    err << "error: " << e.what() << "\n";
    if (e.kind() == MamfError::Kind::divergent && config["fail_on_divergence"].get<bool>()) {
      return kExitDivergence;
    }
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radial Monge-Ampere mean-field lab"};
  std::string command;
  std::string config_path;
  std::string eps_text;
  std::string output_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  int n = 0;
  bool fail = false;
  app.add_option("command", command, "solve | sweep | stability | verify-fs | certify")
      ->required()
      ->check(CLI::IsMember(kCommands));
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_threads = app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::Range(1, 1024));
  auto* o_seed = app.add_option("--seed", seed, "seed for perturbation directions");
  app.add_flag("--fail-on-divergence", fail, "exit 3 when a solve diverges");
  auto* o_n = app.add_option("--n", n, "dimension")->check(CLI::Range(1, 16));
  auto* o_eps = app.add_option("--eps", eps_text, "comma-separated epsilons for verify-fs");
  auto* o_out = app.add_option("--output-dir", output_dir, "output directory (default $MAMF_OUTPUT_DIR or .)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  try {
    json input = json::object();
    if (*o_config) {
      std::ifstream is(config_path);
      if (!is) invalid("/", "cannot open config file " + config_path);
      try {
        input = json::parse(is);
      } catch (const json::parse_error& e) {
        invalid("/", std::string("malformed JSON: ") + e.what());
      }
    }
    Overrides ov;
    if (*o_threads) ov.threads = threads;
    if (*o_seed) ov.seed = seed;
    ov.fail_on_divergence = fail;
    if (*o_n) ov.n = n;
    if (*o_eps) ov.epsilons = parse_list(eps_text);
    if (*o_out) ov.output_dir = output_dir;
    const json config = resolve_config(command, input, ov);
    return execute(config, out, err);
  } catch (const ConfigError& e) {
    err << "validation error at " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace mamf::cli
