#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mamf/cli.hpp"

using nlohmann::json;
using namespace mamf::cli;
namespace fsys = std::filesystem;

namespace {

fsys::path scratch(const std::string& name) {
  const auto p = fsys::temp_directory_path() / ("mamf_test_cli_" + name);
  fsys::remove_all(p);
  fsys::create_directories(p);
  return p;
}

std::string error_path(const std::string& command, const json& input) {
  try {
    resolve_config(command, input, {});
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

int run_args(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "mamf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return rc;
}

json read_json(const fsys::path& p) {
  std::ifstream is(p);
  return json::parse(is);
}

void write_config(const fsys::path& p, const json& j) { std::ofstream(p) << j.dump(); }

}  // namespace

TEST_CASE("resolve_config fills defaults") {
  const auto c = resolve_config("solve", json::object(), {});
  CHECK(c["geometry"] == "ball");
  CHECK(c["n"] == 1);
  CHECK(c["grid"]["nodes"] == 4096);
  CHECK(c["grid"]["t_min"] == -20.0);
  CHECK(c["grid"]["t_max"] == 0.0);
  CHECK(c["solver"]["tol"] == 1e-9);
  CHECK(c["solver"]["max_iter"] == 1000);
  CHECK(c["density"]["preset"] == "uniform");
  CHECK(c["certificates"]["mode"] == "empirical");
  CHECK(c["normalized"] == true);

  const auto p = resolve_config("verify-fs", json::object(), {});
  CHECK(p["geometry"] == "pn");
  CHECK(p["grid"]["t_min"] == -15.0);
  CHECK(p["verify_fs"]["epsilons"].size() == 3);

  Overrides ov;
  ov.n = 2;
  ov.threads = 3;
  ov.seed = 11;
  ov.epsilons = std::vector<double>{0.5, 2.0};
  const auto o = resolve_config("verify-fs", json{{"n", 1}, {"threads", 1}}, ov);
  CHECK(o["n"] == 2);
  CHECK(o["threads"] == 3);
  CHECK(o["seed"] == 11);
  CHECK(o["verify_fs"]["epsilons"] == json{0.5, 2.0});
}

TEST_CASE("certified mode fills beta from the density exponent") {
  const auto c = resolve_config("solve", json{{"n", 2}, {"certificates", {{"mode", "certified"}, {"A", 3.0}}}}, {});
  // uniform density: p = 2, beta = n (p - 1)/p
  CHECK(c["certificates"]["beta"] == doctest::Approx(1.0));
}

TEST_CASE("validation errors carry the JSON path") {
  CHECK(error_path("solve", json{{"solverr", json::object()}}) == "/solverr");
  CHECK(error_path("solve", json{{"solver", {{"tols", 1.0}}}}) == "/solver/tols");
  CHECK(error_path("solve", json{{"n", "two"}}) == "/n");
  CHECK(error_path("solve", json{{"n", 0}}) == "/n");
  CHECK(error_path("solve", json{{"gamma", "x"}}) == "/gamma");
  CHECK(error_path("solve", json{{"grid", {{"nodes", 4}}}}) == "/grid/nodes");
  CHECK(error_path("solve", json{{"grid", {{"t_max", 1.0}}}}) == "/grid/t_max");
  CHECK(error_path("solve", json{{"geometry", "torus"}}) == "/geometry");
  CHECK(error_path("solve", json{{"solver", {{"damping", 1.0}}}}) == "/solver/damping");
  CHECK(error_path("solve", json{{"certificates", {{"mode", "certified"}}}}) == "/certificates/A");
  CHECK(error_path("solve", json{{"certificates", {{"mode", "certified"}, {"A", 0.5}}}}) == "/certificates/A");
  CHECK(error_path("sweep", json{{"sweep", {{"gammas", {0.2, 0.1}}}}}) == "/sweep/gammas/1");
  CHECK(error_path("stability", json{{"stability", {{"epsilons", {0.1, 0.0}}}}}) == "/stability/epsilons/1");
  CHECK(error_path("verify-fs", json{{"geometry", "ball"}}) == "/geometry");
  CHECK(error_path("solve", json{{"command", "sweep"}}) == "/command");
  CHECK(error_path("solve", json{{"density", {{"preset", "nope"}}}}).rfind("/density", 0) == 0);
  CHECK(error_path("frobnicate", json::object()) == "/command");
}

TEST_CASE("solve writes a solution and a report embedding the config") {
  const auto dir = scratch("solve");
  const auto cfg = dir / "cfg.json";
  write_config(cfg, {{"gamma", 0.5}, {"grid", {{"nodes", 512}}}});
  std::string text;
  REQUIRE(run_args({"solve", "--config", cfg.string(), "--output-dir", dir.string()}, &text) == kExitOk);
  CHECK(fsys::exists(dir / "solution.csv"));
  const auto rep = read_json(dir / "report.json");
  CHECK(rep["config"]["gamma"] == 0.5);
  CHECK(rep["config"]["grid"]["nodes"] == 512);
  CHECK(rep["report"]["converged"] == true);
  CHECK(rep["certificates"]["mode"] == "empirical");
  CHECK_FALSE(text.empty());
}

TEST_CASE("divergence exits 3 only with the flag") {
  const auto dir = scratch("diverge");
  const auto cfg = dir / "cfg.json";
  write_config(cfg, {{"gamma", 30.0}, {"normalized", false}, {"m", 3.0}, {"grid", {{"nodes", 256}}},
                     {"solver", {{"max_iter", 50}}}});
  CHECK(run_args({"solve", "--config", cfg.string(), "--output-dir", dir.string()}) == kExitOk);
  CHECK(read_json(dir / "report.json")["report"]["diverged"] == true);
  CHECK(run_args({"solve", "--config", cfg.string(), "--output-dir", dir.string(), "--fail-on-divergence"}) ==
        kExitDivergence);
}

TEST_CASE("usage and config errors exit 2") {
  const auto dir = scratch("errors");
  CHECK(run_args({"bogus"}) == kExitValidation);
  CHECK(run_args({"solve", "--config", (dir / "missing.json").string()}) == kExitValidation);
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK(run_args({"solve", "--config", (dir / "bad.json").string()}) == kExitValidation);
  write_config(dir / "key.json", {{"gama", 1.0}});
  CHECK(run_args({"solve", "--config", (dir / "key.json").string()}) == kExitValidation);
  CHECK(run_args({"solve", "--threads", "0"}) == kExitValidation);
  CHECK(run_args({"--help"}) == kExitOk);
}

TEST_CASE("verify-fs and certify") {
  const auto dir = scratch("fs");
  std::string text;
  REQUIRE(run_args({"verify-fs", "--n", "1", "--eps", "0.25,1,4", "--output-dir", dir.string()}, &text) == kExitOk);
  CHECK(text.find("min pairwise distance") != std::string::npos);
  const auto j = read_json(dir / "verify_fs.json");
  CHECK(j["min_distance"].get<double>() > 0.1);
  CHECK(fsys::exists(dir / "verify_fs.csv"));

  const auto cdir = scratch("certify");
  const auto cfg = cdir / "cfg.json";
  write_config(cfg, {{"gamma", 0.05}, {"grid", {{"nodes", 1024}}},
                     {"certificates", {{"mode", "certified"}, {"A", 2.0}, {"beta", 0.5}}}});
  REQUIRE(run_args({"certify", "--config", cfg.string(), "--output-dir", cdir.string()}) == kExitOk);
  const auto c = read_json(cdir / "certify.json");
  CHECK(c["certificates"]["gamma0_certified"]["value"].get<double>() == doctest::Approx(0.125));
  CHECK(c["certificates"]["linfty"]["holds"] == true);
}

TEST_CASE("MAMF_OUTPUT_DIR is the fallback output directory") {
  const auto dir = scratch("env");
  ::setenv("MAMF_OUTPUT_DIR", dir.string().c_str(), 1);
  const auto c = resolve_config("solve", json::object(), {});
  CHECK(c["output_dir"] == dir.string());
  CHECK(resolve_config("solve", json{{"output_dir", "x"}}, {})["output_dir"] == "x");
  ::unsetenv("MAMF_OUTPUT_DIR");
  CHECK(resolve_config("solve", json::object(), {})["output_dir"] == ".");
}
