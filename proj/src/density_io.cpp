#include "mamf/density_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mamf/fs_profile.hpp"

namespace mamf {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw MamfError(MamfError::Kind::invalid_argument, path + ": " + msg);
}

std::vector<double> parse_numbers(const std::string& text, const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) fail(path, "bad number '" + item + "'");
    } catch (const std::logic_error&) {
      fail(path, "bad number '" + item + "'");
    }
  }
  return out;
}

double total_mass(const RadialDensity& f, int n) {
  if (f.grid()->kind() == GridKind::ball) return cumulative_mass(f, n).total_mass();
  std::vector<double> g(f.grid()->size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = f.value(i) * fs::mass_density(f.grid()->node(i), n);
  return integrate(*f.grid(), g);
}

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

}  // namespace

RadialDensity density_from_preset(const std::string& preset, const GridPtr& grid, int n, double p) {
  const std::string path = "/density/preset";
  if (n < 1) fail("/n", "dimension must be >= 1");
  if (!(p > 1.0)) fail("/density/p", "exponent must be > 1");
  const bool ball = grid->kind() == GridKind::ball;
  const auto colon = preset.find(':');
  const std::string name = preset.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<double>{}
                                               : parse_numbers(preset.substr(colon + 1), path);
  const std::size_t size = grid->size();
  std::vector<double> v(size);

  if (name == "uniform") {
    if (!args.empty()) fail(path, "'uniform' takes no parameters");
    const double c = ball ? factorial(n) / std::pow(std::numbers::pi, n) : 1.0;
    std::fill(v.begin(), v.end(), c);
    return RadialDensity(grid, std::move(v), p);
  }
  if (name == "power") {
    if (!ball) fail(path, "'power' is a ball preset");
    if (args.size() != 1) fail(path, "'power' needs one exponent");
    const double a = args[0];
    if (!(a * p > -2.0 * n)) fail(path, "power density is not in L^p near the origin");
    const double c = (2.0 * n + a) / sphere_area(n);
    for (std::size_t i = 0; i < size; ++i) v[i] = c * std::exp(a * grid->node(i));
    return RadialDensity(grid, std::move(v), p, a);
  }
  if (name == "exp") {
    if (ball) fail(path, "'exp' is a P^n preset");
    if (args.size() != 1) fail(path, "'exp' needs one constant");
    std::fill(v.begin(), v.end(), std::exp(args[0]));
    return RadialDensity(grid, std::move(v), p);
  }
  if (name == "annulus") {
    if (args.size() != 2 || !(args[0] >= 0.0) || !(args[1] > args[0])) {
      fail(path, "'annulus' needs 0 <= a < b");
    }
    if (ball && args[1] > 1.0) fail(path, "annulus must lie in the unit ball");
    for (std::size_t i = 0; i < size; ++i) {
      const double r = std::exp(grid->node(i));
      v[i] = (r >= args[0] && r <= args[1]) ? 1.0 : 0.0;
    }
    RadialDensity f(grid, std::move(v), p);
    const double mass = total_mass(f, n);
    if (!(mass > 0.0)) fail(path, "annulus contains no grid node");
    return f.scaled((ball ? 1.0 : fs::volume(n)) / mass);
  }
  fail(path, "unknown preset '" + preset + "'");
}

RadialDensity density_from_json(const nlohmann::json& spec, const GridPtr& grid, int n,
                                const std::string& path) {
  if (spec.is_string()) return density_from_preset(spec.get<std::string>(), grid, n);
  if (!spec.is_object()) fail(path, "expected an object or a preset string");
  double p = 2.0;
  if (spec.contains("p")) {
    if (!spec["p"].is_number()) fail(path + "/p", "expected a number");
    p = spec["p"].get<double>();
  }
  const bool has_preset = spec.contains("preset");
  const bool has_table = spec.contains("table");
  if (has_preset == has_table) fail(path, "exactly one of 'preset' and 'table' is required");
  if (has_preset) {
    if (!spec["preset"].is_string()) fail(path + "/preset", "expected a string");
    return density_from_preset(spec["preset"].get<std::string>(), grid, n, p);
  }
  const auto& table = spec["table"];
  if (!table.is_array() || table.size() < 2) fail(path + "/table", "expected at least two [r, f] rows");
  std::vector<double> rs, fs;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& row = table[k];
    const std::string rp = path + "/table/" + std::to_string(k);
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
      fail(rp, "expected [r, f]");
    }
    const double r = row[0].get<double>();
    const double f = row[1].get<double>();
    if (!(r >= 0.0) || !(f >= 0.0) || !std::isfinite(f)) fail(rp, "need r >= 0 and finite f >= 0");
    if (!rs.empty() && !(r > rs.back())) fail(rp, "radii must be strictly increasing");
    rs.push_back(r);
    fs.push_back(f);
  }
  if (!(p > 1.0)) fail(path + "/p", "exponent must be > 1");
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = std::exp(grid->node(i));
    if (r <= rs.front()) {
      v[i] = fs.front();
    } else if (r >= rs.back()) {
      v[i] = fs.back();
    } else {
      const auto it = std::upper_bound(rs.begin(), rs.end(), r);
      const std::size_t j = static_cast<std::size_t>(it - rs.begin());
      const double w = (r - rs[j - 1]) / (rs[j] - rs[j - 1]);
      v[i] = (1.0 - w) * fs[j - 1] + w * fs[j];
    }
  }
  return RadialDensity(grid, std::move(v), p);
}

}  // namespace mamf
