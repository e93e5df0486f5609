#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mamf/density_io.hpp"
#include "mamf/radial_core.hpp"
#include "oracles.hpp"

using namespace mamf;

namespace {

GridPtr ball_grid(int nodes = 4096, int n = 1) { return make_grid(GridKind::ball, nodes, -20.0, 0.0, n); }

RadialDensity constant_density(const GridPtr& g, double c) {
  return RadialDensity(g, std::vector<double>(g->size(), c), 2.0);
}

}  // namespace

TEST_CASE("make_grid: uniform nodes and exact weights") {
  auto g = make_grid(GridKind::ball, 3, -1.0, 0.0);
  REQUIRE(g->size() == 3);
  CHECK(g->node(0) == -1.0);
  CHECK(g->node(1) == -0.5);
  CHECK(g->node(2) == 0.0);
  double sum = 0.0;
  for (double w : g->weights()) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

  auto p = make_grid(GridKind::pn, 5, -2.0, 2.0);
  const std::vector<double> want = {-2, -1, 0, 1, 2};
  for (std::size_t i = 0; i < 5; ++i) CHECK(p->node(i) == want[i]);

  for (int nodes : {16, 17, 100, 4096}) {
    auto q = make_grid(GridKind::ball, nodes, -3.0, 0.0);
    double s = 0.0;
    for (double w : q->weights()) {
      CHECK(w > 0.0);
      s += w;
    }
    CHECK(s == doctest::Approx(3.0).epsilon(1e-13));
  }
}

TEST_CASE("make_grid rejects bad bounds") {
  CHECK_THROWS_AS(make_grid(GridKind::ball, 16, 0.0, -1.0), MamfError);
  CHECK_THROWS_AS(make_grid(GridKind::ball, 16, -1.0, 0.5), MamfError);
  CHECK_THROWS_AS(make_grid(GridKind::ball, 2, -1.0, 0.0), MamfError);
  CHECK_THROWS_AS(make_grid(GridKind::pn, 16, 1.0, 2.0), MamfError);
}

TEST_CASE("default tail exponent is 2n") {
  CHECK(make_grid(GridKind::ball, 16, -1.0, 0.0, 3)->tail_exponent() == 6.0);
}

TEST_CASE("quadrature is exact on cubics, running integral too") {
  auto g = make_grid(GridKind::ball, 101, -2.0, 0.0);
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = g->node(i);
    v[i] = 1.0 + t - 2.0 * t * t + 0.5 * t * t * t;
  }
  auto F = [](double t) { return t + t * t / 2 - 2 * t * t * t / 3 + t * t * t * t / 8; };
  CHECK(integrate(*g, v) == doctest::Approx(F(0) - F(-2)).epsilon(1e-13));
  auto cum = cumulative_integral(*g, v);
  for (std::size_t i = 0; i < cum.size(); ++i) {
    CHECK(std::abs(cum[i] - (F(g->node(i)) - F(-2.0))) < 1e-12);
  }
}

TEST_CASE("cumulative_mass of normalized Lebesgue measure is r^{2n}") {
  for (int n = 1; n <= 3; ++n) {
    auto g = ball_grid(4096, n);
    const auto M = cumulative_mass(constant_density(g, oracle::uniform_density(n)), n);
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      err = std::max(err, std::abs(M.at(i) - std::exp(2.0 * n * g->node(i))));
    }
    CHECK(err < 1e-8);
    CHECK(M.total_mass() == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("cumulative_mass of 1/(2 pi rho) is r") {
  auto g = ball_grid();
  const auto f = density_from_preset("power:-1", g, 1, 1.5);
  CHECK(f.value(g->size() - 1) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
  const auto M = cumulative_mass(f, 1);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(M.at(i) - std::exp(g->node(i))));
  CHECK(err < 1e-9);
}

TEST_CASE("cumulative_mass reports a divergent origin") {
  auto g = ball_grid(64);
  RadialDensity f(g, std::vector<double>(g->size(), 1.0), 2.0, -2.5);
  CHECK_THROWS_AS(cumulative_mass(f, 1), MamfError);
}

TEST_CASE("cumulative_mass is monotone in f") {
  auto g = ball_grid(1024, 2);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto a = oracle::random_profile(seed, -5.0, 0.0);
    auto b = oracle::random_profile(seed + 100, -5.0, 0.0);
    std::vector<double> fa(g->size()), fb(g->size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
      fa[i] = a(g->node(i));
      fb[i] = fa[i] + b(g->node(i));
    }
    const auto Ma = cumulative_mass(RadialDensity(g, fa, 2.0), 2);
    const auto Mb = cumulative_mass(RadialDensity(g, fb, 2.0), 2);
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(Ma.at(i) <= Mb.at(i));
  }
}

TEST_CASE("probability density predicate within 10 h^2") {
  for (int nodes : {64, 256, 4096}) {
    auto g = ball_grid(nodes, 2);
    CHECK(is_probability_density(density_from_preset("uniform", g, 2), 2));
    CHECK(is_probability_density(density_from_preset("annulus:0.3,0.7", g, 2), 2));
    CHECK_FALSE(is_probability_density(constant_density(g, 1.0), 2));
  }
}

TEST_CASE("lp_norm examples") {
  auto g = ball_grid();
  CHECK(lp_norm(constant_density(g, 0.0), 2.0, 1) == 0.0);
  CHECK(lp_norm(constant_density(g, 1.0 / std::numbers::pi), 2.0, 1) ==
        doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-9));
  for (int n = 1; n <= 3; ++n) {
    auto gn = ball_grid(4096, n);
    const double vol = std::pow(std::numbers::pi, n) / std::tgamma(n + 1.0);
    CHECK(lp_norm(constant_density(gn, 2.5), 1.0, n) == doctest::Approx(2.5 * vol).epsilon(1e-8));
  }
  auto p = make_grid(GridKind::pn, 4096, -15.0, 15.0, 1);
  CHECK(lp_norm(constant_density(p, 3.0), 1.0, 1) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK_THROWS_AS(lp_norm(constant_density(g, 1.0), 0.5, 1), MamfError);
}

TEST_CASE("lp_norm triangle inequality on random pairs") {
  auto g = ball_grid(1024, 1);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto a = oracle::random_profile(seed, -4.0, 0.0);
    auto b = oracle::random_profile(seed + 50, -4.0, 0.0);
    std::vector<double> fa(g->size()), fb(g->size()), fs(g->size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
      fa[i] = a(g->node(i));
      fb[i] = b(g->node(i));
      fs[i] = fa[i] + fb[i];
    }
    for (double q : {1.0, 2.0, 3.5}) {
      const double lhs = lp_norm(RadialDensity(g, fs, 2.0), q, 1);
      const double rhs = lp_norm(RadialDensity(g, fa, 2.0), q, 1) + lp_norm(RadialDensity(g, fb, 2.0), q, 1);
      CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("sup_distance examples") {
  auto g = ball_grid(512);
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::expm1(g->node(i));
  auto u = RadialPotential::from_values(g, v);
  CHECK(sup_distance(u, u) == 0.0);
  CHECK(sup_distance(u, u.shifted(-0.3)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK_THROWS_AS(sup_distance(u, RadialPotential::zero(ball_grid(256))), MamfError);

  // Dense resampling oracle.
  std::vector<double> w(g->size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * std::sin(g->node(i));
  auto s = RadialPotential::from_values(g, w);
  double dense = 0.0;
  for (int k = 0; k <= 200000; ++k) {
    const double t = -20.0 + 20.0 * k / 200000.0;
    dense = std::max(dense, std::abs(u.evaluate(t) - s.evaluate(t)));
  }
  const double h = g->spacing();
  CHECK(std::abs(sup_distance(u, s) - dense) < h * h);
}

TEST_CASE("operations are bitwise deterministic") {
  auto g = ball_grid(2048, 2);
  auto f = density_from_preset("annulus:0.2,0.9", g, 2);
  const auto a = cumulative_mass(f, 2);
  const auto b = cumulative_mass(f, 2);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(a.at(i) == b.at(i));
  CHECK(lp_norm(f, 2.0, 2) == lp_norm(f, 2.0, 2));
}

TEST_CASE("density presets validate their arguments") {
  auto g = ball_grid(64);
  CHECK_THROWS_AS(density_from_preset("power:-3", g, 1), MamfError);
  CHECK_THROWS_AS(density_from_preset("annulus:0.8,0.2", g, 1), MamfError);
  CHECK_THROWS_AS(density_from_preset("nonsense", g, 1), MamfError);
  auto p = make_grid(GridKind::pn, 64, -5.0, 5.0);
  CHECK_THROWS_AS(density_from_preset("power:1", p, 1), MamfError);
  const auto e = density_from_preset("exp:0.1", p, 1);
  CHECK(e.value(3) == doctest::Approx(std::exp(0.1)));
}

TEST_CASE("density tables interpolate linearly in r") {
  auto g = ball_grid(64);
  nlohmann::json spec = {{"table", {{0.0, 1.0}, {1.0, 3.0}}}};
  const auto f = density_from_json(spec, g, 1);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(f.value(i) == doctest::Approx(1.0 + 2.0 * std::exp(g->node(i))));
  }
  CHECK_THROWS_AS(density_from_json(nlohmann::json{{"table", 3}}, g, 1), MamfError);
}
