#include <doctest.h>

#include <cmath>

#include "mamf/certificates.hpp"
#include "mamf/density_io.hpp"
#include "mamf/ma_ball.hpp"
#include "mamf/ma_pn.hpp"
#include "mamf/meanfield.hpp"
#include "oracles.hpp"

using namespace mamf;

namespace {

GridPtr ball_grid(int n = 1, int nodes = 4096) { return make_grid(GridKind::ball, nodes, -20.0, 0.0, n); }

cert::CertificateInputs inputs(double beta, double A, int n, cert::Mode mode = cert::Mode::certified) {
  cert::CertificateInputs in;
  in.beta = beta;
  in.A = A;
  in.n = n;
  in.mode = mode;
  return in;
}

}  // namespace

TEST_CASE("gamma0 arithmetic") {
  for (int n = 1; n <= 4; ++n) {
    CHECK(cert::gamma0(inputs(1.0, 1.0, n)).value == doctest::Approx(0.5));
    CHECK(cert::gamma0(inputs(2.0, std::pow(2.0, n), n)).value == doctest::Approx(0.5));
  }
  CHECK_FALSE(cert::gamma0(inputs(1.0, 1.0, 1)).heuristic);
  const auto e = cert::gamma0(inputs(1.0, 1.0, 1, cert::Mode::empirical));
  CHECK(e.heuristic);
  CHECK(e.provenance.find("empirical") != std::string::npos);
  CHECK_THROWS_AS(cert::gamma0(inputs(1.0, 0.5, 1)), MamfError);
  CHECK_THROWS_AS(cert::gamma0(inputs(0.0, 1.0, 1)), MamfError);
}

TEST_CASE("gamma0 monotonicity in A and beta") {
  for (int n = 1; n <= 3; ++n) {
    double prev = cert::gamma0(inputs(1.0, 1.0, n)).value;
    for (double A = 1.5; A < 100.0; A *= 1.5) {
      const double g = cert::gamma0(inputs(1.0, A, n)).value;
      CHECK(g < prev);
      prev = g;
    }
    prev = 0.0;
    for (double beta = 0.1; beta < 10.0; beta *= 1.7) {
      const double g = cert::gamma0(inputs(beta, 3.0, n)).value;
      CHECK(g > prev);
      prev = g;
    }
  }
}

TEST_CASE("L infinity bounds arithmetic") {
  for (int n = 1; n <= 4; ++n) {
    CHECK(cert::linfty_bound_local(1.0, n, n) == doctest::Approx(1.0));
    CHECK(cert::linfty_bound_local(std::pow(2.0, n), 2.0 * n, n) == doctest::Approx(1.0));
    CHECK(cert::linfty_bound_global(1.0, n, n) == doctest::Approx(1.0));
    CHECK(cert::linfty_bound_global(std::exp(1.0), n, n) == doctest::Approx(1.0 + 1.0 / n));
    CHECK_THROWS_AS(cert::linfty_bound_global(1.0, n + 0.5, n), MamfError);
  }
  CHECK_THROWS_AS(cert::linfty_bound_local(0.5, 1.0, 1), MamfError);
  CHECK_THROWS_AS(cert::linfty_bound_local(1.0, 0.0, 1), MamfError);
}

TEST_CASE("exp_integral examples") {
  auto g = ball_grid(1);
  const auto f = density_from_preset("uniform", g, 1);
  const auto mu = cumulative_mass(f, 1);
  const auto zero = RadialPotential::zero(g);
  CHECK(cert::exp_integral(zero, 1.0, mu) == doctest::Approx(mu.total_mass()).epsilon(1e-14));
  const auto lg = ball::log_potential(g);
  CHECK(cert::exp_integral(lg, 0.0, mu) == mu.total_mass());
  CHECK(cert::exp_integral(lg, 1.0, mu) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(cert::exp_integral(lg, 1.0, f, 1) == doctest::Approx(2.0).epsilon(1e-8));
  // int r^{-gamma} 2r dr = 2/(2 - gamma); diverges at gamma = 2.
  CHECK(cert::exp_integral(lg, 1.5, mu) == doctest::Approx(4.0).epsilon(1e-7));
  CHECK_THROWS_AS(cert::exp_integral(lg, 2.5, mu), MamfError);
}

TEST_CASE("exp_integral on P^n includes both tails") {
  auto g = make_grid(GridKind::pn, 4096, -15.0, 15.0, 1);
  const pn::PnGeometry geom(1);
  const auto m = pn::fs_family(0.25, g, geom);
  const auto fsm = pn::fs_measure(g, geom);
  // C = V / int e^{-2 phi} omega
  CHECK(cert::exp_integral(m.potential, 2.0, fsm) == doctest::Approx(2.0 / m.C).epsilon(1e-9));
}

TEST_CASE("exp_integral dominates the total mass for u <= 0") {
  for (int n = 1; n <= 3; ++n) {
    auto g = ball_grid(n, 1024);
    const auto f = density_from_preset("annulus:0.1,0.8", g, n);
    const auto mu = cumulative_mass(f, n);
    for (const auto& u : cert::default_battery(g)) {
      for (double gamma : {0.0, 0.3, 1.0}) {
        const double v = cert::exp_integral(u, gamma, mu);
        CHECK(v >= mu.total_mass());
        if (gamma == 0.0) CHECK(v == mu.total_mass());
      }
    }
    CHECK(cert::exp_integral(RadialPotential::zero(g), 0.7, mu) == doctest::Approx(mu.total_mass()).epsilon(1e-14));
  }
}

TEST_CASE("empirical_A examples") {
  auto g = ball_grid(1);
  const auto f = density_from_preset("uniform", g, 1);
  const auto zero_only = cert::empirical_A(f, 1.0, 1, {RadialPotential::zero(g)});
  CHECK(zero_only.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(zero_only.label == "lower bound of A_mu; theorem-grade use requires a certified upper bound");

  const auto battery = cert::default_battery(g);
  REQUIRE(battery.size() == 7);
  const auto full = cert::empirical_A(f, 1.0, 1, battery);
  CHECK(full.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(full.argmax == 1);

  // Enlarging the battery never decreases the estimate.
  double prev = 0.0;
  for (std::size_t k = 1; k <= battery.size(); ++k) {
    const std::vector<RadialPotential> part(battery.begin(), battery.begin() + static_cast<std::ptrdiff_t>(k));
    const double v = cert::empirical_A(f, 1.0, 1, part).value;
    CHECK(v >= prev);
    prev = v;
  }
  const auto too_heavy = ball::log_potential(g).scaled(2.0);
  CHECK_THROWS_AS(cert::empirical_A(f, 1.0, 1, {too_heavy}), MamfError);
  CHECK(std::isinf(cert::empirical_A(f, 3.0, 1, battery).value));
}

TEST_CASE("empirical gamma0 for the uniform disc") {
  auto g = ball_grid(1);
  const auto t = cert::empirical_gamma0(density_from_preset("uniform", g, 1), 1);
  // beta = 1/2, A = 1/(1 - 1/4) = 4/3, gamma0 = beta A^{-1} / 2 = 3/16.
  CHECK(t.value == doctest::Approx(0.1875).epsilon(1e-8));
  CHECK(t.heuristic);
}

TEST_CASE("smallness certificate") {
  auto g = ball_grid(2, 256);
  const auto one = ball::truncated_log_potential(g, 1.0);
  REQUIRE(one.sup_norm() == doctest::Approx(1.0));
  CHECK(cert::smallness_certificate(one, 0.5, 2));
  const auto three = ball::truncated_log_potential(g, 3.0);
  CHECK_FALSE(cert::smallness_certificate(three, 1.0, 2));

  for (int n = 1; n <= 2; ++n) {
    auto p = make_grid(GridKind::pn, 2048, -15.0, 15.0, n);
    const pn::PnGeometry geom(n);
    for (double eps : {0.25, 0.1, 0.01}) {
      const auto m = pn::fs_family(eps, p, geom);
      CHECK_FALSE(cert::smallness_certificate(m.potential, n + 1.0, n));
    }
  }
}

TEST_CASE("certified A bounds dominate the battery") {
  auto g = ball_grid(1);
  for (double gamma : {0.2, 0.8, 1.5, 1.9}) {
    const auto f = density_from_preset("uniform", g, 1);
    CHECK(cert::empirical_A(f, gamma, 1, cert::default_battery(g)).value <= cert::certified_A_disc(1.0, gamma));
    // f = (2 + a) r^a / (2 pi) <= (1 + a/2) / pi on the disc.
    const auto p = density_from_preset("power:1", g, 1);
    CHECK(cert::empirical_A(p, gamma, 1, cert::default_battery(g)).value <= cert::certified_A_disc(1.5, gamma));
  }
  CHECK_THROWS_AS(cert::certified_A_disc(1.0, 2.0), MamfError);
  CHECK(cert::certified_A_p1(4.0, 0.5) == doctest::Approx(8.0));
  CHECK_THROWS_AS(cert::certified_A_p1(1.0, 1.0), MamfError);
}

TEST_CASE("Holder step of the local uniqueness proof") {
  // int e^{-beta v/2} (dd^c phi)^n <= int e^{-beta (v + phi)/2} f / int e^{-beta phi/2} f
  // for phi the normalized solution at gamma <= beta/2 and battery members v.
  for (int n = 1; n <= 2; ++n) {
    auto g = ball_grid(n, 2048);
    for (const char* preset : {"uniform", "power:1", "annulus:0.2,0.7"}) {
      const auto f = density_from_preset(preset, g, n);
      const double beta = 0.5 * n;
      for (double gamma : {0.5 * beta, 0.25 * beta, 0.05 * beta}) {
        const meanfield::MeanFieldProblem prob{meanfield::Geometry::ball, n, f, gamma, true, 0.0};
        const auto phi = meanfield::picard_normalized(prob, std::nullopt);
        REQUIRE(phi.report.converged);
        const auto mphi = ball::apply_ma(phi.u, n);
        const double denom = cert::exp_integral(phi.u, beta / 2.0, f, n);
        for (const auto& v : cert::default_battery(g)) {
          const double lhs = cert::exp_integral(v, beta / 2.0, mphi);
          const double rhs = cert::exp_integral((v + phi.u).scaled(0.5), beta, f, n) / denom;
          // Kinked battery members make the Stieltjes sum first order in h.
          INFO(preset << " n=" << n << " gamma=" << gamma);
          CHECK(lhs <= rhs * (1.0 + 0.1 * g->spacing()));
        }
      }
    }
  }
}

TEST_CASE("cumulative inequality for e^{gamma u/n} - 1 on random potentials") {
  for (int n = 1; n <= 3; ++n) {
    auto g = ball_grid(n, 2048);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto prof = oracle::random_profile(seed, -6.0, 0.0);
      std::vector<double> f(g->size());
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = prof(g->node(i));
      const auto u = ball::solve_dirichlet(cumulative_mass(RadialDensity(g, f, 2.0), n), n);
      const double gamma = 0.5 + 0.25 * static_cast<double>(seed % 8);
      const auto Mv = ball::apply_ma(ball::exp_transform(u, gamma, n), n);
      const auto rhs = cert::cumulative_exp_integral(u, -gamma, ball::apply_ma(u, n));
      const double c = std::pow(gamma / n, n);
      for (std::size_t i = 0; i < g->size(); ++i) CHECK(Mv.at(i) >= c * rhs[i] * (1.0 - 1e-9));
    }
  }
}
