#include "mamf/ma_ball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mamf::ball {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_ball(const GridPtr& grid, const char* where) {
  if (grid->kind() != GridKind::ball) {
    throw MamfError(MamfError::Kind::invalid_argument,
                    std::string(where) + " expects a ball grid");
  }
}

void require_dim(int n) {
  if (n < 1) throw MamfError(MamfError::Kind::invalid_argument, "dimension must be >= 1");
}

double nth_root(double x, int n) {
  if (x <= 0.0) return 0.0;
  return n == 1 ? x : std::pow(x, 1.0 / n);
}

}  // namespace

RadialPotential solve_dirichlet(const RadialMeasure& mu, int n, OriginAtom atoms) {
  require_ball(mu.grid(), "solve_dirichlet");
  require_dim(n);
  const auto& grid = *mu.grid();
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = nth_root(mu.at(i), n);
  auto r = reverse_cumulative_integral(grid, g, true);
  std::vector<double> chi(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) chi[i] = -r[i];

  PotentialTails tails;
  const double k = mu.lower_exponent();
  if (g.front() == 0.0) {
    tails.lower_limit = chi.front();
    tails.lower_rate = k > 0.0 ? k / n : 2.0;
  } else if (k > 0.0) {
    tails.lower_rate = k / n;
    tails.lower_limit = chi.front() - g.front() / tails.lower_rate;
  } else {
    if (atoms == OriginAtom::reject) {
      throw MamfError(MamfError::Kind::divergent,
                      "measure has an atom at the origin: the Dirichlet solution is unbounded");
    }
    tails.lower_rate = 0.0;
    tails.lower_limit = -kInf;
  }
  return RadialPotential(mu.grid(), std::move(chi), std::move(g), tails);
}

bool is_admissible(const RadialPotential& u, double tol) {
  if (u.grid()->kind() != GridKind::ball) return false;
  const auto v = u.values();
  const auto s = u.slopes();
  const double scale = 1.0 + std::max(std::abs(v.front()), std::abs(v.back()));
  if (std::abs(v.back()) > tol * scale) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < -tol) return false;
    if (i > 0) {
      if (s[i] < s[i - 1] - tol * (1.0 + std::abs(s[i]))) return false;
      if (v[i] < v[i - 1] - tol * scale) return false;
    }
  }
  return true;
}

RadialMeasure apply_ma(const RadialPotential& u, int n) {
  require_ball(u.grid(), "apply_ma");
  require_dim(n);
  if (!is_admissible(u)) {
    throw MamfError(MamfError::Kind::inadmissible,
                    "apply_ma: potential is not a radial psh function vanishing on the boundary");
  }
  std::vector<double> m(u.slopes().size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = std::pow(std::max(u.slope(i), 0.0), n);
  }
  for (std::size_t i = 1; i < m.size(); ++i) m[i] = std::max(m[i], m[i - 1]);
  const double total = m.back();
  return RadialMeasure(u.grid(), std::move(m), total, n * u.tails().lower_rate);
}

RadialMeasure mixed_ma_combine(const RadialPotential& u, const RadialPotential& v,
                               int n) {
  require_same_grid(u.grid(), v.grid(), "mixed_ma_combine");
  return apply_ma(u + v, n);
}

ComparisonReport comparison_check(const RadialMeasure& mu, const RadialMeasure& nu,
                                  int n) {
  require_same_grid(mu.grid(), nu.grid(), "comparison_check");
  bool below = true;
  bool above = true;
  for (std::size_t i = 0; i < mu.cumulative().size(); ++i) {
    below = below && mu.at(i) <= nu.at(i);
    above = above && mu.at(i) >= nu.at(i);
  }
  ComparisonReport report;
  if (!below && !above) return report;
  report.comparable = true;
  const auto u = solve_dirichlet(below ? mu : nu, n);
  const auto v = solve_dirichlet(below ? nu : mu, n);
  double margin = kInf;
  for (std::size_t i = 0; i < u.values().size(); ++i) {
    margin = std::min(margin, u.value(i) - v.value(i));
  }
  if (std::isfinite(u.tails().lower_limit) && std::isfinite(v.tails().lower_limit)) {
    margin = std::min(margin, u.tails().lower_limit - v.tails().lower_limit);
  }
  report.margin = margin;
  report.holds = margin >= -1e-12;
  return report;
}

RadialMeasure weighted_mass(const RadialDensity& f, int n,
                            const RadialPotential* weight, double gamma, double m) {
  require_ball(f.grid(), "weighted_mass");
  require_dim(n);
  if (weight == nullptr || gamma == 0.0) {
    auto base = cumulative_mass(f, n);
    return m == 0.0 ? base : base.scaled(std::exp(m));
  }
  require_same_grid(f.grid(), weight->grid(), "weighted_mass");
  const auto& grid = *f.grid();
  const double sigma = sphere_area(n);
  const double k = 2.0 * n + f.origin_power();
  if (!(k > 0.0)) {
    throw MamfError(MamfError::Kind::divergent, "mass of f dV diverges at the origin");
  }
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = sigma * f.value(i) * std::exp(2.0 * n * grid.node(i) - gamma * weight->value(i) + m);
  }
  const double base_tail = sigma * f.value(0) * std::exp(2.0 * n * grid.front()) / k;
  const double tail = std::exp(m) * lower_tail_exp_mass(*weight, gamma, base_tail, k);
  double exponent = k;
  if (weight->tails().lower_rate == 0.0) exponent = k - gamma * weight->slope(0);
  auto cum = cumulative_integral(grid, g, true);
  for (double& x : cum) x += tail;
  const double total = cum.back();
  return RadialMeasure(f.grid(), std::move(cum), total, std::max(exponent, 0.0));
}

RadialPotential log_potential(const GridPtr& grid) {
  require_ball(grid, "log_potential");
  std::vector<double> v(grid->nodes().begin(), grid->nodes().end());
  std::vector<double> s(grid->size(), 1.0);
  PotentialTails t;
  t.lower_rate = 0.0;
  t.lower_limit = -kInf;
  return RadialPotential(grid, std::move(v), std::move(s), t);
}

RadialPotential truncated_log_potential(const GridPtr& grid, double c) {
  require_ball(grid, "truncated_log_potential");
  if (!(c > 0.0)) throw MamfError(MamfError::Kind::invalid_argument, "truncation level must be positive");
  std::vector<double> v(grid->size()), s(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = grid->node(i);
    v[i] = std::max(t, -c);
    s[i] = t >= -c ? 1.0 : 0.0;
  }
  PotentialTails tails;
  tails.lower_limit = -c;
  tails.lower_rate = 2.0;
  return RadialPotential(grid, std::move(v), std::move(s), tails);
}

RadialPotential quadratic_potential(const GridPtr& grid) {
  require_ball(grid, "quadratic_potential");
  std::vector<double> v(grid->size()), s(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = std::exp(2.0 * grid->node(i));
    v[i] = 0.5 * std::expm1(2.0 * grid->node(i));
    s[i] = e;
  }
  v.back() = 0.0;
  PotentialTails tails;
  tails.lower_limit = -0.5;
  tails.lower_rate = 2.0;
  return RadialPotential(grid, std::move(v), std::move(s), tails);
}

RadialPotential exp_transform(const RadialPotential& u, double gamma, int n) {
  require_ball(u.grid(), "exp_transform");
  if (!(gamma > 0.0)) throw MamfError(MamfError::Kind::invalid_argument, "gamma must be positive");
  const double c = gamma / n;
  std::vector<double> v(u.values().size()), s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::expm1(c * u.value(i));
    s[i] = c * std::exp(c * u.value(i)) * u.slope(i);
  }
  PotentialTails t;
  const auto& ut = u.tails();
  t.lower_limit = std::expm1(c * ut.lower_limit);
  t.lower_rate = ut.lower_rate > 0.0 ? ut.lower_rate : c * u.slope(0);
  return RadialPotential(u.grid(), std::move(v), std::move(s), t);
}

}  // namespace mamf::ball
