#include "mamf/ma_pn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mamf::pn {

namespace {

void require_pn(const GridPtr& grid, const char* where) {
  if (grid->kind() != GridKind::pn) {
    throw MamfError(MamfError::Kind::invalid_argument,
                    std::string(where) + " expects a pn grid");
  }
}

// log(e^{2 tau} + eps) without overflow or cancellation.
double log_shifted(double tau, double eps) {
  const double two_tau = 2.0 * tau;
  const double log_eps = std::log(eps);
  if (two_tau > log_eps) return two_tau + std::log1p(eps * std::exp(-two_tau));
  return log_eps + std::log1p(std::exp(two_tau) / eps);
}

// V - (2 - delta)^n.
double deficit_from_gap(double delta, int n) {
  return -fs::volume(n) * std::expm1(n * std::log1p(-0.5 * delta));
}

}  // namespace

PnGeometry::PnGeometry(int dim) : n(dim) {
  if (dim < 1) throw MamfError(MamfError::Kind::invalid_argument, "dimension must be >= 1");
}

bool is_admissible(const RadialPotential& phi, const PnGeometry& geom, double tol) {
  if (phi.grid()->kind() != GridKind::pn) return false;
  const auto& grid = *phi.grid();
  double prev = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = geom.dh(grid.node(i)) + phi.slope(i);
    if (s < -tol || s > 2.0 + tol) return false;
    if (i > 0 && s < prev - tol * (1.0 + std::abs(s))) return false;
    prev = s;
  }
  return phi.bounded();
}

RadialPotential solve_pn(const RadialMeasure& nu, const PnGeometry& geom,
                         double mass_tol) {
  require_pn(nu.grid(), "solve_pn");
  const int n = geom.n;
  const double volume = geom.volume();
  if (std::abs(nu.total_mass() - volume) > mass_tol * volume) {
    std::ostringstream os;
    os << "solve_pn: total mass " << nu.total_mass() << " differs from the volume "
       << volume;
    throw MamfError(MamfError::Kind::mass_mismatch, os.str());
  }
  const auto& grid = *nu.grid();
  const double rescale = volume / nu.total_mass();
  const std::size_t size = grid.size();

  std::vector<double> g(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double m = std::clamp(nu.at(i) * rescale, 0.0, volume);
    g[i] = std::min(std::pow(m, 1.0 / n), 2.0);
  }

  const double k_lo = nu.lower_exponent();
  double lower = 0.0;
  if (g.front() > 0.0) {
    if (k_lo == 0.0) {
      throw MamfError(MamfError::Kind::divergent,
                      "solve_pn: atom at the origin gives an unbounded potential");
    }
    lower = g.front() * n / k_lo;
  }
  auto acc = cumulative_integral(grid, g, true);
  std::vector<double> phi(size), slope(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double tau = grid.node(i);
    phi[i] = lower + acc[i] - fs::h(tau);
    slope[i] = g[i] - fs::dh(tau);
  }

  // int_{tau_N}^inf (g - h') with V - N = D e^{-k (tau - tau_N)}.
  const double deficit = std::max(volume - nu.at(size - 1) * rescale, 0.0);
  const double k_hi = nu.upper_exponent();
  double upper_integral = 0.0;
  if (deficit > 0.0) {
    if (k_hi == 0.0) {
      throw MamfError(MamfError::Kind::divergent,
                      "solve_pn: atom at infinity gives an unbounded potential");
    }
    auto integrand = [&](double y) {
      const double gy = std::pow(std::max(volume - deficit * y, 0.0), 1.0 / n);
      return (gy - 2.0) / (k_hi * y);
    };
    using boost::math::quadrature::gauss_kronrod;
    upper_integral = gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 8, 1e-13);
  }
  PotentialTails tails;
  tails.lower_limit = 0.0;
  tails.lower_rate = k_lo > 0.0 ? std::min(k_lo / n, 2.0) : 2.0;
  tails.upper_limit =
      phi.back() + upper_integral + std::log1p(std::exp(-2.0 * grid.back()));
  tails.upper_rate = k_hi > 0.0 ? std::min(k_hi, 2.0) : 2.0;

  double top = std::max(tails.lower_limit, tails.upper_limit);
  top = std::max(top, *std::max_element(phi.begin(), phi.end()));
  for (double& x : phi) x -= top;
  tails.lower_limit -= top;
  tails.upper_limit -= top;
  return RadialPotential(nu.grid(), std::move(phi), std::move(slope), tails);
}

RadialMeasure apply_pn(const RadialPotential& phi, const PnGeometry& geom) {
  require_pn(phi.grid(), "apply_pn");
  if (!is_admissible(phi, geom)) {
    throw MamfError(MamfError::Kind::inadmissible,
                    "apply_pn: h + phi is not convex with slope in [0, 2]");
  }
  const auto& grid = *phi.grid();
  const int n = geom.n;
  const double volume = geom.volume();
  const std::size_t size = grid.size();
  std::vector<double> m(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double s = std::clamp(geom.dh(grid.node(i)) + phi.slope(i), 0.0, 2.0);
    m[i] = std::min(std::pow(s, n), volume);
    if (i > 0) m[i] = std::max(m[i], m[i - 1]);
  }
  const double h = grid.spacing();
  double k_lo = 2.0 * n;
  if (m[0] > 0.0 && m[1] > m[0]) k_lo = std::log(m[1] / m[0]) / h;
  double k_hi = 2.0;
  {
    const std::size_t a = size - 2;
    const std::size_t b = size - 1;
    const double da = deficit_from_gap(fs::dh_gap(grid.node(a)) - phi.slope(a), n);
    const double db = deficit_from_gap(fs::dh_gap(grid.node(b)) - phi.slope(b), n);
    if (db > 0.0 && da > db) k_hi = std::log(da / db) / h;
  }
  return RadialMeasure(phi.grid(), std::move(m), volume, k_lo, k_hi);
}

RadialMeasure fs_measure(const GridPtr& grid, const PnGeometry& geom) {
  require_pn(grid, "fs_measure");
  std::vector<double> m(grid->size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = geom.fs_mass(grid->node(i));
  return RadialMeasure(grid, std::move(m), geom.volume(), 2.0 * geom.n, 2.0);
}

RadialMeasure density_to_measure_pn(const RadialDensity& f,
                                    const RadialPotential* weight, double gamma,
                                    const PnGeometry& geom) {
  require_pn(f.grid(), "density_to_measure_pn");
  const auto& grid = *f.grid();
  const int n = geom.n;
  const std::size_t size = grid.size();
  if (weight != nullptr) require_same_grid(f.grid(), weight->grid(), "density_to_measure_pn");
  const bool weighted = weight != nullptr && gamma != 0.0;

  std::vector<double> factor(size);
  for (std::size_t i = 0; i < size; ++i) {
    factor[i] = f.value(i) * (weighted ? std::exp(-gamma * weight->value(i)) : 1.0);
  }
  const bool constant_tails =
      !weighted || (weight->tails().lower_limit == weight->values().front() &&
                    weight->tails().upper_limit == weight->values().back());
  if (constant_tails &&
      std::all_of(factor.begin(), factor.end(), [&](double x) { return x == factor[0]; })) {
    // c * omega^n: the cumulative mass is exact.
    std::vector<double> m(size);
    for (std::size_t i = 0; i < size; ++i) m[i] = factor[0] * geom.fs_mass(grid.node(i));
    return RadialMeasure(f.grid(), std::move(m), factor[0] * geom.volume(), 2.0 * n, 2.0);
  }

  std::vector<double> g(size);
  for (std::size_t i = 0; i < size; ++i) g[i] = factor[i] * fs::mass_density(grid.node(i), n);
  const double m0 = f.value(0) * fs::mass(grid.front(), n);
  const double d0 = f.value(size - 1) * fs::mass_deficit(grid.back(), n);
  double lower = m0;
  double upper = d0;
  if (weighted) {
    lower = lower_tail_exp_mass(*weight, gamma, m0, 2.0 * n);
    upper = upper_tail_exp_mass(*weight, gamma, d0, 2.0);
  }
  auto cum = cumulative_integral(grid, g, true);
  for (double& x : cum) x += lower;
  const double total = cum.back() + upper;
  return RadialMeasure(f.grid(), std::move(cum), total, 2.0 * n, 2.0);
}

FsFamilyMember fs_family(double epsilon, const GridPtr& grid, const PnGeometry& geom) {
  require_pn(grid, "fs_family");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw MamfError(MamfError::Kind::invalid_argument, "fs_family needs epsilon > 0");
  }
  const std::size_t size = grid->size();
  if (epsilon == 1.0) {
    return FsFamilyMember{1.0, RadialPotential::zero(grid), 1.0};
  }
  std::vector<double> phi(size), slope(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double tau = grid->node(i);
    phi[i] = log_shifted(tau, epsilon) - fs::h(tau);
    // 2 e^{2t} / (e^{2t} + eps) - 2 e^{2t} / (e^{2t} + 1), factored.
    if (tau > 0.0) {
      const double x = std::exp(-2.0 * tau);
      slope[i] = 2.0 * (1.0 - epsilon) * x / ((1.0 + epsilon * x) * (1.0 + x));
    } else {
      const double a = std::exp(2.0 * tau);
      slope[i] = 2.0 * (1.0 - epsilon) * a / ((a + epsilon) * (a + 1.0));
    }
  }
  PotentialTails tails;
  tails.lower_limit = std::log(epsilon);
  tails.lower_rate = 2.0;
  tails.upper_limit = 0.0;
  tails.upper_rate = 2.0;
  RadialPotential potential(grid, std::move(phi), std::move(slope), tails);

  const RadialDensity one(grid, std::vector<double>(size, 1.0), 2.0);
  const double mass = density_to_measure_pn(one, &potential, geom.n + 1.0, geom).total_mass();
  return FsFamilyMember{epsilon, std::move(potential), geom.volume() / mass};
}

double cumulative_residual(const RadialPotential& phi, const RadialDensity& f,
                           double gamma, double C, const PnGeometry& geom) {
  const auto lhs = apply_pn(phi, geom);
  const auto rhs = density_to_measure_pn(f, &phi, gamma, geom);
  double r = 0.0;
  for (std::size_t i = 0; i < lhs.cumulative().size(); ++i) {
    r = std::max(r, std::abs(lhs.at(i) - C * rhs.at(i)));
  }
  return std::max(r, std::abs(lhs.total_mass() - C * rhs.total_mass()));
}

}  // namespace mamf::pn
