#pragma once

// Reference solutions that do not go through the library's quadrature or
// solvers: RK4 shooting for the radial ODE, closed forms, and dense Simpson.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, n) / std::tgamma(static_cast<double>(n));
}

inline double uniform_density(int n) { return std::tgamma(n + 1.0) / std::pow(std::numbers::pi, n); }

inline double fs_h(double t) { return t > 0 ? 2 * t + std::log1p(std::exp(-2 * t)) : std::log1p(std::exp(2 * t)); }
inline double fs_dh(double t) { return 2.0 / (1.0 + std::exp(-2 * t)); }

/// Composite Simpson with `panels` (even) panels.
inline double simpson(const std::function<double(double)>& g, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double s = g(a) + g(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

/// Radial ODE of (dd^c u)^n = e^{-gamma u + m} f dV in t = log|z|:
///   chi' = M^{1/n},  M' = sigma e^{2nt} f(e^t) e^{-gamma chi + m}.
/// Integrates from `t_start` (chi = a) to each node of a uniform grid ending
/// at 0, with `sub` RK4 steps per grid cell.
struct Shooter {
  int n = 1;
  std::function<double(double)> f;  // density as a function of r
  double origin_power = 0.0;        // f ~ r^origin_power near 0
  double gamma = 0.0;
  double m = 0.0;
  double t_min = -20.0;
  int cells = 4095;
  int sub = 8;
  double lead = 12.0;  // integrate from t_min - lead

  double h() const { return -t_min / cells; }

  void rhs(double t, double chi, double M, double& dchi, double& dM) const {
    dchi = std::pow(std::max(M, 0.0), 1.0 / n);
    dM = sphere_area(n) * std::exp(2.0 * n * t) * f(std::exp(t)) * std::exp(-gamma * chi + m);
  }

  /// chi at the grid nodes for chi(-inf) = a (nodes only if `out` given).
  double run(double a, std::vector<double>* out) const {
    const double dt = h() / sub;
    const int lead_cells = static_cast<int>(std::ceil(lead / h()));
    double t = t_min - lead_cells * h();
    double chi = a;
    double M = sphere_area(n) * f(std::exp(t)) * std::exp(2.0 * n * t) * std::exp(-gamma * a + m) /
               (2.0 * n + origin_power);
    if (out) out->clear();
    const int total = (lead_cells + cells) * sub;
    for (int k = 0; k <= total; ++k) {
      if (out && k >= lead_cells * sub && (k - lead_cells * sub) % sub == 0) out->push_back(chi);
      if (k == total) break;
      double c1, m1, c2, m2, c3, m3, c4, m4;
      rhs(t, chi, M, c1, m1);
      rhs(t + dt / 2, chi + dt / 2 * c1, M + dt / 2 * m1, c2, m2);
      rhs(t + dt / 2, chi + dt / 2 * c2, M + dt / 2 * m2, c3, m3);
      rhs(t + dt, chi + dt * c3, M + dt * m3, c4, m4);
      chi += dt / 6 * (c1 + 2 * c2 + 2 * c3 + c4);
      M += dt / 6 * (m1 + 2 * m2 + 2 * m3 + m4);
      t = t_min - lead_cells * h() + (k + 1) * dt;
      if (!std::isfinite(chi) || chi > 1e6) return 1e6;
    }
    return chi;
  }

  /// Maximal solution: the largest a with chi(0) = 0, found by scanning a
  /// downward from 0 and bisecting the first sign change.
  std::optional<std::vector<double>> maximal(double a_floor = -40.0, double da = 0.05) const {
    double hi = 0.0;
    double f_hi = run(hi, nullptr);
    for (double lo = -da; lo >= a_floor; lo -= da) {
      const double f_lo = run(lo, nullptr);
      if (f_lo <= 0.0 && f_hi > 0.0) {
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          (run(mid, nullptr) > 0.0 ? hi : lo) = mid;
        }
        std::vector<double> chi;
        run(0.5 * (lo + hi), &chi);
        return chi;
      }
      hi = lo;
      f_hi = f_lo;
    }
    return std::nullopt;
  }

  /// Whether some a gives chi(0) <= 0, i.e. a solution exists at this gamma.
  bool solvable(double a_floor = -40.0) const {
    // chi(0; a) is unimodal in a: golden-section search for its minimum.
    double lo = a_floor, hi = 0.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = run(x1, nullptr), f2 = run(x2, nullptr);
    for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
      if (f1 <= 0.0 || f2 <= 0.0) return true;
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = run(x1, nullptr);
      } else {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = run(x2, nullptr);
      }
    }
    return std::min(f1, f2) <= 0.0;
  }
};

/// Largest gamma for which the fixed-m problem is solvable, by bisection on
/// Shooter::solvable.
inline double critical_gamma(Shooter s, double lo, double hi, int iters = 30) {
  for (int it = 0; it < iters; ++it) {
    s.gamma = 0.5 * (lo + hi);
    (s.solvable() ? lo : hi) = s.gamma;
  }
  return 0.5 * (lo + hi);
}

/// Disc, f = 1/pi: Liouville solution u = -(2/gamma) log((1+mu)/(1+mu r^2))
/// with 8 mu = lambda (1+mu)^2, lambda = 2 gamma e^m; smaller mu = maximal.
inline std::optional<double> gelfand_mu(double gamma, double m) {
  const double lambda = 2.0 * gamma * std::exp(m);
  const double b = 8.0 - 2.0 * lambda;
  const double disc = b * b - 4.0 * lambda * lambda;
  if (disc < 0.0) return std::nullopt;
  return (b - std::sqrt(disc)) / (2.0 * lambda);
}

inline double gelfand_u(double gamma, double mu, double r) {
  return -(2.0 / gamma) * std::log((1.0 + mu) / (1.0 + mu * r * r));
}

/// P^1, nu = (FS + FS shifted to tau - 1) / 2: phi = (h(tau-1) - h(tau)) / 2.
inline double pn_two_bump_phi(double tau) { return 0.5 * (fs_h(tau - 1.0) - fs_h(tau)); }

/// Random positive smooth radial profile in t: a constant floor plus a few
/// Gaussian bumps. Deterministic for a given seed.
inline std::function<double(double)> random_profile(std::uint64_t seed, double t_lo, double t_hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  struct Bump { double c, w, a; };
  std::vector<Bump> bumps(3);
  for (auto& b : bumps) b = {t_lo + (t_hi - t_lo) * U(rng), 0.3 + 1.5 * U(rng), 3.0 * U(rng)};
  const double floor = 0.2 + U(rng);
  return [bumps, floor](double t) {
    double v = floor;
    for (const auto& b : bumps) v += b.a * std::exp(-0.5 * (t - b.c) * (t - b.c) / (b.w * b.w));
    return v;
  };
}

}  // namespace oracle
