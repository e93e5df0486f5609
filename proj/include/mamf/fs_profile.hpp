#pragma once

// Fubini-Study profile on P^n in the chart C^n, tau = log|z|:
// omega = dd^c h(tau) with h(tau) = log(1 + e^{2 tau}). The omega^n-mass of
// the ball {|z| <= e^tau} is h'(tau)^n and the total volume is 2^n.

#include <cmath>

namespace mamf::fs {

inline double h(double tau) {
  return tau > 0.0 ? 2.0 * tau + std::log1p(std::exp(-2.0 * tau))
                   : std::log1p(std::exp(2.0 * tau));
}

inline double dh(double tau) { return 2.0 / (1.0 + std::exp(-2.0 * tau)); }

/// 2 - h'(tau), computed without cancellation.
inline double dh_gap(double tau) { return 2.0 / (1.0 + std::exp(2.0 * tau)); }

inline double d2h(double tau) { return dh(tau) * dh_gap(tau); }

inline double volume(int n) { return std::ldexp(1.0, n); }

inline double mass(double tau, int n) { return std::pow(dh(tau), n); }

/// V - h'(tau)^n.
inline double mass_deficit(double tau, int n) {
  const double q = 1.0 / (1.0 + std::exp(2.0 * tau));
  return -volume(n) * std::expm1(n * std::log1p(-q));
}

/// d/dtau of h'(tau)^n: the radial density of omega^n in tau.
inline double mass_density(double tau, int n) {
  return n * std::pow(dh(tau), n - 1) * d2h(tau);
}

}  // namespace mamf::fs
