#pragma once

// S^1-invariant potentials on P^n against the Fubini-Study form
// omega = dd^c log(1 + |z|^2), written in the chart C^n with tau = log|z|.
// A potential phi is omega-psh iff psi = h + phi is convex with slope in
// [0, 2]; its Monge-Ampere mass on {|z| <= e^tau} is psi'(tau)^n.
//
// omega is kept unnormalized: int omega^n = 2^n.

#include "mamf/fs_profile.hpp"
#include "mamf/radial_core.hpp"

namespace mamf::pn {

struct PnGeometry {
  int n = 1;

  explicit PnGeometry(int dim);

  double volume() const { return fs::volume(n); }
  double h(double tau) const { return fs::h(tau); }
  double dh(double tau) const { return fs::dh(tau); }
  double fs_mass(double tau) const { return fs::mass(tau, n); }
};

/// Inverse operator. Requires total mass V (relative tolerance `mass_tol`);
/// the result is normalized by sup phi = 0, tail limits included.
RadialPotential solve_pn(const RadialMeasure& nu, const PnGeometry& geom,
                         double mass_tol = 1e-8);

/// Forward operator N(tau_i) = (h'(tau_i) + phi'(tau_i))^n.
RadialMeasure apply_pn(const RadialPotential& phi, const PnGeometry& geom);

bool is_admissible(const RadialPotential& phi, const PnGeometry& geom,
                   double tol = 1e-10);

/// The FS reference mass h'(tau)^n sampled on a grid.
RadialMeasure fs_measure(const GridPtr& grid, const PnGeometry& geom);

/// Cumulative mass of e^{-gamma w} f omega^n; `weight` = nullptr means w = 0.
RadialMeasure density_to_measure_pn(const RadialDensity& f,
                                    const RadialPotential* weight, double gamma,
                                    const PnGeometry& geom);

/// phi_eps = log(e^{2 tau} + eps) - log(e^{2 tau} + 1), which solves
/// (omega + dd^c phi)^n = C e^{-(n+1) phi} omega^n.
struct FsFamilyMember {
  double epsilon = 1.0;
  RadialPotential potential;
  /// int omega^n / int e^{-(n+1) phi_eps} omega^n, by quadrature.
  double C = 1.0;
};

FsFamilyMember fs_family(double epsilon, const GridPtr& grid,
                         const PnGeometry& geom);

/// Sup-norm residual of (omega + dd^c phi)^n = C e^{-gamma phi} f omega^n in
/// cumulative form.
double cumulative_residual(const RadialPotential& phi, const RadialDensity& f,
                           double gamma, double C, const PnGeometry& geom);

}  // namespace mamf::pn
