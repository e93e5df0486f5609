#pragma once

// Radial complex Monge-Ampere operator on the unit ball of C^n with zero
// Dirichlet data. For u(z) = chi(log|z|) convex nondecreasing in t, the
// (dd^c u)^n-mass of the closed ball of radius e^t is chi'(t)^n, so the
// Dirichlet problem reduces to chi(t) = -int_t^0 M(e^s)^{1/n} ds.

#include <optional>

#include "mamf/radial_core.hpp"

namespace mamf::ball {

enum class OriginAtom { allow, reject };

/// Inverse operator. An atom at the origin yields a log-type (unbounded)
/// potential; pass OriginAtom::reject when only bounded solutions make sense.
RadialPotential solve_dirichlet(const RadialMeasure& mu, int n,
                                OriginAtom atoms = OriginAtom::allow);

/// Forward operator from the stored slopes: M(t_i) = chi'(t_i)^n.
RadialMeasure apply_ma(const RadialPotential& u, int n);

/// Monge-Ampere measure of u + v. In the radial class slopes add, so
/// M_{u+v}^{1/n} = M_u^{1/n} + M_v^{1/n} node by node.
RadialMeasure mixed_ma_combine(const RadialPotential& u,
                               const RadialPotential& v, int n);

struct ComparisonReport {
  bool comparable = false;
  /// min over nodes of solve(mu) - solve(nu); >= 0 when the principle holds.
  double margin = 0.0;
  bool holds = false;
};

ComparisonReport comparison_check(const RadialMeasure& mu,
                                  const RadialMeasure& nu, int n);

/// Psh test for a ball potential: nonnegative nondecreasing slopes, values
/// nondecreasing and vanishing on the boundary. Convexity is read off the
/// slopes; second differences of the values carry O(h^2) quadrature error.
bool is_admissible(const RadialPotential& u, double tol = 1e-10);

/// Cumulative mass of e^{-gamma w + m} f dV; `weight` = nullopt means w = 0.
RadialMeasure weighted_mass(const RadialDensity& f, int n,
                            const RadialPotential* weight, double gamma,
                            double m);

/// chi(t) = t, i.e. u = log|z|.
RadialPotential log_potential(const GridPtr& grid);

/// u = max(log|z|, -c). Slopes follow the closed-ball convention at the kink.
RadialPotential truncated_log_potential(const GridPtr& grid, double c);

/// u = (|z|^2 - 1) / 2, whose Monge-Ampere mass is M(r) = r^{2n}.
RadialPotential quadratic_potential(const GridPtr& grid);

/// v = e^{gamma u / n} - 1 for u <= 0, with slope (gamma/n) e^{gamma u/n} u'.
RadialPotential exp_transform(const RadialPotential& u, double gamma, int n);

}  // namespace mamf::ball
