#pragma once

// Explicit constants for the L^infty and uniqueness estimates, and the
// exponential integrals they are built from.
//
// The Skoda-type constant A = sup { int e^{-gamma u} dmu : u in T_0 } is a
// supremum over an infinite-dimensional class. "certified" values come from a
// caller-supplied analytic upper bound; "empirical" values are maxima over a
// finite battery, hence lower bounds of A, and everything derived from them is
// tagged heuristic.

#include <string>
#include <vector>

#include "mamf/radial_core.hpp"

namespace mamf::cert {

enum class Mode { certified, empirical };

const char* to_string(Mode m);

struct CertificateInputs {
  double beta = 1.0;
  double A = 1.0;
  double gamma = 0.0;
  int n = 1;
  double p = 2.0;
  double f_p_norm = 0.0;
  Mode mode = Mode::certified;
};

struct Tagged {
  double value = 0.0;
  bool heuristic = false;
  std::string provenance;
};

/// beta A^{-1/n} / 2; heuristic in empirical mode.
Tagged gamma0(const CertificateInputs& in);

/// n A^{1/n} / gamma: solutions of (dd^c phi)^n = mu satisfy phi >= -bound.
double linfty_bound_local(double A, double gamma, int n);

/// 1 + (n log n + log A - n log gamma) / gamma, for 0 < gamma <= n. Stated for
/// a probability measure and a Kahler form of unit volume.
double linfty_bound_global(double A, double gamma, int n);

/// The global bound for potentials against the FS form of volume 2^n: with
/// omega' = omega / 2 of unit volume, phi / 2 is omega'-psh, so the bound on
/// -min phi doubles. A refers to the probability measure mu / 2^n and the
/// exponent e^{-2 gamma u'} with u' omega'-psh.
double linfty_bound_global_fs(double A, double gamma, int n);

/// int_{B_r} e^{-gamma u} dmu at every node, by parts against the cumulative
/// mass, with the lower tail included.
std::vector<double> cumulative_exp_integral(const RadialPotential& u, double gamma,
                                            const RadialMeasure& mu);

/// int e^{-gamma u} dmu; on P^n grids the upper tail is included.
double exp_integral(const RadialPotential& u, double gamma, const RadialMeasure& mu);

/// int e^{-gamma u} f dV (ball) or int e^{-gamma u} f omega^n (P^n).
double exp_integral(const RadialPotential& u, double gamma, const RadialDensity& f, int n);

/// {0, log r, max(log r, -c) for c in {0.5, 1, 2, 4}, (|z|^2 - 1)/2}.
std::vector<RadialPotential> default_battery(const GridPtr& grid);

struct EmpiricalA {
  double value = 0.0;
  std::size_t argmax = 0;
  std::string label = "lower bound of A_mu; theorem-grade use requires a certified upper bound";
};

/// Max of int e^{-gamma u} f dV over the battery. Candidates with total
/// Monge-Ampere mass above 1 are rejected; a divergent integral gives +inf.
EmpiricalA empirical_A(const RadialDensity& f, double gamma, int n,
                       const std::vector<RadialPotential>& battery);

/// gamma0 with beta = n/q (q conjugate to f.p()) and A = max(1, empirical A at
/// exponent beta) over the default battery.
Tagged empirical_gamma0(const RadialDensity& f, int n);

/// gamma * sup|u| < n.
bool smallness_certificate(const RadialPotential& u, double gamma, int n);

/// Upper bound for A on the unit disc when f <= K / pi: every u in T_0 is
/// bounded below by the Green potential of its mass, so Jensen's inequality
/// gives A <= max(1, 2^gamma * 2K / (2 - gamma)) for gamma < 2.
double certified_A_disc(double K, double gamma);

/// Upper bound for int e^{-2 gamma u} dmu over sup-normalized u on P^1 with the
/// unit-volume FS form, when mu <= K times that form: A <= K / (1 - gamma) for
/// gamma < 1 (Green representation plus Jensen).
double certified_A_p1(double K, double gamma);

}  // namespace mamf::cert
