#pragma once

// Radial discretization shared by the ball and projective-space solvers.
//
// Everything lives on a uniform grid in the log-radius t = log|z|. A radial
// positive measure is stored through its cumulative mass M(t) (the mass of the
// closed ball of radius e^t) and a radial potential through its values and
// slopes in t. Below the first node (and above the last one on P^n grids)
// quantities are continued by exponential tail models; with t as variable the
// origin is a tail rather than a singularity.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mamf {

class MamfError : public std::runtime_error {
 public:
  enum class Kind {
    invalid_argument,
    grid_mismatch,
    divergent,
    inadmissible,
    mass_mismatch,
  };

  MamfError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class GridKind { ball, pn };

const char* to_string(GridKind kind);

class RadialGrid {
 public:
  GridKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double spacing() const noexcept { return spacing_; }
  double front() const noexcept { return nodes_.front(); }
  double back() const noexcept { return nodes_.back(); }
  /// Default decay rate of cumulative masses below the first node: M ~ e^{k t}.
  double tail_exponent() const noexcept { return tail_exponent_; }

  bool same_as(const RadialGrid& other) const noexcept;

 private:
  friend std::shared_ptr<const RadialGrid> make_grid(GridKind, int, double,
                                                     double, int);
  RadialGrid() = default;

  GridKind kind_ = GridKind::ball;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double spacing_ = 0.0;
  double tail_exponent_ = 2.0;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Uniform log-radius grid. Ball grids end at t = 0; P^n grids straddle 0.
/// Quadrature weights are composite Simpson, with a closing 3/8 panel when
/// the interval count is odd. `dim` only sets the default tail exponent 2*dim.
GridPtr make_grid(GridKind kind, int n_nodes, double t_min, double t_max,
                  int dim = 1);

// ---------------------------------------------------------------------------
// Quadrature on a grid

double integrate(const RadialGrid& grid, std::span<const double> values);

/// Running integral from the first node, I_j = int_{t_0}^{t_j} values.
/// I_j is composite Simpson, closed by a 3/8 panel at odd j; I_1 comes from
/// the cubic through the first four nodes. For nonnegative integrands pass
/// `monotone = true`: the result is then clamped to be nondecreasing.
std::vector<double> cumulative_integral(const RadialGrid& grid,
                                        std::span<const double> values,
                                        bool monotone = false);

/// Running integral towards the last node, R_j = int_{t_j}^{t_N} values.
std::vector<double> reverse_cumulative_integral(const RadialGrid& grid,
                                                std::span<const double> values,
                                                bool monotone = false);

/// Fourth-order finite-difference derivative at the nodes.
std::vector<double> differentiate(const RadialGrid& grid,
                                  std::span<const double> values);

// ---------------------------------------------------------------------------
// Domain types

/// Nonnegative radial density, against dV on the ball and against omega^n on
/// P^n. Below the first ball node the density is continued as
/// f(rho) ~ f(rho_0) (rho/rho_0)^origin_power.
class RadialDensity {
 public:
  RadialDensity(GridPtr grid, std::vector<double> values, double p,
                double origin_power = 0.0);

  const GridPtr& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  double p() const noexcept { return p_; }
  double origin_power() const noexcept { return origin_power_; }

  RadialDensity scaled(double factor) const;
  RadialDensity with_values(std::vector<double> values) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
  double p_;
  double origin_power_;
};

/// Cumulative mass of a radial measure. `lower_exponent` k gives the tail
/// M(t) = M(t_0) e^{k (t - t_0)} below the grid; k = 0 with M(t_0) > 0 is an
/// atom at the origin. On P^n grids the deficit V - M(t) decays above the
/// last node like e^{-upper_exponent (t - t_N)}.
class RadialMeasure {
 public:
  RadialMeasure(GridPtr grid, std::vector<double> cumulative, double total_mass,
                double lower_exponent, double upper_exponent = 2.0);

  const GridPtr& grid() const noexcept { return grid_; }
  std::span<const double> cumulative() const noexcept { return cumulative_; }
  double at(std::size_t i) const { return cumulative_[i]; }
  double total_mass() const noexcept { return total_mass_; }
  double lower_exponent() const noexcept { return lower_exponent_; }
  double upper_exponent() const noexcept { return upper_exponent_; }

  /// Mass carried by the origin itself (nonzero only for k = 0).
  double origin_atom() const noexcept;

  RadialMeasure scaled(double factor) const;

 private:
  GridPtr grid_;
  std::vector<double> cumulative_;
  double total_mass_;
  double lower_exponent_;
  double upper_exponent_;
};

/// Exponential continuation of a potential outside the grid:
///   t < t_0 : v(t) = lower_limit + (v_0 - lower_limit) e^{lower_rate (t - t_0)}
///   t > t_N : v(t) = upper_limit + (v_N - upper_limit) e^{-upper_rate (t - t_N)}
/// lower_rate = 0 means linear continuation with the first slope; the lower
/// limit is then -inf whenever that slope is positive (log-type potentials).
struct PotentialTails {
  double lower_limit = 0.0;
  double lower_rate = 2.0;
  double upper_limit = 0.0;
  double upper_rate = 2.0;
};

/// Radial potential in log-radius form. Ball: chi(t) with u(z) = chi(log|z|).
/// P^n: phi(tau) relative to the Fubini-Study profile h(tau) = log(1+e^{2tau}).
class RadialPotential {
 public:
  RadialPotential(GridPtr grid, std::vector<double> values,
                  std::vector<double> slopes, PotentialTails tails);

  /// Slopes from fourth-order differences; tails fitted from the end slopes
  /// with the given rates.
  static RadialPotential from_values(GridPtr grid, std::vector<double> values,
                                     double lower_rate = 2.0,
                                     double upper_rate = 2.0);

  static RadialPotential zero(GridPtr grid);

  const GridPtr& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> slopes() const noexcept { return slopes_; }
  double value(std::size_t i) const { return values_[i]; }
  double slope(std::size_t i) const { return slopes_[i]; }
  const PotentialTails& tails() const noexcept { return tails_; }

  /// Evaluation anywhere on the line: cubic Hermite inside, tails outside.
  double evaluate(double t) const;

  bool bounded() const noexcept;
  /// Infimum / supremum including tail limits.
  double inf() const noexcept;
  double sup() const noexcept;
  double sup_norm() const noexcept;

  RadialPotential shifted(double c) const;
  RadialPotential scaled(double lambda) const;
  /// (1 - theta) * this + theta * other
  RadialPotential blend(const RadialPotential& other, double theta) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  PotentialTails tails_;
};

RadialPotential operator+(const RadialPotential& u, const RadialPotential& v);
RadialPotential operator-(const RadialPotential& u, const RadialPotential& v);

void require_same_grid(const GridPtr& a, const GridPtr& b, const char* where);

// ---------------------------------------------------------------------------
// Operations

/// sigma_{2n-1} = 2 pi^n / (n-1)!, the area of the unit sphere in C^n.
double sphere_area(int n);

/// Cumulative mass of f dV on the ball: M(r) = sigma int_0^r f rho^{2n-1} drho.
RadialMeasure cumulative_mass(const RadialDensity& f, int n);

/// Whether f dV (ball) has unit mass within 10 h^2.
bool is_probability_density(const RadialDensity& f, int n);

/// (int f^q dV)^{1/q} on the ball, (int f^q omega^n)^{1/q} on P^n.
double lp_norm(const RadialDensity& f, double q, int n);

/// max |u - v| over nodes and tail limits.
double sup_distance(const RadialPotential& u, const RadialPotential& v);

/// int_{-inf}^{t_0} e^{-gamma v} dM for the lower tail M = m0 e^{k (t - t_0)}
/// of a measure, with v continued by the tail model of `u`.
double lower_tail_exp_mass(const RadialPotential& u, double gamma, double m0,
                           double k);

/// int_{t_N}^{inf} e^{-gamma v} dM for an upper deficit d0 e^{-k (t - t_N)}.
double upper_tail_exp_mass(const RadialPotential& u, double gamma, double d0,
                           double k);

}  // namespace mamf
