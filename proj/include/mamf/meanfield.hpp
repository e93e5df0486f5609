#pragma once

// Fixed-point solvers for Monge-Ampere mean-field equations in the radial
// class. Sign convention: the right-hand side carries e^{-gamma u}, so
// gamma > 0 is the coupling where uniqueness can fail and gamma < 0 gives
// the e^{+u} equations, which are uniquely solvable.
//
//   ball, fixed m : (dd^c u)^n = e^{-gamma u + m} f dV,        u = 0 on the sphere
//   ball, normed  : (dd^c u)^n = e^{-gamma u} f dV / int e^{-gamma u} f dV
//   P^n           : (omega + dd^c u)^n = e^{-gamma u} f omega^n

#include <optional>
#include <string>
#include <vector>

#include "mamf/ma_pn.hpp"
#include "mamf/radial_core.hpp"

namespace mamf::meanfield {

enum class Geometry { ball, pn };

const char* to_string(Geometry g);

struct MeanFieldProblem {
  Geometry geometry = Geometry::ball;
  int n = 1;
  RadialDensity f;
  double gamma = 0.0;
  bool normalized = true;
  /// Only read by the fixed-m ball iteration.
  double m = 0.0;
};

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 1000;
  /// theta in u_{k+1} = (1 - theta) T(u_k) + theta u_k.
  double damping = 0.0;
  double blowup_cap = 1e4;
  /// Switch to theta = 0.5 once the iteration stops contracting.
  bool auto_damping = true;
};

enum class Monotonicity { none, nonincreasing, nondecreasing };

const char* to_string(Monotonicity m);

struct SolveReport {
  int iterations = 0;
  /// sup |u_{k+1} - u_k| per iteration.
  std::vector<double> step_trace;
  /// Cumulative-form equation residual of u_k per iteration.
  std::vector<double> residual_trace;
  bool monotone = true;
  Monotonicity direction = Monotonicity::none;
  bool converged = false;
  bool diverged = false;
  std::string cause;
  /// Ball: m = -log int e^{-gamma u} f dV. P^n: b = log int e^{-gamma u_0} f omega^n
  /// with u_0 = u - sup u (for gamma = 0, the log of the free multiplicative constant).
  double normalization_constant = 0.0;
  double sup_norm = 0.0;
  double final_residual = 0.0;
  double damping = 0.0;
  bool damping_escalated = false;
};

struct Solution {
  RadialPotential u;
  SolveReport report;
};

/// Picard iteration psi_{k+1} = solve_dirichlet(e^{-gamma psi_k + m} f dV) on
/// the ball. The default seed solve_dirichlet(e^m f dV) is a supersolution
/// for gamma > 0, so the iterates decrease; a subsolution seed makes them
/// increase towards the maximal solution.
Solution picard_fixed_m(const MeanFieldProblem& prob,
                        const std::optional<RadialPotential>& seed,
                        const SolverOptions& opts = {});

/// psi = solve_dirichlet(e^{m + gamma K} f dV) if sup |psi| <= K, which makes
/// psi a subsolution of the fixed-m equation.
std::optional<RadialPotential> subsolution_seed(const MeanFieldProblem& prob,
                                                double K);

/// Normalized ball equation, or the compact equation on P^n (where the
/// normalization constant is absorbed into an additive shift).
Solution picard_normalized(const MeanFieldProblem& prob,
                           const std::optional<RadialPotential>& seed,
                           const SolverOptions& opts = {});

/// e^{+u}-type equations (gamma < 0): compact on P^n, fixed-m on the ball.
Solution picard_exp(const MeanFieldProblem& prob, const SolverOptions& opts = {},
                    const std::optional<RadialPotential>& seed = std::nullopt);

/// Dispatches to the solver matching the problem's geometry, sign and mode.
Solution solve(const MeanFieldProblem& prob,
               const std::optional<RadialPotential>& seed,
               const SolverOptions& opts = {});

/// Cumulative-form residual of the problem's own equation at u.
double equation_residual(const MeanFieldProblem& prob, const RadialPotential& u);

/// Phi(m) = m + log int e^{-gamma u} f dV; zeros are normalized solutions.
double branch_function(const MeanFieldProblem& prob, double m,
                       const RadialPotential& u);

struct BranchCell {
  double m = 0.0;
  bool converged = false;
  bool diverged = false;
  double phi = 0.0;
  double sup_norm = 0.0;
  int iterations = 0;
};

struct BranchZero {
  double m = 0.0;
  /// Bracket; equal to [m, m] for refined transversal zeros.
  double m_lo = 0.0;
  double m_hi = 0.0;
  bool tangential = false;
  bool refined = false;
  double phi = 0.0;
  double sup_norm = 0.0;
  /// gamma * sup|u| < n for the normalized solution at this zero.
  bool small = false;
  std::optional<RadialPotential> solution;
};

struct BranchScan {
  std::vector<BranchCell> cells;
  std::vector<BranchZero> zeros;
};

BranchScan branch_scan(const MeanFieldProblem& prob, double m_lo, double m_hi,
                       int m_steps, const SolverOptions& opts = {},
                       int threads = 1);

enum class Verdict { all_coincide, distinct, some_diverged };

const char* to_string(Verdict v);

struct UniquenessResult {
  Verdict verdict = Verdict::all_coincide;
  std::vector<Solution> solutions;
  /// Row-major pairwise sup distances (empty when some run diverged).
  std::vector<double> distances;
  double max_distance = 0.0;
};

UniquenessResult uniqueness_probe(const MeanFieldProblem& prob,
                                  const std::vector<RadialPotential>& seeds,
                                  const SolverOptions& opts = {},
                                  double coincide_tol = 1e-6);

}  // namespace mamf::meanfield
