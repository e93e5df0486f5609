#include "mamf/meanfield.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "mamf/ma_ball.hpp"

namespace mamf::meanfield {

namespace {

constexpr double kMonotoneTol = 1e-10;
constexpr double kPhiTol = 1e-10;
constexpr double kTangentTol = 1e-8;

struct Step {
  RadialPotential next;
  double residual;
};

using StepFn = std::function<Step(const RadialPotential&)>;
using ResidualFn = std::function<double(const RadialPotential&)>;
using ConstantFn = std::function<double(const RadialPotential&)>;

void require_geometry(const MeanFieldProblem& prob, Geometry g, const char* where) {
  if (prob.geometry != g) {
    throw MamfError(MamfError::Kind::invalid_argument,
                    std::string(where) + " does not support geometry " + to_string(prob.geometry));
  }
  const GridKind kind = g == Geometry::ball ? GridKind::ball : GridKind::pn;
  if (prob.f.grid()->kind() != kind) {
    throw MamfError(MamfError::Kind::grid_mismatch,
                    std::string(where) + ": density grid does not match the geometry");
  }
  if (prob.n < 1) throw MamfError(MamfError::Kind::invalid_argument, "dimension must be >= 1");
  if (!std::isfinite(prob.gamma)) {
    throw MamfError(MamfError::Kind::invalid_argument, std::string(where) + ": gamma must be finite");
  }
}

bool all_finite(const RadialPotential& u) {
  for (double x : u.values()) {
    if (!std::isfinite(x)) return false;
  }
  for (double x : u.slopes()) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// sup_i |lhs_i - rhs_i| with lhs_i = s_i^n.
double cumulative_gap(std::span<const double> slopes_total, const RadialMeasure& rhs, int n) {
  double r = 0.0;
  for (std::size_t i = 0; i < slopes_total.size(); ++i) {
    const double lhs = std::pow(std::max(slopes_total[i], 0.0), n);
    r = std::max(r, std::abs(lhs - rhs.at(i)));
  }
  return r;
}

double ball_residual(const RadialPotential& u, const RadialMeasure& rhs, int n) {
  return cumulative_gap(u.slopes(), rhs, n);
}

double pn_residual(const RadialPotential& u, const RadialMeasure& rhs, int n) {
  const auto& grid = *u.grid();
  std::vector<double> s(grid.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = fs::dh(grid.node(i)) + u.slope(i);
  return std::max(cumulative_gap(s, rhs, n), std::abs(fs::volume(n) - rhs.total_mass()));
}

Solution run_picard(RadialPotential seed, const StepFn& step, const ResidualFn& residual,
                    const ConstantFn& constant, const SolverOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || opts.damping < 0.0 || opts.damping >= 1.0 ||
      !(opts.blowup_cap > 0.0)) {
    throw MamfError(MamfError::Kind::invalid_argument, "invalid solver options");
  }
  Solution out{std::move(seed), {}};
  SolveReport& rep = out.report;
  rep.damping = opts.damping;
  double theta = opts.damping;
  int direction = 0;  // -1 nonincreasing, +1 nondecreasing

  for (int k = 0; k < opts.max_iter; ++k) {
    const RadialPotential& u = out.u;
    std::optional<Step> s;
    try {
      s.emplace(step(u));
    } catch (const MamfError& e) {
      if (e.kind() != MamfError::Kind::divergent && e.kind() != MamfError::Kind::mass_mismatch) throw;
      rep.diverged = true;
      rep.cause = e.what();
      break;
    }
    RadialPotential next = theta > 0.0 ? s->next.blend(u, theta) : std::move(s->next);
    if (!all_finite(next) || !std::isfinite(s->residual)) {
      rep.diverged = true;
      rep.cause = "non-finite iterate";
      break;
    }
    const double dist = sup_distance(next, u);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < next.values().size(); ++i) {
      const double d = next.value(i) - u.value(i);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const bool down = hi <= kMonotoneTol;
    const bool up = lo >= -kMonotoneTol;
    if (!(down && up)) {
      const int dir = down ? -1 : (up ? 1 : 0);
      if (dir == 0 || (direction != 0 && dir != direction)) rep.monotone = false;
      if (direction == 0) direction = dir;
    }

    ++rep.iterations;
    rep.step_trace.push_back(dist);
    rep.residual_trace.push_back(s->residual);
    out.u = std::move(next);

    if (out.u.sup_norm() > opts.blowup_cap) {
      rep.diverged = true;
      rep.cause = "sup norm exceeded the blow-up cap";
      break;
    }
    if (dist < opts.tol) {
      rep.converged = true;
      break;
    }
    const std::size_t m = rep.step_trace.size();
    if (opts.auto_damping && theta == 0.0 && m >= 2 && rep.step_trace[m - 1] >= rep.step_trace[m - 2]) {
      theta = 0.5;
      rep.damping = theta;
      rep.damping_escalated = true;
    }
  }
  if (!rep.monotone || direction == 0) {
    rep.direction = Monotonicity::none;
  } else {
    rep.direction = direction < 0 ? Monotonicity::nonincreasing : Monotonicity::nondecreasing;
  }
  if (!rep.diverged) {
    try {
      rep.sup_norm = out.u.sup_norm();
      rep.final_residual = residual(out.u);
      rep.normalization_constant = constant(out.u);
    } catch (const MamfError& e) {
      if (e.kind() != MamfError::Kind::divergent && e.kind() != MamfError::Kind::mass_mismatch) throw;
      rep.diverged = true;
      rep.converged = false;
      rep.cause = e.what();
    }
  }
  if (rep.diverged) {
    rep.sup_norm = std::isfinite(out.u.sup_norm()) ? out.u.sup_norm()
                                                    : std::numeric_limits<double>::infinity();
    rep.final_residual = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

void require_ball_seed(const RadialPotential& seed, const MeanFieldProblem& prob) {
  require_same_grid(seed.grid(), prob.f.grid(), "seed");
  if (!seed.bounded() || !ball::is_admissible(seed, 1e-8)) {
    throw MamfError(MamfError::Kind::inadmissible, "seed is not a bounded admissible potential");
  }
}

void require_pn_seed(const RadialPotential& seed, const MeanFieldProblem& prob) {
  require_same_grid(seed.grid(), prob.f.grid(), "seed");
  if (!pn::is_admissible(seed, pn::PnGeometry(prob.n), 1e-8)) {
    throw MamfError(MamfError::Kind::inadmissible, "seed is not an admissible omega-psh potential");
  }
}

double ball_exp_integral(const MeanFieldProblem& prob, const RadialPotential& u) {
  return ball::weighted_mass(prob.f, prob.n, &u, prob.gamma, 0.0).total_mass();
}

Solution ball_fixed_m(const MeanFieldProblem& prob, const std::optional<RadialPotential>& seed,
                      const SolverOptions& opts) {
  if (!std::isfinite(prob.m)) {
    throw MamfError(MamfError::Kind::invalid_argument, "m must be finite");
  }
  const int n = prob.n;
  RadialPotential start = seed ? *seed
                               : ball::solve_dirichlet(ball::weighted_mass(prob.f, n, nullptr, 0.0, prob.m),
                                                       n, ball::OriginAtom::reject);
  if (seed) require_ball_seed(*seed, prob);
  auto step = [&](const RadialPotential& u) {
    auto mu = ball::weighted_mass(prob.f, n, &u, prob.gamma, prob.m);
    const double r = ball_residual(u, mu, n);
    return Step{ball::solve_dirichlet(mu, n, ball::OriginAtom::reject), r};
  };
  auto residual = [&](const RadialPotential& u) {
    return ball_residual(u, ball::weighted_mass(prob.f, n, &u, prob.gamma, prob.m), n);
  };
  auto constant = [&](const RadialPotential& u) { return -std::log(ball_exp_integral(prob, u)); };
  return run_picard(std::move(start), step, residual, constant, opts);
}

Solution ball_normalized(const MeanFieldProblem& prob, const std::optional<RadialPotential>& seed,
                         const SolverOptions& opts) {
  const int n = prob.n;
  auto normalized_measure = [&](const RadialPotential* u) {
    auto mu = ball::weighted_mass(prob.f, n, u, prob.gamma, 0.0);
    if (!(mu.total_mass() > 0.0) || !std::isfinite(mu.total_mass())) {
      throw MamfError(MamfError::Kind::divergent, "int e^{-gamma u} f dV is not a positive finite number");
    }
    return mu.scaled(1.0 / mu.total_mass());
  };
  RadialPotential start = seed ? *seed
                               : ball::solve_dirichlet(normalized_measure(nullptr), n,
                                                       ball::OriginAtom::reject);
  if (seed) require_ball_seed(*seed, prob);
  auto step = [&](const RadialPotential& u) {
    auto mu = normalized_measure(&u);
    const double r = ball_residual(u, mu, n);
    return Step{ball::solve_dirichlet(mu, n, ball::OriginAtom::reject), r};
  };
  auto residual = [&](const RadialPotential& u) { return ball_residual(u, normalized_measure(&u), n); };
  auto constant = [&](const RadialPotential& u) { return -std::log(ball_exp_integral(prob, u)); };
  return run_picard(std::move(start), step, residual, constant, opts);
}

Solution pn_compact(const MeanFieldProblem& prob, const std::optional<RadialPotential>& seed,
                    const SolverOptions& opts) {
  const pn::PnGeometry geom(prob.n);
  const double volume = geom.volume();
  const double gamma = prob.gamma;
  RadialPotential start = seed ? *seed : RadialPotential::zero(prob.f.grid());
  if (seed) require_pn_seed(*seed, prob);

  auto measure = [&](const RadialPotential& u) {
    auto nu = pn::density_to_measure_pn(prob.f, &u, gamma, geom);
    if (!(nu.total_mass() > 0.0) || !std::isfinite(nu.total_mass())) {
      throw MamfError(MamfError::Kind::divergent, "int e^{-gamma u} f omega^n is not a positive finite number");
    }
    return nu;
  };
  if (gamma == 0.0) {
    auto nu = measure(start);
    const double c = volume / nu.total_mass();
    auto target = nu.scaled(c);
    auto step = [&](const RadialPotential& u) {
      return Step{pn::solve_pn(target, geom), pn_residual(u, target, prob.n)};
    };
    auto residual = [&](const RadialPotential& u) { return pn_residual(u, target, prob.n); };
    auto constant = [&](const RadialPotential&) { return std::log(c); };
    return run_picard(std::move(start), step, residual, constant, opts);
  }
  auto step = [&](const RadialPotential& u) {
    auto nu = measure(u);
    const double r = pn_residual(u, nu, prob.n);
    auto phi = pn::solve_pn(nu.scaled(volume / nu.total_mass()), geom);
    const double j = measure(phi).total_mass();
    return Step{phi.shifted(std::log(j / volume) / gamma), r};
  };
  auto residual = [&](const RadialPotential& u) { return pn_residual(u, measure(u), prob.n); };
  auto constant = [&](const RadialPotential& u) {
    return std::log(measure(u).total_mass()) + gamma * u.sup();
  };
  return run_picard(std::move(start), step, residual, constant, opts);
}

}  // namespace

const char* to_string(Geometry g) { return g == Geometry::ball ? "ball" : "pn"; }

const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::nonincreasing: return "nonincreasing";
    case Monotonicity::nondecreasing: return "nondecreasing";
    case Monotonicity::none: break;
  }
  return "none";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::all_coincide: return "all-coincide";
    case Verdict::distinct: return "distinct";
    case Verdict::some_diverged: return "some-diverged";
  }
  return "unknown";
}

Solution picard_fixed_m(const MeanFieldProblem& prob, const std::optional<RadialPotential>& seed,
                        const SolverOptions& opts) {
  require_geometry(prob, Geometry::ball, "picard_fixed_m");
  return ball_fixed_m(prob, seed, opts);
}

std::optional<RadialPotential> subsolution_seed(const MeanFieldProblem& prob, double K) {
  require_geometry(prob, Geometry::ball, "subsolution_seed");
  if (!(K > 0.0)) throw MamfError(MamfError::Kind::invalid_argument, "K must be positive");
  const double shift = prob.m + prob.gamma * K;
  if (!std::isfinite(shift) || shift > 700.0) return std::nullopt;
  auto psi = ball::solve_dirichlet(ball::weighted_mass(prob.f, prob.n, nullptr, 0.0, shift), prob.n,
                                   ball::OriginAtom::reject);
  if (psi.sup_norm() <= K) return psi;
  return std::nullopt;
}

Solution picard_normalized(const MeanFieldProblem& prob, const std::optional<RadialPotential>& seed,
                           const SolverOptions& opts) {
  if (prob.geometry == Geometry::ball) {
    require_geometry(prob, Geometry::ball, "picard_normalized");
    return ball_normalized(prob, seed, opts);
  }
  require_geometry(prob, Geometry::pn, "picard_normalized");
  return pn_compact(prob, seed, opts);
}

Solution picard_exp(const MeanFieldProblem& prob, const SolverOptions& opts,
                    const std::optional<RadialPotential>& seed) {
  require_geometry(prob, prob.geometry, "picard_exp");
  if (!(prob.gamma < 0.0)) {
    throw MamfError(MamfError::Kind::invalid_argument, "picard_exp needs gamma < 0");
  }
  if (prob.geometry == Geometry::ball) return ball_fixed_m(prob, seed, opts);
  return pn_compact(prob, seed, opts);
}

Solution solve(const MeanFieldProblem& prob, const std::optional<RadialPotential>& seed,
               const SolverOptions& opts) {
  if (prob.geometry == Geometry::pn) return picard_normalized(prob, seed, opts);
  return prob.normalized ? picard_normalized(prob, seed, opts) : picard_fixed_m(prob, seed, opts);
}

double equation_residual(const MeanFieldProblem& prob, const RadialPotential& u) {
  require_geometry(prob, prob.geometry, "equation_residual");
  if (prob.geometry == Geometry::pn) {
    const pn::PnGeometry geom(prob.n);
    auto nu = pn::density_to_measure_pn(prob.f, &u, prob.gamma, geom);
    if (prob.gamma == 0.0) nu = nu.scaled(geom.volume() / nu.total_mass());
    return pn_residual(u, nu, prob.n);
  }
  auto mu = ball::weighted_mass(prob.f, prob.n, &u, prob.gamma, prob.normalized ? 0.0 : prob.m);
  if (prob.normalized) mu = mu.scaled(1.0 / mu.total_mass());
  return ball_residual(u, mu, prob.n);
}

double branch_function(const MeanFieldProblem& prob, double m, const RadialPotential& u) {
  return m + std::log(ball_exp_integral(prob, u));
}

BranchScan branch_scan(const MeanFieldProblem& prob, double m_lo, double m_hi, int m_steps,
                       const SolverOptions& opts, int threads) {
  require_geometry(prob, Geometry::ball, "branch_scan");
  if (m_steps < 2 || !(m_hi > m_lo)) {
    throw MamfError(MamfError::Kind::invalid_argument, "branch_scan needs m_lo < m_hi and m_steps >= 2");
  }
  struct Eval {
    BranchCell cell;
    std::optional<RadialPotential> u;
  };
  auto evaluate = [&](double m) {
    MeanFieldProblem p = prob;
    p.normalized = false;
    p.m = m;
    Eval e;
    e.cell.m = m;
    auto s = ball_fixed_m(p, std::nullopt, opts);
    e.cell.converged = s.report.converged;
    e.cell.diverged = s.report.diverged;
    e.cell.iterations = s.report.iterations;
    e.cell.sup_norm = s.report.sup_norm;
    if (s.report.converged) {
      e.cell.phi = branch_function(prob, m, s.u);
      e.u = std::move(s.u);
    } else {
      e.cell.phi = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
  };

  std::vector<Eval> evals(static_cast<std::size_t>(m_steps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < m_steps; i = next++) {
      const double m = m_lo + (m_hi - m_lo) * i / (m_steps - 1);
      evals[static_cast<std::size_t>(i)] = evaluate(m);
    }
  };
  const int workers = std::clamp(threads, 1, m_steps);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BranchScan scan;
  for (const auto& e : evals) scan.cells.push_back(e.cell);

  auto make_zero = [&](const Eval& e, double lo, double hi, bool tangential, bool refined) {
    BranchZero z;
    z.m = e.cell.m;
    z.m_lo = lo;
    z.m_hi = hi;
    z.tangential = tangential;
    z.refined = refined;
    z.phi = e.cell.phi;
    z.sup_norm = e.cell.sup_norm;
    z.small = prob.gamma * z.sup_norm < prob.n;
    z.solution = e.u;
    return z;
  };

  auto bisect = [&](Eval a, Eval b) {
    bool refined = false;
    Eval best = std::abs(a.cell.phi) < std::abs(b.cell.phi) ? a : b;
    for (int it = 0; it < 200; ++it) {
      if (std::abs(best.cell.phi) < kPhiTol) {
        refined = true;
        break;
      }
      if (std::abs(b.cell.m - a.cell.m) < 1e-15 * (1.0 + std::abs(a.cell.m))) break;
      Eval mid = evaluate(0.5 * (a.cell.m + b.cell.m));
      if (!mid.cell.converged) break;
      if (std::abs(mid.cell.phi) < std::abs(best.cell.phi)) best = mid;
      if (std::signbit(mid.cell.phi) == std::signbit(a.cell.phi)) {
        a = std::move(mid);
      } else {
        b = std::move(mid);
      }
    }
    const double lo = refined ? best.cell.m : std::min(a.cell.m, b.cell.m);
    const double hi = refined ? best.cell.m : std::max(a.cell.m, b.cell.m);
    scan.zeros.push_back(make_zero(best, lo, hi, false, refined));
  };
  // Last converged point between a converged cell and a failed one: a fold of
  // the fixed-m branch can hide a sign change of Phi.
  auto edge = [&](Eval good, double bad_m) {
    const bool sign = std::signbit(good.cell.phi);
    for (int it = 0; it < 12; ++it) {
      Eval mid = evaluate(0.5 * (good.cell.m + bad_m));
      if (mid.cell.converged) {
        good = std::move(mid);
        if (std::signbit(good.cell.phi) != sign) break;
      } else {
        bad_m = mid.cell.m;
      }
    }
    return good;
  };

  const auto& c = scan.cells;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].converged && c[i].phi == 0.0) {
      scan.zeros.push_back(make_zero(evals[i], c[i].m, c[i].m, false, true));
      continue;
    }
    if (i + 1 < c.size()) {
      const bool a_ok = c[i].converged;
      const bool b_ok = c[i + 1].converged;
      if (a_ok && b_ok && c[i + 1].phi != 0.0 && std::signbit(c[i].phi) != std::signbit(c[i + 1].phi)) {
        bisect(evals[i], evals[i + 1]);
      } else if (a_ok != b_ok) {
        const Eval& good = a_ok ? evals[i] : evals[i + 1];
        const Eval e = edge(good, a_ok ? c[i + 1].m : c[i].m);
        if (e.cell.phi != 0.0 && std::signbit(e.cell.phi) != std::signbit(good.cell.phi)) {
          bisect(good, e);
        }
      }
    }
    // Touching zero: small |Phi| at a local extremum of |Phi| with no sign change.
    if (c[i].converged && std::abs(c[i].phi) < kTangentTol && i > 0 && i + 1 < c.size() &&
        c[i - 1].converged && c[i + 1].converged &&
        std::signbit(c[i - 1].phi) == std::signbit(c[i].phi) &&
        std::signbit(c[i + 1].phi) == std::signbit(c[i].phi) &&
        std::abs(c[i].phi) <= std::abs(c[i - 1].phi) && std::abs(c[i].phi) <= std::abs(c[i + 1].phi)) {
      scan.zeros.push_back(make_zero(evals[i], c[i - 1].m, c[i + 1].m, true, false));
    }
  }
  return scan;
}

UniquenessResult uniqueness_probe(const MeanFieldProblem& prob, const std::vector<RadialPotential>& seeds,
                                  const SolverOptions& opts, double coincide_tol) {
  if (seeds.size() < 2) {
    throw MamfError(MamfError::Kind::invalid_argument, "uniqueness_probe needs at least two seeds");
  }
  UniquenessResult res;
  bool diverged = false;
  for (const auto& seed : seeds) {
    Solution s = (prob.geometry == Geometry::pn || prob.gamma >= 0.0 || prob.normalized)
                     ? solve(prob, seed, opts)
                     : picard_exp(prob, opts, seed);
    diverged = diverged || !s.report.converged;
    res.solutions.push_back(std::move(s));
  }
  if (diverged) {
    res.verdict = Verdict::some_diverged;
    return res;
  }
  const std::size_t k = seeds.size();
  res.distances.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = sup_distance(res.solutions[i].u, res.solutions[j].u);
      res.distances[i * k + j] = d;
      res.distances[j * k + i] = d;
      res.max_distance = std::max(res.max_distance, d);
    }
  }
  res.verdict = res.max_distance <= coincide_tol ? Verdict::all_coincide : Verdict::distinct;
  return res;
}

}  // namespace mamf::meanfield
