#include "mamf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "mamf/fs_profile.hpp"
#include "mamf/ma_ball.hpp"
#include "mamf/ma_pn.hpp"

namespace mamf::exper {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Uniform in [0, 1) from the top 53 bits, identical on every platform.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

RadialPotential solve_one(const RadialDensity& f, StabilityMode mode, int n,
                          const meanfield::SolverOptions& opts) {
  const bool ball = f.grid()->kind() == GridKind::ball;
  if (mode == StabilityMode::dirichlet_normalized) {
    if (ball) return ball::solve_dirichlet(cumulative_mass(f, n), n, ball::OriginAtom::reject);
    const pn::PnGeometry geom(n);
    auto nu = pn::density_to_measure_pn(f, nullptr, 0.0, geom);
    if (!(nu.total_mass() > 0.0)) {
      throw MamfError(MamfError::Kind::invalid_argument, "density has zero mass");
    }
    return pn::solve_pn(nu.scaled(geom.volume() / nu.total_mass()), geom);
  }
  meanfield::MeanFieldProblem prob{ball ? Geometry::ball : Geometry::pn, n, f, -1.0, false, 0.0};
  auto s = meanfield::picard_exp(prob, opts);
  if (!s.report.converged) {
    throw MamfError(MamfError::Kind::divergent,
                    "e^u equation did not converge: " +
                        (s.report.cause.empty() ? std::string("iteration limit") : s.report.cause));
  }
  return std::move(s.u);
}

}  // namespace

const char* to_string(StabilityMode m) {
  return m == StabilityMode::exp_sign ? "exp-sign" : "dirichlet-normalized";
}

StabilityMode stability_mode_from_string(const std::string& s) {
  if (s == "exp-sign") return StabilityMode::exp_sign;
  if (s == "dirichlet-normalized") return StabilityMode::dirichlet_normalized;
  throw MamfError(MamfError::Kind::invalid_argument, "unknown stability mode '" + s + "'");
}

StabilityReport stability_ratio(const RadialDensity& f, const RadialDensity& g, StabilityMode mode,
                                int n, const meanfield::SolverOptions& opts) {
  require_same_grid(f.grid(), g.grid(), "stability_ratio");
  StabilityReport rep;
  if (std::equal(f.values().begin(), f.values().end(), g.values().begin())) {
    rep.exact_zero = true;
    rep.ratio = kNaN;
    return rep;
  }
  const auto u = solve_one(f, mode, n, opts);
  const auto v = solve_one(g, mode, n, opts);
  rep.distance = sup_distance(u, v);
  std::vector<double> d(f.values().size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = std::abs(std::pow(f.value(i), 1.0 / n) - std::pow(g.value(i), 1.0 / n));
  }
  const RadialDensity diff(f.grid(), std::move(d), f.p(), std::min(f.origin_power(), g.origin_power()));
  rep.norm = lp_norm(diff, n * f.p(), n);
  rep.ratio = rep.norm > 0.0 ? rep.distance / rep.norm : kNaN;
  return rep;
}

std::vector<double> perturbation_bump(const GridPtr& grid, std::uint64_t seed) {
  const bool ball = grid->kind() == GridKind::ball;
  double center = ball ? -1.0 : 0.5;
  double width = ball ? 0.5 : 1.0;
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    center += unit_draw(rng) - 0.5;
    width *= 0.75 + 0.5 * unit_draw(rng);
  }
  std::vector<double> eta(grid->size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double z = (grid->node(i) - center) / width;
    eta[i] = std::exp(-0.5 * z * z);
  }
  return eta;
}

FamilyReport perturbation_family(const RadialDensity& f, StabilityMode mode, int n,
                                 const std::vector<double>& epsilons, std::uint64_t seed,
                                 const meanfield::SolverOptions& opts) {
  const auto eta = perturbation_bump(f.grid(), seed);
  FamilyReport out;
  for (double eps : epsilons) {
    if (!(std::abs(eps) <= 1.0)) {
      throw MamfError(MamfError::Kind::invalid_argument, "perturbation size must be in [-1, 1]");
    }
    std::vector<double> gv(eta.size());
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = f.value(i) * (1.0 + eps * eta[i]);
    out.rows.push_back({eps, stability_ratio(f, f.with_values(std::move(gv)), mode, n, opts)});
  }
  for (std::size_t k = 0; k + 1 < out.rows.size(); ++k) {
    const double a = out.rows[k].report.ratio;
    const double b = out.rows[k + 1].report.ratio;
    const double v = std::max(a, b) / std::min(a, b);
    out.max_variation = std::isnan(v) ? v : std::max(out.max_variation, v);
  }
  return out;
}

FsDemo fs_nonuniqueness_demo(int n, const std::vector<double>& epsilons, const GridPtr& grid,
                             const meanfield::SolverOptions& opts) {
  if (grid->kind() != GridKind::pn) {
    throw MamfError(MamfError::Kind::invalid_argument, "fs_nonuniqueness_demo needs a pn grid");
  }
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) {
      throw MamfError(MamfError::Kind::invalid_argument, "epsilons must be positive");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (epsilons[i] == epsilons[j]) {
        throw MamfError(MamfError::Kind::invalid_argument, "epsilons must be pairwise distinct");
      }
    }
  }
  const pn::PnGeometry geom(n);
  const double gamma = n + 1.0;
  const RadialDensity one(grid, std::vector<double>(grid->size(), 1.0), 2.0);
  const meanfield::MeanFieldProblem prob{Geometry::pn, n, one, gamma, true, 0.0};
  meanfield::SolverOptions single = opts;
  single.max_iter = 1;

  FsDemo demo;
  demo.n = n;
  std::vector<RadialPotential> normalized;
  for (double eps : epsilons) {
    auto member = pn::fs_family(eps, grid, geom);
    FsRow row;
    row.epsilon = eps;
    row.C = member.C;
    row.residual = pn::cumulative_residual(member.potential, one, gamma, member.C, geom);
    auto solution = member.potential.shifted(-std::log(member.C) / gamma);
    row.equation_residual = meanfield::equation_residual(prob, solution);
    auto step = meanfield::picard_normalized(prob, solution, single);
    row.picard_step = step.report.step_trace.empty() ? kNaN : step.report.step_trace.front();
    auto top = member.potential.shifted(-member.potential.sup());
    row.sup_norm = top.sup_norm();
    row.certificate = cert::smallness_certificate(top, gamma, n);
    demo.rows.push_back(row);
    normalized.push_back(std::move(top));
    demo.solutions.push_back(std::move(solution));
  }
  const std::size_t k = normalized.size();
  demo.distances.assign(k * k, 0.0);
  demo.min_distance = k > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = sup_distance(normalized[i], normalized[j]);
      demo.distances[i * k + j] = demo.distances[j * k + i] = d;
      demo.min_distance = std::min(demo.min_distance, d);
    }
  }
  return demo;
}

SweepResult gamma_sweep(const RadialDensity& f, int n, const std::vector<double>& gammas,
                        const SweepOptions& sweep, const meanfield::SolverOptions& opts) {
  if (gammas.empty()) throw MamfError(MamfError::Kind::invalid_argument, "empty gamma grid");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0) || (i > 0 && !(gammas[i] > gammas[i - 1]))) {
      throw MamfError(MamfError::Kind::invalid_argument, "gamma grid must be positive and increasing");
    }
  }
  SweepResult out;
  out.critical_gamma = kNaN;
  out.gamma0_empirical = cert::empirical_gamma0(f, n);
  if (sweep.certified) out.gamma0_certified = cert::gamma0(*sweep.certified);
  for (double gamma : gammas) {
    meanfield::MeanFieldProblem prob{Geometry::ball, n, f, gamma, false, 0.0};
    SweepRow row;
    row.gamma = gamma;
    row.converged = meanfield::picard_fixed_m(prob, std::nullopt, opts).report.converged;
    if (row.converged) out.critical_gamma = gamma;
    auto scan = meanfield::branch_scan(prob, sweep.m_lo, sweep.m_hi, sweep.m_steps, opts, sweep.threads);
    row.m_zero_count = static_cast<int>(scan.zeros.size());
    row.sup_norm = kNaN;
    for (const auto& z : scan.zeros) row.zeros.push_back(z.refined ? z.m : 0.5 * (z.m_lo + z.m_hi));
    if (!scan.zeros.empty()) {
      row.sup_norm = scan.zeros.front().sup_norm;
      row.certificate = scan.zeros.front().small;
      row.solution = scan.zeros.front().solution;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_solution_csv(std::ostream& os, const RadialPotential& u, Geometry geometry, int n) {
  const auto& grid = *u.grid();
  os << "t,r,chi,u,slope,cumulative_mass\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.node(i);
    double chi = u.value(i);
    double slope = u.slope(i);
    if (geometry == Geometry::pn) {
      chi += fs::h(t);
      slope += fs::dh(t);
    }
    const double mass = std::pow(std::max(slope, 0.0), n);
    os << format_double(t) << ',' << format_double(std::exp(t)) << ',' << format_double(chi) << ','
       << format_double(u.value(i)) << ',' << format_double(slope) << ',' << format_double(mass) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "gamma,m_zero_count,converged,sup_norm,certificate,Phi_zeros\n";
  for (const auto& r : sweep.rows) {
    os << format_double(r.gamma) << ',' << r.m_zero_count << ',' << (r.converged ? "true" : "false")
       << ',' << format_double(r.sup_norm) << ',' << (r.certificate ? "true" : "false") << ',';
    for (std::size_t k = 0; k < r.zeros.size(); ++k) {
      if (k) os << ';';
      os << format_double(r.zeros[k]);
    }
    os << '\n';
  }
}

void write_family_csv(std::ostream& os, const FamilyReport& family) {
  os << "epsilon,distance,norm,ratio\n";
  for (const auto& r : family.rows) {
    os << format_double(r.epsilon) << ',' << format_double(r.report.distance) << ','
       << format_double(r.report.norm) << ',' << format_double(r.report.ratio) << '\n';
  }
}

void write_fs_csv(std::ostream& os, const FsDemo& demo) {
  os << "n,epsilon,C,residual,equation_residual,picard_step,sup_norm,certificate\n";
  for (const auto& r : demo.rows) {
    os << demo.n << ',' << format_double(r.epsilon) << ',' << format_double(r.C) << ','
       << format_double(r.residual) << ',' << format_double(r.equation_residual) << ','
       << format_double(r.picard_step) << ',' << format_double(r.sup_norm) << ','
       << (r.certificate ? "true" : "false") << '\n';
  }
}

}  // namespace mamf::exper
