#include "mamf/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mamf/ma_ball.hpp"
#include "mamf/ma_pn.hpp"

namespace mamf::cert {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw MamfError(MamfError::Kind::invalid_argument, std::string(what) + " must be positive");
  }
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::certified ? "certified" : "empirical"; }

Tagged gamma0(const CertificateInputs& in) {
  require_positive(in.beta, "beta");
  if (!(in.A >= 1.0)) throw MamfError(MamfError::Kind::invalid_argument, "A must be >= 1");
  if (in.n < 1) throw MamfError(MamfError::Kind::invalid_argument, "dimension must be >= 1");
  Tagged t;
  t.value = 0.5 * in.beta * std::pow(in.A, -1.0 / in.n);
  t.heuristic = in.mode == Mode::empirical;
  std::ostringstream os;
  os << "beta=" << in.beta << " A=" << in.A << " (" << to_string(in.mode) << ")";
  t.provenance = os.str();
  return t;
}

double linfty_bound_local(double A, double gamma, int n) {
  if (!(A >= 1.0)) throw MamfError(MamfError::Kind::invalid_argument, "A must be >= 1");
  require_positive(gamma, "gamma");
  return n * std::pow(A, 1.0 / n) / gamma;
}

double linfty_bound_global(double A, double gamma, int n) {
  if (!(A > 0.0)) throw MamfError(MamfError::Kind::invalid_argument, "A must be positive");
  require_positive(gamma, "gamma");
  if (gamma > n) {
    throw MamfError(MamfError::Kind::invalid_argument, "the global bound needs gamma <= n");
  }
  return 1.0 + (n * std::log(static_cast<double>(n)) + std::log(A) - n * std::log(gamma)) / gamma;
}

double linfty_bound_global_fs(double A, double gamma, int n) {
  return 2.0 * linfty_bound_global(A, gamma, n);
}

std::vector<double> cumulative_exp_integral(const RadialPotential& u, double gamma,
                                            const RadialMeasure& mu) {
  require_same_grid(u.grid(), mu.grid(), "cumulative_exp_integral");
  const auto& grid = *u.grid();
  const std::size_t size = grid.size();
  if (gamma == 0.0) return {mu.cumulative().begin(), mu.cumulative().end()};
  std::vector<double> w(size), g(size);
  for (std::size_t i = 0; i < size; ++i) {
    w[i] = std::exp(-gamma * u.value(i));
    g[i] = gamma * mu.at(i) * w[i] * u.slope(i);
  }
  auto acc = cumulative_integral(grid, g);
  const double tail = lower_tail_exp_mass(u, gamma, mu.at(0), mu.lower_exponent());
  std::vector<double> out(size);
  for (std::size_t i = 0; i < size; ++i) {
    out[i] = tail + w[i] * mu.at(i) - w[0] * mu.at(0) + acc[i];
    if (!std::isfinite(out[i])) {
      throw MamfError(MamfError::Kind::divergent, "exponential integral is not finite");
    }
  }
  return out;
}

double exp_integral(const RadialPotential& u, double gamma, const RadialMeasure& mu) {
  if (gamma == 0.0) return mu.total_mass();
  const auto cum = cumulative_exp_integral(u, gamma, mu);
  if (mu.grid()->kind() == GridKind::ball) return cum.back();
  const double deficit = std::max(mu.total_mass() - mu.at(mu.grid()->size() - 1), 0.0);
  return cum.back() + upper_tail_exp_mass(u, gamma, deficit, mu.upper_exponent());
}

double exp_integral(const RadialPotential& u, double gamma, const RadialDensity& f, int n) {
  if (f.grid()->kind() == GridKind::ball) {
    return ball::weighted_mass(f, n, &u, gamma, 0.0).total_mass();
  }
  return pn::density_to_measure_pn(f, &u, gamma, pn::PnGeometry(n)).total_mass();
}

std::vector<RadialPotential> default_battery(const GridPtr& grid) {
  std::vector<RadialPotential> b;
  b.push_back(RadialPotential::zero(grid));
  b.push_back(ball::log_potential(grid));
  for (double c : {0.5, 1.0, 2.0, 4.0}) b.push_back(ball::truncated_log_potential(grid, c));
  b.push_back(ball::quadratic_potential(grid));
  return b;
}

EmpiricalA empirical_A(const RadialDensity& f, double gamma, int n,
                       const std::vector<RadialPotential>& battery) {
  if (f.grid()->kind() != GridKind::ball) {
    throw MamfError(MamfError::Kind::invalid_argument, "empirical_A is a ball computation");
  }
  if (battery.empty()) throw MamfError(MamfError::Kind::invalid_argument, "empty battery");
  EmpiricalA out;
  out.value = -1.0;
  for (std::size_t k = 0; k < battery.size(); ++k) {
    const auto& u = battery[k];
    const double mass = std::pow(std::max(u.slopes().back(), 0.0), n);
    if (mass > 1.0 + 1e-12) {
      std::ostringstream os;
      os << "battery candidate " << k << " has Monge-Ampere mass " << mass << " > 1";
      throw MamfError(MamfError::Kind::invalid_argument, os.str());
    }
    double v;
    try {
      v = exp_integral(u, gamma, f, n);
    } catch (const MamfError& e) {
      if (e.kind() != MamfError::Kind::divergent) throw;
      v = std::numeric_limits<double>::infinity();
    }
    if (v > out.value) {
      out.value = v;
      out.argmax = k;
    }
  }
  return out;
}

Tagged empirical_gamma0(const RadialDensity& f, int n) {
  const double q = f.p() / (f.p() - 1.0);
  CertificateInputs in;
  in.beta = n / q;
  in.A = std::max(1.0, empirical_A(f, in.beta, n, default_battery(f.grid())).value);
  in.n = n;
  in.p = f.p();
  in.mode = Mode::empirical;
  auto t = gamma0(in);
  t.provenance = "battery estimate, " + t.provenance;
  return t;
}

bool smallness_certificate(const RadialPotential& u, double gamma, int n) {
  return gamma * u.sup_norm() < n;
}

double certified_A_disc(double K, double gamma) {
  require_positive(K, "K");
  if (!(gamma >= 0.0) || !(gamma < 2.0)) {
    throw MamfError(MamfError::Kind::invalid_argument, "certified disc bound needs 0 <= gamma < 2");
  }
  return std::max(1.0, std::pow(2.0, gamma) * 2.0 * K / (2.0 - gamma));
}

double certified_A_p1(double K, double gamma) {
  require_positive(K, "K");
  if (!(gamma >= 0.0) || !(gamma < 1.0)) {
    throw MamfError(MamfError::Kind::invalid_argument, "certified P^1 bound needs 0 <= gamma < 1");
  }
  return K / (1.0 - gamma);
}

}  // namespace mamf::cert
