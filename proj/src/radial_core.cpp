#include "mamf/radial_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mamf/fs_profile.hpp"

namespace mamf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(MamfError::Kind kind, const std::string& msg) {
  throw MamfError(kind, msg);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

// int_0^1 e^{-gamma v(y)} dy for a tail v(y) = limit + (edge - limit) y^c,
// c = rate / k, or, when rate == 0, v(y) = edge + log_coeff * log(y) / k.
double exp_tail_average(double limit, double edge, double rate,
                        double log_coeff, double gamma, double k) {
  if (gamma == 0.0) return 1.0;
  if (rate == 0.0) {
    const double a = -gamma * log_coeff / k;
    if (a <= -1.0) {
      std::ostringstream os;
      os << "exponential integral diverges in the tail (rate " << a << ")";
      fail(MamfError::Kind::divergent, os.str());
    }
    return std::exp(-gamma * edge) / (1.0 + a);
  }
  const double c = rate / k;
  const double span = edge - limit;
  using boost::math::quadrature::gauss_kronrod;
  double value = 0.0;
  if (c <= 1.0) {
    // y = w^{1/c}: the Jacobian w^{1/c - 1} / c is smooth for c <= 1.
    const double inv = 1.0 / c;
    auto f = [&](double w) {
      return std::exp(-gamma * (limit + span * w)) * inv * std::pow(w, inv - 1.0);
    };
    value = gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 8, 1e-13);
  } else {
    auto f = [&](double y) {
      return std::exp(-gamma * (limit + span * std::pow(y, c)));
    };
    value = gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 8, 1e-13);
  }
  return value;
}

}  // namespace

const char* to_string(GridKind kind) {
  return kind == GridKind::ball ? "ball" : "pn";
}

bool RadialGrid::same_as(const RadialGrid& other) const noexcept {
  return kind_ == other.kind_ && nodes_ == other.nodes_ &&
         tail_exponent_ == other.tail_exponent_;
}

GridPtr make_grid(GridKind kind, int n_nodes, double t_min, double t_max,
                  int dim) {
  if (n_nodes < 3) {
    fail(MamfError::Kind::invalid_argument, "grid needs at least 3 nodes");
  }
  if (!(t_min < t_max) || !std::isfinite(t_min) || !std::isfinite(t_max)) {
    fail(MamfError::Kind::invalid_argument, "grid bounds must satisfy t_min < t_max");
  }
  if (dim < 1) fail(MamfError::Kind::invalid_argument, "dimension must be >= 1");
  if (kind == GridKind::ball && t_max != 0.0) {
    fail(MamfError::Kind::invalid_argument, "ball grids must end at t = 0");
  }
  if (kind == GridKind::pn) {
    if (!(t_min < 0.0 && 0.0 < t_max)) {
      fail(MamfError::Kind::invalid_argument, "pn grids must straddle 0");
    }
    if (std::abs(t_min + t_max) > 1e-12 * (t_max - t_min)) {
      fail(MamfError::Kind::invalid_argument, "pn grids must be symmetric about 0");
    }
    t_min = -t_max;
  }

  auto grid = std::shared_ptr<RadialGrid>(new RadialGrid());
  grid->kind_ = kind;
  grid->tail_exponent_ = 2.0 * dim;
  const auto intervals = static_cast<std::size_t>(n_nodes - 1);
  const double width = t_max - t_min;
  grid->spacing_ = width / static_cast<double>(intervals);
  grid->nodes_.resize(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    // (a (N - i) + b i) / N keeps symmetric grids exactly symmetric.
    grid->nodes_[i] = (t_min * static_cast<double>(intervals - i) +
                       t_max * static_cast<double>(i)) /
                      static_cast<double>(intervals);
  }
  grid->nodes_.front() = t_min;
  grid->nodes_.back() = t_max;

  const double h = grid->spacing_;
  auto& w = grid->weights_;
  w.assign(intervals + 1, 0.0);
  std::size_t simpson_end = intervals;
  if (intervals % 2 == 1) {
    simpson_end = intervals - 3;
    for (std::size_t k = 0; k < 4; ++k) {
      w[simpson_end + k] += 3.0 * h / 8.0 * (k == 0 || k == 3 ? 1.0 : 3.0);
    }
  }
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return grid;
}

double integrate(const RadialGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) {
    fail(MamfError::Kind::grid_mismatch, "integrand size does not match grid");
  }
  const auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += w[i] * values[i];
  return sum;
}

std::vector<double> cumulative_integral(const RadialGrid& grid,
                                        std::span<const double> f,
                                        bool monotone) {
  if (f.size() != grid.size()) {
    fail(MamfError::Kind::grid_mismatch, "integrand size does not match grid");
  }
  const double h = grid.spacing();
  const std::size_t n = f.size();
  std::vector<double> simpson(n, 0.0);  // valid at even indices
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    if (j % 2 == 0) {
      simpson[j] = simpson[j - 2] + h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
      out[j] = simpson[j];
    } else if (j == 1) {
      if (n < 4) {
        out[j] = 0.5 * h * (f[0] + f[1]);
        continue;
      }
      // Cubic through the first four nodes; one negative weight, so for
      // monotone mode the panel is kept between its lower and upper sums.
      out[j] = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
      if (monotone) {
        out[j] = std::clamp(out[j], h * std::min(f[0], f[1]), h * std::max(f[0], f[1]));
      }
    } else {
      out[j] = simpson[j - 3] +
               3.0 * h / 8.0 * (f[j - 3] + 3.0 * f[j - 2] + 3.0 * f[j - 1] + f[j]);
    }
  }
  if (monotone) {
    for (std::size_t j = 1; j < n; ++j) out[j] = std::max(out[j], out[j - 1]);
  }
  return out;
}

std::vector<double> reverse_cumulative_integral(const RadialGrid& grid,
                                                std::span<const double> f,
                                                bool monotone) {
  std::vector<double> reversed(f.rbegin(), f.rend());
  auto acc = cumulative_integral(grid, reversed, monotone);
  std::reverse(acc.begin(), acc.end());
  return acc;
}

std::vector<double> differentiate(const RadialGrid& grid,
                                  std::span<const double> f) {
  const std::size_t n = f.size();
  if (n != grid.size()) {
    fail(MamfError::Kind::grid_mismatch, "sample size does not match grid");
  }
  const double h = grid.spacing();
  std::vector<double> d(n);
  if (n < 5) {
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
  }
  const double s = 12.0 * h;
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / s;
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / s;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / s;
  }
  const std::size_t m = n - 1;
  d[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] +
          3.0 * f[m - 4]) / s;
  d[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] -
              f[m - 4]) / s;
  return d;
}

// ---------------------------------------------------------------------------

RadialDensity::RadialDensity(GridPtr grid, std::vector<double> values, double p,
                             double origin_power)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      p_(p),
      origin_power_(origin_power) {
  if (!grid_) fail(MamfError::Kind::invalid_argument, "density without grid");
  if (values_.size() != grid_->size()) {
    fail(MamfError::Kind::grid_mismatch, "density size does not match grid");
  }
  if (!(p_ > 1.0)) fail(MamfError::Kind::invalid_argument, "density exponent p must exceed 1");
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(MamfError::Kind::invalid_argument, "density values must be finite and nonnegative");
    }
  }
  if (!std::isfinite(origin_power_)) {
    fail(MamfError::Kind::invalid_argument, "origin power must be finite");
  }
}

RadialDensity RadialDensity::scaled(double factor) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= factor;
  return RadialDensity(grid_, std::move(v), p_, origin_power_);
}

RadialDensity RadialDensity::with_values(std::vector<double> values) const {
  return RadialDensity(grid_, std::move(values), p_, origin_power_);
}

RadialMeasure::RadialMeasure(GridPtr grid, std::vector<double> cumulative,
                             double total_mass, double lower_exponent,
                             double upper_exponent)
    : grid_(std::move(grid)),
      cumulative_(std::move(cumulative)),
      total_mass_(total_mass),
      lower_exponent_(lower_exponent),
      upper_exponent_(upper_exponent) {
  if (!grid_) fail(MamfError::Kind::invalid_argument, "measure without grid");
  if (cumulative_.size() != grid_->size()) {
    fail(MamfError::Kind::grid_mismatch, "measure size does not match grid");
  }
  if (!all_finite(cumulative_) || !std::isfinite(total_mass_)) {
    fail(MamfError::Kind::divergent, "cumulative mass is not finite");
  }
  if (!(lower_exponent_ >= 0.0) || !(upper_exponent_ >= 0.0)) {
    fail(MamfError::Kind::invalid_argument, "tail exponents must be nonnegative");
  }
  const double scale = std::max(1.0, total_mass_);
  const double slack = 1e-12 * scale;
  if (cumulative_.front() < -slack) {
    fail(MamfError::Kind::invalid_argument, "cumulative mass must be nonnegative");
  }
  for (std::size_t i = 1; i < cumulative_.size(); ++i) {
    if (cumulative_[i] < cumulative_[i - 1] - slack) {
      fail(MamfError::Kind::invalid_argument, "cumulative mass must be nondecreasing");
    }
  }
  if (cumulative_.back() > total_mass_ + 1e-10 * scale) {
    fail(MamfError::Kind::invalid_argument, "cumulative mass exceeds total mass");
  }
}

double RadialMeasure::origin_atom() const noexcept {
  return lower_exponent_ == 0.0 ? cumulative_.front() : 0.0;
}

RadialMeasure RadialMeasure::scaled(double factor) const {
  std::vector<double> c(cumulative_);
  for (double& x : c) x *= factor;
  return RadialMeasure(grid_, std::move(c), total_mass_ * factor,
                       lower_exponent_, upper_exponent_);
}

// ---------------------------------------------------------------------------

RadialPotential::RadialPotential(GridPtr grid, std::vector<double> values,
                                 std::vector<double> slopes,
                                 PotentialTails tails)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      slopes_(std::move(slopes)),
      tails_(tails) {
  if (!grid_) fail(MamfError::Kind::invalid_argument, "potential without grid");
  if (values_.size() != grid_->size() || slopes_.size() != grid_->size()) {
    fail(MamfError::Kind::grid_mismatch, "potential size does not match grid");
  }
  if (!all_finite(values_) || !all_finite(slopes_)) {
    fail(MamfError::Kind::divergent, "potential is not finite on the grid");
  }
  if (!(tails_.lower_rate >= 0.0) || !(tails_.upper_rate >= 0.0)) {
    fail(MamfError::Kind::invalid_argument, "tail rates must be nonnegative");
  }
  if (grid_->kind() == GridKind::ball) tails_.upper_limit = values_.back();
}

RadialPotential RadialPotential::from_values(GridPtr grid,
                                             std::vector<double> values,
                                             double lower_rate,
                                             double upper_rate) {
  if (!grid) fail(MamfError::Kind::invalid_argument, "potential without grid");
  auto slopes = differentiate(*grid, values);
  PotentialTails tails;
  tails.lower_rate = lower_rate;
  tails.upper_rate = upper_rate;
  if (lower_rate > 0.0) {
    tails.lower_limit = values.front() - slopes.front() / lower_rate;
  } else {
    tails.lower_limit = slopes.front() > 0.0   ? -kInf
                        : slopes.front() < 0.0 ? kInf
                                               : values.front();
  }
  if (upper_rate > 0.0) {
    tails.upper_limit = values.back() + slopes.back() / upper_rate;
  } else {
    tails.upper_limit = slopes.back() > 0.0   ? kInf
                        : slopes.back() < 0.0 ? -kInf
                                              : values.back();
  }
  return RadialPotential(std::move(grid), std::move(values), std::move(slopes),
                         tails);
}

RadialPotential RadialPotential::zero(GridPtr grid) {
  const std::size_t n = grid->size();
  return RadialPotential(std::move(grid), std::vector<double>(n, 0.0),
                         std::vector<double>(n, 0.0), PotentialTails{});
}

double RadialPotential::evaluate(double t) const {
  const auto& g = *grid_;
  const std::size_t n = g.size();
  if (t < g.front()) {
    const double dt = t - g.front();
    if (tails_.lower_rate == 0.0) return values_.front() + slopes_.front() * dt;
    return tails_.lower_limit +
           (values_.front() - tails_.lower_limit) * std::exp(tails_.lower_rate * dt);
  }
  if (t > g.back()) {
    const double dt = t - g.back();
    if (g.kind() == GridKind::ball) return values_.back();
    if (tails_.upper_rate == 0.0) return values_.back() + slopes_.back() * dt;
    return tails_.upper_limit +
           (values_.back() - tails_.upper_limit) * std::exp(-tails_.upper_rate * dt);
  }
  const double h = g.spacing();
  auto i = static_cast<std::size_t>((t - g.front()) / h);
  if (i >= n - 1) i = n - 2;
  const double s = (t - g.node(i)) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * values_[i] + h10 * h * slopes_[i] + h01 * values_[i + 1] +
         h11 * h * slopes_[i + 1];
}

bool RadialPotential::bounded() const noexcept {
  return std::isfinite(tails_.lower_limit) &&
         (grid_->kind() == GridKind::ball || std::isfinite(tails_.upper_limit));
}

double RadialPotential::inf() const noexcept {
  double m = *std::min_element(values_.begin(), values_.end());
  m = std::min(m, tails_.lower_limit);
  if (grid_->kind() == GridKind::pn) m = std::min(m, tails_.upper_limit);
  return m;
}

double RadialPotential::sup() const noexcept {
  double m = *std::max_element(values_.begin(), values_.end());
  m = std::max(m, tails_.lower_limit);
  if (grid_->kind() == GridKind::pn) m = std::max(m, tails_.upper_limit);
  return m;
}

double RadialPotential::sup_norm() const noexcept {
  return std::max(std::abs(inf()), std::abs(sup()));
}

RadialPotential RadialPotential::shifted(double c) const {
  std::vector<double> v(values_);
  for (double& x : v) x += c;
  PotentialTails t = tails_;
  t.lower_limit += c;
  t.upper_limit += c;
  return RadialPotential(grid_, std::move(v), slopes_, t);
}

RadialPotential RadialPotential::scaled(double lambda) const {
  std::vector<double> v(values_);
  std::vector<double> s(slopes_);
  for (double& x : v) x *= lambda;
  for (double& x : s) x *= lambda;
  PotentialTails t = tails_;
  if (lambda == 0.0) {
    t.lower_limit = 0.0;
    t.upper_limit = 0.0;
  } else {
    t.lower_limit *= lambda;
    t.upper_limit *= lambda;
  }
  return RadialPotential(grid_, std::move(v), std::move(s), t);
}

namespace {

double combined_rate(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return std::min(a, b);
}

RadialPotential combine(const RadialPotential& u, const RadialPotential& v,
                        double a, double b) {
  require_same_grid(u.grid(), v.grid(), "potential combination");
  const std::size_t n = u.values().size();
  std::vector<double> val(n), sl(n);
  for (std::size_t i = 0; i < n; ++i) {
    val[i] = a * u.value(i) + b * v.value(i);
    sl[i] = a * u.slope(i) + b * v.slope(i);
  }
  auto lin = [](double x, double y, double ca, double cb) {
    if (ca == 0.0) return cb * y;
    if (cb == 0.0) return ca * x;
    return ca * x + cb * y;
  };
  PotentialTails t;
  t.lower_limit = lin(u.tails().lower_limit, v.tails().lower_limit, a, b);
  t.upper_limit = lin(u.tails().upper_limit, v.tails().upper_limit, a, b);
  t.lower_rate = combined_rate(a == 0.0 ? v.tails().lower_rate : u.tails().lower_rate,
                               b == 0.0 ? u.tails().lower_rate : v.tails().lower_rate);
  t.upper_rate = combined_rate(a == 0.0 ? v.tails().upper_rate : u.tails().upper_rate,
                               b == 0.0 ? u.tails().upper_rate : v.tails().upper_rate);
  return RadialPotential(u.grid(), std::move(val), std::move(sl), t);
}

}  // namespace

RadialPotential RadialPotential::blend(const RadialPotential& other,
                                       double theta) const {
  return combine(*this, other, 1.0 - theta, theta);
}

RadialPotential operator+(const RadialPotential& u, const RadialPotential& v) {
  return combine(u, v, 1.0, 1.0);
}

RadialPotential operator-(const RadialPotential& u, const RadialPotential& v) {
  return combine(u, v, 1.0, -1.0);
}

void require_same_grid(const GridPtr& a, const GridPtr& b, const char* where) {
  if (a == b) return;
  if (!a || !b || !a->same_as(*b)) {
    fail(MamfError::Kind::grid_mismatch, std::string(where) + ": grids differ");
  }
}

// ---------------------------------------------------------------------------

double sphere_area(int n) {
  return 2.0 * std::pow(M_PI, n) / std::tgamma(static_cast<double>(n));
}

RadialMeasure cumulative_mass(const RadialDensity& f, int n) {
  const auto& grid = *f.grid();
  if (grid.kind() != GridKind::ball) {
    fail(MamfError::Kind::invalid_argument, "cumulative_mass expects a ball grid");
  }
  if (n < 1) fail(MamfError::Kind::invalid_argument, "dimension must be >= 1");
  const double sigma = sphere_area(n);
  const double k = 2.0 * n + f.origin_power();
  if (!(k > 0.0)) {
    std::ostringstream os;
    os << "mass of f dV diverges at the origin (f ~ rho^" << f.origin_power()
       << " in dimension " << n << ")";
    fail(MamfError::Kind::divergent, os.str());
  }
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = sigma * f.value(i) * std::exp(2.0 * n * grid.node(i));
  }
  const double m0 = g.front() / k;
  auto cum = cumulative_integral(grid, g, true);
  for (double& x : cum) x += m0;
  const double total = cum.back();
  return RadialMeasure(f.grid(), std::move(cum), total, k);
}

bool is_probability_density(const RadialDensity& f, int n) {
  const double h = f.grid()->spacing();
  return std::abs(cumulative_mass(f, n).total_mass() - 1.0) < 10.0 * h * h;
}

double lp_norm(const RadialDensity& f, double q, int n) {
  if (!(q >= 1.0)) fail(MamfError::Kind::invalid_argument, "lp_norm needs q >= 1");
  const auto& grid = *f.grid();
  std::vector<double> g(grid.size());
  double tails = 0.0;
  if (grid.kind() == GridKind::ball) {
    const double sigma = sphere_area(n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = sigma * std::pow(f.value(i), q) * std::exp(2.0 * n * grid.node(i));
    }
    const double k = 2.0 * n + q * f.origin_power();
    if (g.front() > 0.0) {
      if (!(k > 0.0)) fail(MamfError::Kind::divergent, "L^q norm diverges at the origin");
      tails = g.front() / k;
    }
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = std::pow(f.value(i), q) * fs::mass_density(grid.node(i), n);
    }
    tails = std::pow(f.values().front(), q) * fs::mass(grid.front(), n) +
            std::pow(f.values().back(), q) * fs::mass_deficit(grid.back(), n);
  }
  const double integral = integrate(grid, g) + tails;
  if (!std::isfinite(integral)) fail(MamfError::Kind::divergent, "L^q norm is not finite");
  return integral <= 0.0 ? 0.0 : std::pow(integral, 1.0 / q);
}

double sup_distance(const RadialPotential& u, const RadialPotential& v) {
  require_same_grid(u.grid(), v.grid(), "sup_distance");
  double d = 0.0;
  for (std::size_t i = 0; i < u.values().size(); ++i) {
    d = std::max(d, std::abs(u.value(i) - v.value(i)));
  }
  auto limit_gap = [](double a, double b) {
    if (std::isinf(a) && std::isinf(b) && (a > 0) == (b > 0)) return 0.0;
    return std::abs(a - b);
  };
  d = std::max(d, limit_gap(u.tails().lower_limit, v.tails().lower_limit));
  if (u.grid()->kind() == GridKind::pn) {
    d = std::max(d, limit_gap(u.tails().upper_limit, v.tails().upper_limit));
  }
  return d;
}

double lower_tail_exp_mass(const RadialPotential& u, double gamma, double m0,
                           double k) {
  if (m0 == 0.0) return 0.0;
  if (gamma == 0.0) return m0;
  const auto& t = u.tails();
  if (k == 0.0) {
    // Atom at the origin, where the potential takes its lower limit.
    if (std::isinf(t.lower_limit)) {
      if ((t.lower_limit < 0.0) == (gamma > 0.0)) {
        fail(MamfError::Kind::divergent, "potential is infinite on an atom");
      }
      return 0.0;
    }
    return m0 * std::exp(-gamma * t.lower_limit);
  }
  return m0 * exp_tail_average(t.lower_limit, u.values().front(), t.lower_rate,
                               u.slopes().front(), gamma, k);
}

double upper_tail_exp_mass(const RadialPotential& u, double gamma, double d0,
                           double k) {
  if (d0 == 0.0) return 0.0;
  if (gamma == 0.0) return d0;
  const auto& t = u.tails();
  if (k == 0.0) {
    if (std::isinf(t.upper_limit)) {
      fail(MamfError::Kind::divergent, "potential is infinite on an atom");
    }
    return d0 * std::exp(-gamma * t.upper_limit);
  }
  return d0 * exp_tail_average(t.upper_limit, u.values().back(), t.upper_rate,
                               -u.slopes().back(), gamma, k);
}

}  // namespace mamf
