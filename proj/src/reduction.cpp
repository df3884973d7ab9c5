#include "nullctl/reduction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nullctl/errors.hpp"
#include "nullctl/quadrature.hpp"
#include "nullctl/tridiagonal.hpp"

namespace nullctl {

std::vector<double> fitted_grid(std::size_t n, std::span<const double> breakpoints) {
  if (n < 2) throw PreconditionError("fitted grid needs at least two cells");
  const double h = 1.0 / static_cast<double>(n);
  std::vector<double> interior;
  for (double b : breakpoints)
    if (b > 0.0 && b < 1.0) interior.push_back(b);
  std::sort(interior.begin(), interior.end());
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());

  std::vector<double> nodes{0.0};
  for (std::size_t i = 1; i < n; ++i) {
    const double x = static_cast<double>(i) * h;
    auto it = std::lower_bound(interior.begin(), interior.end(), x);
    bool near = false;
    if (it != interior.end() && *it - x < 0.5 * h) near = true;
    if (it != interior.begin() && x - *(it - 1) < 0.5 * h) near = true;
    if (!near) nodes.push_back(x);
  }
  nodes.insert(nodes.end(), interior.begin(), interior.end());
  nodes.push_back(1.0);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

Tabulated compute_B(const PiecewiseProfile& a, const PiecewiseProfile& b) {
  auto cuts = merge_breakpoints({a.breakpoints(), b.breakpoints()});
  std::vector<double> values(cuts.size(), 0.0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    values[i + 1] = values[i] + b(mid) / a(mid) * (cuts[i + 1] - cuts[i]);
  }
  return {std::move(cuts), std::move(values)};
}

namespace {

// Mean of e^B over a cell where B is linear from bl to br.
double mean_exp(double bl, double br) {
  const double d = br - bl;
  if (std::abs(d) < 1e-12) return std::exp(0.5 * (bl + br));
  return std::exp(bl) * std::expm1(d) / d;
}

}  // namespace

Tabulated solve_w_on(const PiecewiseProfile& a, const PiecewiseProfile& b, const PiecewiseProfile& c,
                     std::span<const double> grid) {
  for (std::size_t i = 0; i < c.cells(); ++i)
    if (c.values()[i] > 0.0) {
      std::ostringstream msg;
      msg << "solve_w requires c <= 0 but c = " << c.values()[i] << " on cell " << i
          << "; shift c by -gamma*rho (gamma = 2K when sufficient) and track the state factor e^{gamma t}";
      throw PreconditionError(msg.str());
    }
  const std::size_t nodes = grid.size();
  if (nodes < 3) throw PreconditionError("solve_w needs at least two cells");
  const auto Btab = compute_B(a, b);
  std::vector<double> Bn(nodes);
  for (std::size_t i = 0; i < nodes; ++i) Bn[i] = Btab(grid[i]);

  // Unknown v = w - 1 on interior nodes: (p v', phi') + (q v, phi) = -(q, phi),
  // p = a e^B, q = -c e^B >= 0.
  const std::size_t m = nodes - 2;
  Tridiagonal<double> A(m);
  std::vector<double> rhs(m, 0.0);
  const auto& rule = GaussRule<3>::get();
  for (std::size_t cell = 0; cell + 1 < nodes; ++cell) {
    const double xl = grid[cell];
    const double xr = grid[cell + 1];
    const double len = xr - xl;
    const double mid = 0.5 * (xl + xr);
    const double av = a(mid);
    const double cv = c(mid);
    const double k = av * mean_exp(Bn[cell], Bn[cell + 1]) / len;
    // Consistent mass with weight e^B (q = -c e^B); 3-point Gauss per cell.
    double m00 = 0.0, m01 = 0.0, m11 = 0.0;
    if (cv != 0.0) {
      for (std::size_t g = 0; g < 3; ++g) {
        const double t = 0.5 * (1.0 + rule.nodes[g]);
        const double wgt = 0.5 * rule.weights[g] * len;
        const double q = -cv * std::exp(Bn[cell] + t * (Bn[cell + 1] - Bn[cell]));
        m00 += wgt * q * (1 - t) * (1 - t);
        m01 += wgt * q * (1 - t) * t;
        m11 += wgt * q * t * t;
      }
    }
    // Local dofs: node cell -> interior index cell-1, node cell+1 -> cell.
    const bool left_free = cell >= 1;
    const bool right_free = cell + 1 <= m;
    if (left_free) {
      A.diag[cell - 1] += k + m00;
      rhs[cell - 1] -= m00 + m01;
    }
    if (right_free) {
      A.diag[cell] += k + m11;
      rhs[cell] -= m01 + m11;
    }
    if (left_free && right_free) {
      A.upper[cell - 1] += -k + m01;
      A.lower[cell - 1] += -k + m01;
    }
  }
  auto v = solve_thomas(A, std::move(rhs));
  std::vector<double> w(nodes, 1.0);
  for (std::size_t i = 0; i < m; ++i) w[i + 1] = 1.0 + v[i];
  return {std::vector<double>(grid.begin(), grid.end()), std::move(w)};
}

Tabulated solve_w(const PiecewiseProfile& a, const PiecewiseProfile& b, const PiecewiseProfile& c,
                  std::size_t grid_cells) {
  auto pa = a.interior_breakpoints();
  auto pb = b.interior_breakpoints();
  auto pc = c.interior_breakpoints();
  auto grid = fitted_grid(grid_cells, merge_breakpoints({pa, pb, pc}));
  return solve_w_on(a, b, c, grid);
}

double shift_rate(const ProblemSpec& spec) {
  auto cuts = merge_breakpoints({spec.c.breakpoints(), spec.rho.breakpoints()});
  double worst = 0.0;  // max of c / rho
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    worst = std::max(worst, spec.c(mid) / spec.rho(mid));
  }
  if (worst <= 0.0) return 0.0;
  // e^{-2Kt} suffices whenever c <= 2K rho; c/rho <= K^2 always holds.
  if (worst <= 2.0 * spec.K) return 2.0 * spec.K;
  return spec.K * spec.K;
}

PiecewiseProfile shifted_c(const ProblemSpec& spec, double gamma) {
  auto cuts = merge_breakpoints({spec.c.breakpoints(), spec.rho.breakpoints()});
  std::vector<double> values;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    values.push_back(spec.c(mid) - gamma * spec.rho(mid));
  }
  return {std::move(cuts), std::move(values)};
}

double a_priori_log_K_tilde(double K, double gamma) {
  // |B| <= K^2, a e^B >= e^{-K^2}/K, -c1 e^B <= K (1 + gamma) e^{K^2};
  // the Riccati bound gives log w >= -Q/(8 p_min).
  const double K2 = K * K;
  const double log_w_min = -(K * (1.0 + gamma) * std::exp(K2)) / (8.0 * std::exp(-K2) / K);
  return 4.0 * std::log(K) + 4.0 * K2 - 4.0 * log_w_min;
}

double CanonicalSystem::state_factor(double x, double t) const { return std::exp(shift_rate * t) * w(x); }

double CanonicalSystem::canonical_initial(const NodalFunction& z0, double y) const {
  const double x = std::clamp(x_of_y(y), 0.0, 1.0);
  return z0(x) / w(x);
}

CanonicalSystem build_canonical(const ProblemSpec& spec, const ReductionOptions& options) {
  CanonicalSystem sys;
  sys.K = spec.K;
  sys.shift_rate = shift_rate(spec);
  const auto c1 = shifted_c(spec, sys.shift_rate);

  auto breaks = spec.all_breakpoints();
  sys.x_grid = fitted_grid(options.grid_cells, breaks);
  const auto& x = sys.x_grid;
  const std::size_t nodes = x.size();

  sys.w = solve_w_on(spec.a, spec.b, c1, x);
  const auto Btab = compute_B(spec.a, spec.b);
  std::vector<double> Bn(nodes);
  for (std::size_t i = 0; i < nodes; ++i) Bn[i] = Btab(x[i]);
  sys.B = Tabulated(x, Bn);
  const auto& wn = sys.w.values();

  // Cumulative int_0^x 1/(a w^2 e^B); w linear and B linear on each cell.
  const auto& rule = GaussRule<6>::get();
  std::vector<double> I(nodes, 0.0);
  for (std::size_t cell = 0; cell + 1 < nodes; ++cell) {
    const double xl = x[cell];
    const double xr = x[cell + 1];
    const double av = spec.a(0.5 * (xl + xr));
    const double piece = rule.integrate(
        [&](double s) {
          const double t = (s - xl) / (xr - xl);
          const double wv = wn[cell] + t * (wn[cell + 1] - wn[cell]);
          const double bv = Bn[cell] + t * (Bn[cell + 1] - Bn[cell]);
          return 1.0 / (av * wv * wv * std::exp(bv));
        },
        xl, xr);
    I[cell + 1] = I[cell] + piece;
  }
  sys.L = I.back();
  std::vector<double> y(nodes);
  for (std::size_t i = 0; i < nodes; ++i) y[i] = I[i] / sys.L;
  y.front() = 0.0;
  y.back() = 1.0;
  sys.y_of_x = Tabulated(x, y);
  sys.x_of_y = Tabulated(y, x);

  // rho~ and the control factor with one-sided values at coefficient jumps.
  const double L2 = sys.L * sys.L;
  std::vector<double> rk, rv, fk, fv;
  double lip_min = std::numeric_limits<double>::infinity();
  double lip_max = 0.0;
  auto cell_values = [&](std::size_t node, std::size_t cell) {
    const double mid = 0.5 * (x[cell] + x[cell + 1]);
    const double av = spec.a(mid);
    const double rv_ = spec.rho(mid);
    const double wv = wn[node];
    const double eb = std::exp(Bn[node]);
    const double rho_t = L2 * rv_ * av * wv * wv * wv * wv * eb * eb;
    const double factor = L2 * av * wv * wv * wv * eb * eb;
    const double dydx = 1.0 / (sys.L * av * wv * wv * eb);
    lip_min = std::min(lip_min, dydx);
    lip_max = std::max(lip_max, dydx);
    return std::array<double, 2>{rho_t, factor};
  };
  for (std::size_t i = 0; i < nodes; ++i) {
    if (i > 0) {
      auto left = cell_values(i, i - 1);
      rk.push_back(y[i]);
      rv.push_back(left[0]);
      fk.push_back(x[i]);
      fv.push_back(left[1]);
    }
    if (i + 1 < nodes) {
      auto right = cell_values(i, i);
      if (i == 0 || right[0] != rv.back()) {
        rk.push_back(y[i]);
        rv.push_back(right[0]);
      }
      if (i == 0 || right[1] != fv.back()) {
        fk.push_back(x[i]);
        fv.push_back(right[1]);
      }
    }
  }
  sys.rho_tilde = Tabulated(std::move(rk), std::move(rv));
  sys.control_factor = Tabulated(std::move(fk), std::move(fv));

  sys.K_tilde = std::max({sys.rho_tilde.max(), 1.0 / sys.rho_tilde.min(), lip_max, 1.0 / lip_min});
  sys.log_K_tilde_bound = a_priori_log_K_tilde(spec.K, sys.shift_rate);
  if (!(std::log(sys.K_tilde) <= sys.log_K_tilde_bound))
    throw NumericalError("reduction: measured constant exceeds the a-priori ellipticity bound");

  std::vector<Interval> mapped;
  for (const auto& iv : spec.omega.intervals()) mapped.push_back({sys.y_of_x(iv.left), sys.y_of_x(iv.right)});
  sys.omega = spec.omega;
  sys.omega_tilde = ControlRegion(std::move(mapped));
  return sys;
}

namespace {

constexpr double kSupportTol = 1e-12;

bool inside(const ControlRegion& region, const Interval& iv, double tol) {
  return std::any_of(region.intervals().begin(), region.intervals().end(), [&](const Interval& r) {
    return iv.left >= r.left - tol && iv.right <= r.right + tol;
  });
}

}  // namespace

PulledBackControl::PulledBackControl(std::shared_ptr<const SpaceTimeControl> canonical,
                                     std::shared_ptr<const CanonicalSystem> system)
    : canonical_(std::move(canonical)), system_(std::move(system)) {}

double PulledBackControl::value(double x, double t) const {
  const double y = system_->y_of_x(x);
  const double ft = canonical_->value(y, t);
  if (ft == 0.0) return 0.0;
  return std::exp(system_->shift_rate * t) * ft / system_->control_factor(x);
}

std::vector<Interval> PulledBackControl::support() const {
  std::vector<Interval> out;
  for (const auto& iv : canonical_->support())
    out.push_back({system_->x_of_y(iv.left), system_->x_of_y(iv.right)});
  return out;
}

std::vector<double> PulledBackControl::time_breaks() const { return canonical_->time_breaks(); }

std::vector<double> PulledBackControl::space_breaks() const {
  std::vector<double> out;
  for (double y : canonical_->space_breaks()) out.push_back(system_->x_of_y(std::clamp(y, 0.0, 1.0)));
  for (double j : system_->control_factor.jumps()) out.push_back(j);
  std::sort(out.begin(), out.end());
  return out;
}

PushedForwardControl::PushedForwardControl(std::shared_ptr<const SpaceTimeControl> original,
                                           std::shared_ptr<const CanonicalSystem> system)
    : original_(std::move(original)), system_(std::move(system)) {}

double PushedForwardControl::value(double y, double t) const {
  const double x = std::clamp(system_->x_of_y(y), 0.0, 1.0);
  const double f = original_->value(x, t);
  if (f == 0.0) return 0.0;
  return std::exp(-system_->shift_rate * t) * system_->control_factor(x) * f;
}

std::vector<Interval> PushedForwardControl::support() const {
  std::vector<Interval> out;
  for (const auto& iv : original_->support()) out.push_back({system_->y_of_x(iv.left), system_->y_of_x(iv.right)});
  return out;
}

std::vector<double> PushedForwardControl::time_breaks() const { return original_->time_breaks(); }

std::vector<double> PushedForwardControl::space_breaks() const {
  std::vector<double> out;
  for (double x : original_->space_breaks()) out.push_back(system_->y_of_x(std::clamp(x, 0.0, 1.0)));
  return out;
}

std::shared_ptr<const PulledBackControl> map_control_back(std::shared_ptr<const SpaceTimeControl> canonical,
                                                          std::shared_ptr<const CanonicalSystem> system) {
  for (const auto& iv : canonical->support())
    if (!inside(system->omega_tilde, iv, kSupportTol)) {
      std::ostringstream msg;
      msg << "canonical control support (" << iv.left << ", " << iv.right << ") is not inside omega~";
      throw PreconditionError(msg.str());
    }
  const ControlRegion omega = system->omega;
  auto out = std::make_shared<const PulledBackControl>(std::move(canonical), std::move(system));
  for (const auto& iv : out->support())
    if (!inside(omega, iv, 1e-9))
      throw PreconditionError("pulled-back control support leaves omega");
  return out;
}

std::shared_ptr<const PushedForwardControl> map_control_forward(std::shared_ptr<const SpaceTimeControl> original,
                                                                std::shared_ptr<const CanonicalSystem> system) {
  for (const auto& iv : original->support())
    if (!inside(system->omega, iv, kSupportTol)) throw PreconditionError("control support is not inside omega");
  return std::make_shared<const PushedForwardControl>(std::move(original), std::move(system));
}

}  // namespace nullctl
