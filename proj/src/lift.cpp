#include "nullctl/lift.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/quadrature.hpp"

namespace nullctl {

LiftGrid LiftGrid::uniform(std::size_t nx, std::size_t ny, double Y) {
  if (nx < 3 || ny < 3) throw PreconditionError("lift grid needs at least 3 points per direction");
  LiftGrid g;
  for (std::size_t i = 0; i < nx; ++i) g.x.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(nx - 1));
  for (std::size_t j = 0; j < ny; ++j) g.y.push_back(-Y + 2.0 * Y * static_cast<double>(j) / static_cast<double>(ny - 1));
  return g;
}

namespace {

Eigen::MatrixXd extended_values(const EigenBasis& basis, const std::vector<double>& x, std::size_t m, bool slopes) {
  Eigen::MatrixXd E(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(m));
  std::vector<double> row(m);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = wrap_period_two(x[i]);
    if (slopes) {
      basis.slopes_at(std::abs(r), row);
    } else {
      basis.values_at(std::abs(r), row);
      if (r < 0.0)
        for (auto& e : row) e = -e;
    }
    for (std::size_t k = 0; k < m; ++k) E(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return E;
}

Eigen::MatrixXd hyperbolic(const EigenBasis& basis, const std::vector<double>& y, std::size_t m, bool sine) {
  Eigen::MatrixXd C(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < y.size(); ++j)
    for (std::size_t k = 0; k < m; ++k) {
      const double lam = basis.lambdas[k];
      C(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = sine ? std::sinh(lam * y[j]) / lam : std::cosh(lam * y[j]);
    }
  return C;
}

// Breakpoints of the extended Hermite pieces and density inside [l, r].
std::vector<double> extended_cuts(const EigenBasis& basis, double l, double r) {
  std::vector<double> base = basis.mesh.nodes;
  for (double k : basis.rho.knots()) base.push_back(k);
  std::vector<double> cuts{l, r};
  for (int p = static_cast<int>(std::floor((l - 1.0) / 2.0)) - 1; p <= static_cast<int>(std::ceil((r + 1.0) / 2.0)) + 1; ++p)
    for (double b : base)
      for (double c : {2.0 * p + b, 2.0 * p - b})
        if (c > l && c < r) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return b - a < 1e-14; }), cuts.end());
  return cuts;
}

template <class F>
void gauss_over(const std::vector<double>& cuts, F&& visit) {
  const auto& rule = GaussRule<6>::get();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double half = 0.5 * (b - a);
    for (std::size_t g = 0; g < rule.nodes.size(); ++g) visit(a + half * (1.0 + rule.nodes[g]), half * rule.weights[g]);
  }
}

}  // namespace

LiftField eval_lift(std::shared_ptr<const EigenBasis> basis, const Eigen::VectorXd& coeffs, double mu,
                    const LiftGrid& grid) {
  const auto m = static_cast<std::size_t>(coeffs.size());
  if (m > basis->count_below(mu)) {
    std::ostringstream msg;
    msg << "eval_lift: " << m << " coefficients but only " << basis->count_below(mu) << " modes have lambda <= " << mu;
    throw PreconditionError(msg.str());
  }
  LiftField f;
  f.grid = grid;
  f.mu = mu;
  f.coeffs = coeffs;
  f.basis = basis;
  if (m == 0) {
    f.u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.x.size()), static_cast<Eigen::Index>(grid.y.size()));
    f.v = f.u;
    return f;
  }
  const auto E = extended_values(*basis, grid.x, m, false);
  const auto Ep = extended_values(*basis, grid.x, m, true);
  const auto Ch = hyperbolic(*basis, grid.y, m, false);
  const auto Sh = hyperbolic(*basis, grid.y, m, true);
  f.u = E * coeffs.asDiagonal() * Ch.transpose();
  f.v = Ep * coeffs.asDiagonal() * Sh.transpose();
  return f;
}

double weak_residual(const LiftField& field, double H) {
  const auto& basis = *field.basis;
  const auto m = static_cast<std::size_t>(field.coeffs.size());
  if (m == 0 || field.coeffs.isZero(0.0)) return 0.0;
  const auto& gx = field.grid.x;
  const auto& gy = field.grid.y;
  const double X0 = gx.front(), X1 = gx.back(), Y0 = gy.front(), Y1 = gy.back();

  // L2 norm of u by the trapezoidal rule.
  const double hx = (X1 - X0) / static_cast<double>(gx.size() - 1);
  const double hy = (Y1 - Y0) / static_cast<double>(gy.size() - 1);
  double unorm2 = 0.0;
  for (Eigen::Index i = 0; i < field.u.rows(); ++i)
    for (Eigen::Index j = 0; j < field.u.cols(); ++j) {
      const double wx = (i == 0 || i + 1 == field.u.rows()) ? 0.5 : 1.0;
      const double wy = (j == 0 || j + 1 == field.u.cols()) ? 0.5 : 1.0;
      unorm2 += wx * wy * field.u(i, j) * field.u(i, j);
    }
  const double unorm = std::sqrt(unorm2 * hx * hy);
  const double grad_phi = std::sqrt(8.0 / 3.0);

  double worst = 0.0;
  std::vector<double> e(m), ep(m);
  for (double cx = X0 + H; cx <= X1 - H + 1e-12; cx += H) {
    // x integrals: X1_k = int e_k' T', X2_k = int rho e_k T.
    Eigen::VectorXd A = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    Eigen::VectorXd Bx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    auto cuts = extended_cuts(basis, cx - H, cx + H);
    cuts.push_back(cx);
    std::sort(cuts.begin(), cuts.end());
    gauss_over(cuts, [&](double x, double w) {
      const double r = wrap_period_two(x);
      basis.values_at(std::abs(r), e);
      basis.slopes_at(std::abs(r), ep);
      const double sgn = r < 0.0 ? -1.0 : 1.0;
      const double T = 1.0 - std::abs(x - cx) / H;
      const double Tp = x < cx ? 1.0 / H : -1.0 / H;
      const double rho = extend_even_periodic(basis.rho, x);
      for (std::size_t k = 0; k < m; ++k) {
        A[static_cast<Eigen::Index>(k)] += w * ep[k] * Tp;
        Bx[static_cast<Eigen::Index>(k)] += w * rho * sgn * e[k] * T;
      }
    });
    for (double cy = Y0 + H; cy <= Y1 - H + 1e-12; cy += H) {
      double res = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double lam = basis.lambdas[k];
        const double chH = std::cosh(lam * H);
        // int cosh(lam y) T(y) dy and int lam sinh(lam y) T'(y) dy over the tent.
        const double y1 = 2.0 * std::cosh(lam * cy) * (chH - 1.0) / (lam * lam * H);
        const double y2 = (2.0 * std::cosh(lam * cy) - std::cosh(lam * (cy - H)) - std::cosh(lam * (cy + H))) / H;
        res += field.coeffs[static_cast<Eigen::Index>(k)] * (A[static_cast<Eigen::Index>(k)] * y1 + Bx[static_cast<Eigen::Index>(k)] * y2);
      }
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst / (unorm * grad_phi);
}

StreamResidual stream_residual(const LiftField& field) {
  StreamResidual out;
  const auto& gx = field.grid.x;
  const auto& gy = field.grid.y;
  const auto nx = static_cast<Eigen::Index>(gx.size());
  const auto ny = static_cast<Eigen::Index>(gy.size());
  const double hx = gx[1] - gx[0];
  const double hy = gy[1] - gy[0];
  double rx = 0.0, ry = 0.0, scale = 0.0;
  for (Eigen::Index i = 1; i + 1 < nx; ++i) {
    const double rho = extend_even_periodic(field.basis->rho, gx[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 1; j + 1 < ny; ++j) {
      const double ux = (field.u(i + 1, j) - field.u(i - 1, j)) / (2 * hx);
      const double uy = (field.u(i, j + 1) - field.u(i, j - 1)) / (2 * hy);
      const double vx = (field.v(i + 1, j) - field.v(i - 1, j)) / (2 * hx);
      const double vy = (field.v(i, j + 1) - field.v(i, j - 1)) / (2 * hy);
      rx += std::abs(vx + rho * uy);
      ry += std::abs(vy - ux);
      scale += std::abs(ux) + std::abs(uy);
    }
  }
  if (scale > 0.0) {
    out.x_relation = rx / scale;
    out.y_relation = ry / scale;
  }
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j)
      if (gy[static_cast<std::size_t>(j)] == 0.0) out.max_trace = std::max(out.max_trace, std::abs(field.v(i, j)));
  return out;
}

namespace {

// Grid points of [-1, 1] x [0, Y] ordered by distance to (center, 0), with
// x distances taken modulo 2.
struct BallSampler {
  std::vector<double> x, y;
  std::vector<std::pair<double, Eigen::Index>> order;  // (distance, flat index x + nx*y)
  Eigen::Index nx = 0;

  BallSampler(const GrowthOptions& opt, double center) {
    const auto g = LiftGrid::uniform(opt.nx, opt.ny, opt.Y);
    x = g.x;
    for (double v : g.y)
      if (v >= 0.0) y.push_back(v);
    nx = static_cast<Eigen::Index>(x.size());
    for (std::size_t j = 0; j < y.size(); ++j)
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = wrap_period_two(x[i] - center);
        order.push_back({std::hypot(dx, y[j]), static_cast<Eigen::Index>(i + x.size() * j)});
      }
    std::sort(order.begin(), order.end());
  }

  /// max |U| over each radius (ascending radii).
  std::vector<double> sup_norms(const Eigen::MatrixXd& U, const std::vector<double>& radii) const {
    std::vector<double> out;
    double best = 0.0;
    std::size_t p = 0;
    for (double r : radii) {
      for (; p < order.size() && order[p].first <= r; ++p) {
        const Eigen::Index i = order[p].second % nx, j = order[p].second / nx;
        best = std::max(best, std::abs(U(i, j)));
      }
      out.push_back(best);
    }
    return out;
  }
};

Eigen::MatrixXd lift_values(const EigenBasis& basis, const Eigen::VectorXd& a, const BallSampler& s) {
  const auto m = static_cast<std::size_t>(a.size());
  const auto E = extended_values(basis, s.x, m, false);
  const auto Ch = hyperbolic(basis, s.y, m, false);
  return E * a.asDiagonal() * Ch.transpose();
}

Eigen::VectorXd unit_gaussian(std::size_t m, std::seed_seq& seq) {
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Eigen::VectorXd a(static_cast<Eigen::Index>(m));
  for (auto& v : a) v = normal(rng);
  const double nrm = a.norm();
  if (nrm > 0.0) a /= nrm;
  return a;
}

void least_squares(const std::vector<double>& s, const std::vector<double>& t, double& slope, double& intercept) {
  const double n = static_cast<double>(s.size());
  double ms = 0, mt = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    mt += t[i];
  }
  ms /= n;
  mt /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += (s[i] - ms) * (s[i] - ms);
    sxy += (s[i] - ms) * (t[i] - mt);
  }
  slope = sxx > 0.0 ? sxy / sxx : 0.0;
  intercept = mt - slope * ms;
}

}  // namespace

GrowthReport growth_report(const EigenBasis& basis, const ControlRegion& omega, const std::vector<double>& mu_samples,
                           std::size_t trials, std::uint64_t seed, const GrowthOptions& options) {
  GrowthReport rep;
  rep.center = omega.largest().center();
  rep.delta = omega.inradius();
  for (double r = 1.0; r > 0.5 * rep.delta * (1.0 + 1e-12); r *= 0.5) rep.radii.push_back(r);
  rep.radii.push_back(0.5 * rep.delta);
  std::sort(rep.radii.begin(), rep.radii.end());
  rep.radii.erase(std::unique(rep.radii.begin(), rep.radii.end()), rep.radii.end());
  const BallSampler sampler(options, rep.center);

  std::vector<double> fit_mu, fit_log;
  for (std::size_t q = 0; q < mu_samples.size(); ++q) {
    const double mu = mu_samples[q];
    const std::size_t m = basis.count_below(mu);
    for (std::size_t t = 0; t < trials; ++t) {
      if (m == 0) {
        ++rep.skipped;
        continue;
      }
      std::seed_seq seq{seed, static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(t)};
      const auto a = unit_gaussian(m, seq);
      const auto U = lift_values(basis, a, sampler);
      const auto sup = sampler.sup_norms(U, rep.radii);
      if (sup.front() == 0.0) {
        ++rep.skipped;
        continue;
      }
      for (std::size_t i = 0; i < sup.size(); ++i) {
        rep.rows.push_back({mu, t, rep.radii[i], sup[i]});
        if (i > 0 && sup[i] < sup[i - 1]) rep.monotone = false;
      }
      for (std::size_t i = 1; i + 1 < sup.size(); ++i) {
        const double l0 = std::log(rep.radii[i - 1]), l1 = std::log(rep.radii[i]), l2 = std::log(rep.radii[i + 1]);
        const double s01 = (std::log(sup[i]) - std::log(sup[i - 1])) / (l1 - l0);
        const double s12 = (std::log(sup[i + 1]) - std::log(sup[i])) / (l2 - l1);
        ++rep.convexity_checks;
        if (s12 < s01 - 1e-12) ++rep.convexity_violations;
      }
      const double ratio = sup.back() / sup.front();
      rep.ratio_mu.push_back(mu);
      rep.log_ratios.push_back(std::log(ratio));
      fit_mu.push_back(mu);
      fit_log.push_back(std::log(ratio));
    }
  }
  if (fit_mu.size() >= 2) {
    least_squares(fit_mu, fit_log, rep.fit_slope, rep.fit_intercept);
    for (std::size_t i = 0; i < fit_mu.size(); ++i)
      rep.max_residual = std::max(rep.max_residual, std::abs(fit_log[i] - rep.fit_intercept - rep.fit_slope * fit_mu[i]));
  }
  return rep;
}

void fit_cauchy(CauchyReport& report) {
  std::vector<double> s, t;
  for (const auto& row : report.rows) {
    s.push_back(std::log(row.trace / (std::sqrt(row.r) * row.upper)));
    t.push_back(std::log(row.lhs / row.upper));
  }
  report.theta = 0.0;
  report.C = 0.0;
  report.violations = 0;
  if (s.size() < 2) return;
  double slope = 0.0, intercept = 0.0;
  least_squares(s, t, slope, intercept);
  report.theta = std::clamp(slope, 0.01, 0.99);
  double logC = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) logC = std::max(logC, t[i] - report.theta * s[i]);
  report.C = std::exp(logC);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (t[i] > logC + report.theta * s[i] + 1e-12) ++report.violations;
}

CauchyReport cauchy_data_report(const EigenBasis& basis, const ControlRegion& omega, std::size_t trials,
                                const std::vector<double>& r_grid, std::uint64_t seed, std::size_t modes,
                                const GrowthOptions& options) {
  for (double r : r_grid)
    if (!(r > 0.0 && r <= 0.25)) throw PreconditionError("cauchy_data_report: radii must lie in (0, 1/4]");
  if (modes == 0 || modes > basis.m()) throw PreconditionError("cauchy_data_report: mode count outside the basis");
  const double center = omega.largest().center();
  const BallSampler sampler(options, center);
  std::vector<double> radii;
  for (double r : r_grid) {
    radii.push_back(0.5 * r);
    radii.push_back(4.0 * r);
  }
  std::sort(radii.begin(), radii.end());
  CauchyReport rep;
  std::vector<double> e(modes);
  for (std::size_t t = 0; t < trials; ++t) {
    std::seed_seq seq{seed + t};
    const auto a = unit_gaussian(modes, seq);
    const auto U = lift_values(basis, a, sampler);
    const auto sup = sampler.sup_norms(U, radii);
    auto sup_at = [&](double r) { return sup[static_cast<std::size_t>(std::lower_bound(radii.begin(), radii.end(), r) - radii.begin())]; };
    for (double r : r_grid) {
      double tr = 0.0;
      gauss_over(extended_cuts(basis, center - r, center + r), [&](double x, double w) {
        const double rr = wrap_period_two(x);
        basis.values_at(std::abs(rr), e);
        double val = 0.0;
        for (std::size_t k = 0; k < modes; ++k) val += a[static_cast<Eigen::Index>(k)] * e[k];
        if (rr < 0.0) val = -val;
        tr += w * val * val;
      });
      const double trace = std::sqrt(tr);
      if (trace == 0.0) {
        ++rep.excluded;
        continue;
      }
      rep.rows.push_back({t, r, sup_at(0.5 * r), trace, sup_at(4.0 * r)});
    }
  }
  fit_cauchy(rep);
  return rep;
}

}  // namespace nullctl
