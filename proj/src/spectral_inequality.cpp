#include "nullctl/spectral_inequality.hpp"

#include <algorithm>
#include <boost/multiprecision/mpfr.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/fem.hpp"
#include "nullctl/tridiagonal.hpp"

namespace nullctl {

namespace {

using mp = boost::multiprecision::mpfr_float;

// Unweighted P1 mass restricted to omega, by node: diag[i], off[i] = (i, i+1).
template <class Scalar>
struct RegionMass {
  std::size_t first = 0;  // lowest node touched
  std::size_t last = 0;   // highest node touched
  std::vector<Scalar> diag;
  std::vector<Scalar> off;
};

template <class Scalar>
RegionMass<Scalar> region_mass(const Mesh& mesh, const ControlRegion& omega) {
  const std::size_t n = mesh.n;
  RegionMass<Scalar> R;
  R.diag.assign(n + 1, Scalar(0));
  R.off.assign(n, Scalar(0));
  R.first = n;
  R.last = 0;
  const Scalar h = Scalar(1) / Scalar(n);
  for (const auto& iv : omega.intervals()) {
    const std::size_t c0 = mesh.cell_of(iv.left);
    const std::size_t c1 = mesh.cell_of(iv.right);
    for (std::size_t c = c0; c <= c1; ++c) {
      const double a = std::max(iv.left, mesh.nodes[c]);
      const double b = std::min(iv.right, mesh.nodes[c + 1]);
      if (!(b > a)) continue;
      const Scalar xl = Scalar(c) / Scalar(n);
      const Scalar sa = (Scalar(a) - xl) / h;
      const Scalar sb = (Scalar(b) - xl) / h;
      const Scalar len = Scalar(b) - Scalar(a);
      const Scalar one(1);
      const Scalar la = 1 - sa, lb = 1 - sb;
      R.diag[c] += triple_linear<Scalar>(len, one, one, la, lb, la, lb);
      R.off[c] += triple_linear<Scalar>(len, one, one, la, lb, sa, sb);
      R.diag[c + 1] += triple_linear<Scalar>(len, one, one, sa, sb, sa, sb);
      R.first = std::min(R.first, c);
      R.last = std::max(R.last, c + 1);
    }
  }
  return R;
}

// G = V^T M_omega V with V given row-wise (node i -> row(i)).
template <class Scalar, class Row>
std::vector<Scalar> region_gram(const RegionMass<Scalar>& R, std::size_t m, Row&& row) {
  std::vector<Scalar> G(m * m, Scalar(0));
  std::vector<Scalar> z(m);
  for (std::size_t i = R.first; i <= R.last; ++i) {
    const auto& vi = row(i);
    for (std::size_t k = 0; k < m; ++k) {
      Scalar s = R.diag[i] * vi[k];
      if (i > R.first) s += R.off[i - 1] * row(i - 1)[k];
      if (i < R.last) s += R.off[i] * row(i + 1)[k];
      z[k] = s;
    }
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) G[j * m + k] += vi[j] * z[k];
  }
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < j; ++k) {
      const Scalar avg = (G[j * m + k] + G[k * m + j]) / 2;
      G[j * m + k] = avg;
      G[k * m + j] = avg;
    }
  return G;
}

// Eigenvectors of the discrete pencil refined at the current precision by
// Rayleigh-quotient iteration from the double pairs.  Rows are nodes.
std::vector<std::vector<mp>> refine_modes(const EigenBasis& basis, std::size_t m, unsigned digits) {
  const std::size_t n = basis.mesh.n;
  const std::size_t N = n - 1;
  const auto K = p1_stiffness<mp>(n);
  const auto M = p1_mass<mp>(basis.rho, n);
  const mp tol = boost::multiprecision::pow(mp(10), -static_cast<int>(digits) + 4);
  std::vector<std::vector<mp>> rows(n + 1, std::vector<mp>(m, mp(0)));
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<mp> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = basis.eigvecs(i + 1, k);
    auto mnorm = [&](std::vector<mp>& x) {
      const auto Mx = M.apply(x);
      mp s = 0;
      for (std::size_t i = 0; i < N; ++i) s += x[i] * Mx[i];
      const mp r = sqrt(s);
      for (auto& e : x) e /= r;
    };
    mnorm(v);
    mp sigma = mp(basis.lambdas[k]) * basis.lambdas[k];
    for (int it = 0; it < 12; ++it) {
      const auto Kv = K.apply(v);
      const auto Mv = M.apply(v);
      mp num = 0, den = 0;
      for (std::size_t i = 0; i < N; ++i) {
        num += v[i] * Kv[i];
        den += v[i] * Mv[i];
      }
      const mp next = num / den;
      const bool done = it > 0 && abs(next - sigma) <= tol * next;
      sigma = next;
      if (done) break;
      TridiagonalLU<mp> lu(combine(K, mp(-sigma), M));
      v = lu.solve(Mv);
      mnorm(v);
    }
    // Keep the sign of the double-precision mode.
    mp dot = 0;
    for (std::size_t i = 0; i < N; ++i) dot += v[i] * basis.eigvecs(i + 1, k);
    const bool flip = dot < 0;
    for (std::size_t i = 0; i < N; ++i) rows[i + 1][k] = flip ? mp(-v[i]) : v[i];
  }
  return rows;
}

struct Attempt {
  std::vector<double> lambda_min;
  std::vector<bool> sentinel;
};

Attempt attempt(const EigenBasis& basis, const ControlRegion& omega, const std::vector<std::size_t>& counts,
                unsigned digits) {
  mp::default_precision(digits);
  const std::size_t m = *std::max_element(counts.begin(), counts.end());
  Attempt out;
  out.lambda_min.assign(counts.size(), 0.0);
  out.sentinel.assign(counts.size(), false);
  if (m == 0) return out;

  const auto rows = refine_modes(basis, m, digits);
  const auto R = region_mass<mp>(basis.mesh, omega);
  const auto G = region_gram<mp>(R, m, [&](std::size_t i) -> const std::vector<mp>& { return rows[i]; });

  // Cholesky of the full Gram; its leading blocks factor the nested Grams.
  std::vector<mp> L(m * m, mp(0));
  std::size_t valid = m;  // leading order that factored with positive pivots
  for (std::size_t j = 0; j < m && valid == m; ++j) {
    mp d = G[j * m + j];
    for (std::size_t p = 0; p < j; ++p) d -= L[j * m + p] * L[j * m + p];
    if (!(d > 0)) {
      valid = j;
      break;
    }
    L[j * m + j] = sqrt(d);
    for (std::size_t i = j + 1; i < m; ++i) {
      mp s = G[i * m + j];
      for (std::size_t p = 0; p < j; ++p) s -= L[i * m + p] * L[j * m + p];
      L[i * m + j] = s / L[j * m + j];
    }
  }

  const double eps_ratio = std::pow(10.0, -static_cast<double>(digits)) / std::numeric_limits<double>::epsilon();
  for (std::size_t q = 0; q < counts.size(); ++q) {
    const std::size_t c = counts[q];
    if (c == 0) continue;
    Eigen::MatrixXd Gd(c, c);
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t k = 0; k < c; ++k) Gd(j, k) = static_cast<double>(G[j * m + k]);
    const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Gd, Eigen::EigenvaluesOnly).eigenvalues()(c - 1);
    const double threshold = 1e-14 * eps_ratio * lambda_max;
    if (c > valid) {
      out.sentinel[q] = true;
      continue;
    }
    // Inverse iteration with the Cholesky factor of the leading block.
    std::vector<mp> x(c, mp(1));
    mp est = 0;
    for (int it = 0; it < 2000; ++it) {
      mp nrm = 0;
      for (const auto& e : x) nrm += e * e;
      nrm = sqrt(nrm);
      for (auto& e : x) e /= nrm;
      std::vector<mp> y = x;
      for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t p = 0; p < i; ++p) y[i] -= L[i * m + p] * y[p];
        y[i] /= L[i * m + i];
      }
      for (std::size_t i = c; i-- > 0;) {
        for (std::size_t p = i + 1; p < c; ++p) y[i] -= L[p * m + i] * y[p];
        y[i] /= L[i * m + i];
      }
      mp growth = 0;
      for (std::size_t i = 0; i < c; ++i) growth += x[i] * y[i];
      const mp next = 1 / growth;  // Rayleigh quotient of G^{-1}, inverted
      const bool done = it > 2 && abs(next - est) <= mp(1e-15) * next;
      est = next;
      x = std::move(y);
      if (done) break;
    }
    out.lambda_min[q] = static_cast<double>(est);
    if (!(out.lambda_min[q] >= threshold)) out.sentinel[q] = true;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd gram_on_region(const EigenBasis& basis, const ControlRegion& omega, double mu) {
  const std::size_t m = basis.count_below(mu);
  if (m == 0) {
    std::ostringstream msg;
    msg << "gram_on_region: no mode with lambda <= " << mu;
    throw PreconditionError(msg.str());
  }
  const auto R = region_mass<double>(basis.mesh, omega);
  std::vector<double> row(m);
  std::vector<std::vector<double>> rows(basis.mesh.n + 1, std::vector<double>(m));
  for (std::size_t i = R.first; i <= R.last; ++i)
    for (std::size_t k = 0; k < m; ++k) rows[i][k] = basis.eigvecs(i, k);
  const auto G = region_gram<double>(R, m, [&](std::size_t i) -> const std::vector<double>& { return rows[i]; });
  Eigen::MatrixXd out(m, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) out(j, k) = G[j * m + k];
  return out;
}

ObservabilityReport observability_curve(const EigenBasis& basis, const ControlRegion& omega,
                                        const std::vector<double>& mu_grid, const ObservabilityOptions& options) {
  if (!std::is_sorted(mu_grid.begin(), mu_grid.end()))
    throw PreconditionError("observability_curve: mu grid must be ascending");
  ObservabilityReport rep;
  rep.mu_grid = mu_grid;
  for (double mu : mu_grid) {
    if (!(mu < basis.lambdas.back())) {
      std::ostringstream msg;
      msg << "observability_curve: mu = " << mu << " is not below the largest resolved wavenumber "
          << basis.lambdas.back() << "; enlarge the basis";
      throw PreconditionError(msg.str());
    }
    rep.mode_counts.push_back(basis.count_below(mu));
  }
  const unsigned saved = mp::default_precision();
  Attempt best;
  unsigned digits = options.start_digits;
  for (;;) {
    best = attempt(basis, omega, rep.mode_counts, digits);
    const bool any = std::any_of(best.sentinel.begin(), best.sentinel.end(), [](bool s) { return s; });
    if (!any || 2 * digits > options.max_digits) break;
    digits *= 2;
  }
  mp::default_precision(saved);
  rep.digits = digits;
  rep.lambda_min = best.lambda_min;
  rep.sentinel = best.sentinel;
  for (std::size_t q = 0; q < mu_grid.size(); ++q) {
    double ratio = 0.0;
    if (rep.sentinel[q])
      ratio = std::numeric_limits<double>::infinity();
    else if (rep.mode_counts[q] > 0)
      ratio = 1.0 / rep.lambda_min[q];
    rep.ratios.push_back(ratio);
    rep.log_ratios.push_back(ratio > 0.0 ? std::log(ratio) : 0.0);
  }
  return rep;
}

std::vector<double> default_mu_grid(const EigenBasis& basis) {
  std::vector<double> grid;
  const double top = 0.5 * basis.lambdas.back();
  for (int j = 1; j * std::numbers::pi <= top; ++j) grid.push_back(j * std::numbers::pi);
  return grid;
}

FitResult fit_constant(const ObservabilityReport& report) {
  std::vector<double> mu, lr;
  for (std::size_t q = 0; q < report.mu_grid.size(); ++q) {
    if (report.sentinel[q]) {
      std::ostringstream msg;
      msg << "fit_constant: ratio at mu = " << report.mu_grid[q] << " is numerically unresolved";
      throw NumericalError(msg.str());
    }
    if (report.mode_counts[q] == 0) continue;
    mu.push_back(report.mu_grid[q]);
    lr.push_back(report.log_ratios[q]);
  }
  if (mu.size() < 3) throw PreconditionError("fit_constant: needs at least three points with modes");
  FitResult fit;
  fit.points = mu.size();
  const double nn = static_cast<double>(mu.size());
  double sm = 0, sl = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    sm += mu[i];
    sl += lr[i];
  }
  const double mbar = sm / nn, lbar = sl / nn;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    sxx += (mu[i] - mbar) * (mu[i] - mbar);
    sxy += (mu[i] - mbar) * (lr[i] - lbar);
  }
  fit.slope = sxy / sxx;
  fit.intercept = lbar - fit.slope * mbar;
  for (std::size_t i = 0; i < mu.size(); ++i)
    fit.max_positive_residual = std::max(fit.max_positive_residual, lr[i] - fit.intercept - fit.slope * mu[i]);
  fit.fitted_range = std::abs(fit.slope) * (mu.back() - mu.front());
  fit.super_exponential_flag = fit.max_positive_residual > 0.15 * fit.fitted_range;
  fit.N_hat = std::max(fit.slope, std::exp(fit.intercept));

  // log N + N mu is increasing in N; solve per point and keep the largest.
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto g = [&](double N) { return std::log(N) + N * mu[i] - lr[i]; };
    double hi = 1.0;
    while (g(hi) < 0.0) hi *= 2.0;
    double llo = -700.0, lhi = std::log(hi);
    for (int it = 0; it < 200; ++it) {
      const double lm = 0.5 * (llo + lhi);
      (g(std::exp(lm)) < 0.0 ? llo : lhi) = lm;
    }
    hi = std::exp(lhi);
    fit.N_certified = std::max(fit.N_certified, hi);
  }
  return fit;
}

double sample_ratio(const Eigen::MatrixXd& G, const Eigen::VectorXd& a) { return a.squaredNorm() / a.dot(G * a); }

double random_coefficient_check(const EigenBasis& basis, const ControlRegion& omega, double mu, std::size_t trials,
                                std::uint64_t seed) {
  if (trials == 0) throw PreconditionError("random_coefficient_check: trials must be positive");
  const auto G = gram_on_region(basis, omega, mu);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  Eigen::VectorXd a(G.rows());
  for (std::size_t t = 0; t < trials; ++t) {
    for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = normal(rng);
    a.normalize();
    best = std::max(best, sample_ratio(G, a));
  }
  return best;
}

}  // namespace nullctl
