#include "nullctl/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/fem.hpp"
#include "nullctl/quadrature.hpp"
#include "nullctl/tridiagonal.hpp"

namespace nullctl {

Mesh::Mesh(std::size_t cells) : n(cells) {
  if (n < 2) throw PreconditionError("mesh needs at least two cells");
  nodes.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) nodes[i] = static_cast<double>(i) / static_cast<double>(n);
}

std::size_t Mesh::cell_of(double x) const {
  const double s = std::floor(x * static_cast<double>(n));
  if (!(s > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(s), n - 1);
}

std::size_t EigenBasis::count_below(double mu) const {
  return static_cast<std::size_t>(std::upper_bound(lambdas.begin(), lambdas.end(), mu) - lambdas.begin());
}

namespace {

struct HermiteWeights {
  std::size_t cell;
  double h00, h10, h01, h11;
};

HermiteWeights hermite_value_weights(const Mesh& mesh, double x) {
  const std::size_t c = mesh.cell_of(x);
  const double h = mesh.h();
  const double t = (x - mesh.nodes[c]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {c, 2 * t3 - 3 * t2 + 1, (t3 - 2 * t2 + t) * h, -2 * t3 + 3 * t2, (t3 - t2) * h};
}

HermiteWeights hermite_slope_weights(const Mesh& mesh, double x) {
  const std::size_t c = mesh.cell_of(x);
  const double h = mesh.h();
  const double t = (x - mesh.nodes[c]) / h;
  const double t2 = t * t;
  return {c, (6 * t2 - 6 * t) / h, 3 * t2 - 4 * t + 1, (-6 * t2 + 6 * t) / h, 3 * t2 - 2 * t};
}

void check_domain(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("eigenfunction evaluated outside [0, 1]");
}

}  // namespace

double EigenBasis::value(std::size_t k, double x) const {
  check_domain(x);
  const auto w = hermite_value_weights(mesh, x);
  return w.h00 * eigvecs(w.cell, k) + w.h10 * slopes(w.cell, k) + w.h01 * eigvecs(w.cell + 1, k) +
         w.h11 * slopes(w.cell + 1, k);
}

double EigenBasis::slope(std::size_t k, double x) const {
  check_domain(x);
  const auto w = hermite_slope_weights(mesh, x);
  return w.h00 * eigvecs(w.cell, k) + w.h10 * slopes(w.cell, k) + w.h01 * eigvecs(w.cell + 1, k) +
         w.h11 * slopes(w.cell + 1, k);
}

void EigenBasis::values_at(double x, std::span<double> out) const {
  check_domain(x);
  const auto w = hermite_value_weights(mesh, x);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = w.h00 * eigvecs(w.cell, k) + w.h10 * slopes(w.cell, k) + w.h01 * eigvecs(w.cell + 1, k) +
             w.h11 * slopes(w.cell + 1, k);
}

void EigenBasis::slopes_at(double x, std::span<double> out) const {
  check_domain(x);
  const auto w = hermite_slope_weights(mesh, x);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = w.h00 * eigvecs(w.cell, k) + w.h10 * slopes(w.cell, k) + w.h01 * eigvecs(w.cell + 1, k) +
             w.h11 * slopes(w.cell + 1, k);
}

namespace {

// Eigenvalues of the pencil below sigma: negative pivots of LDL^T of K - sigma M.
std::size_t count_below(const Tridiagonal<double>& K, const Tridiagonal<double>& M, double sigma) {
  const std::size_t N = K.size();
  std::size_t count = 0;
  double d = K.diag[0] - sigma * M.diag[0];
  for (std::size_t i = 0;; ++i) {
    if (d == 0.0) d = -std::numeric_limits<double>::min();
    if (d < 0.0) ++count;
    if (i + 1 == N) break;
    const double off = K.upper[i] - sigma * M.upper[i];
    d = K.diag[i + 1] - sigma * M.diag[i + 1] - off * off / d;
  }
  return count;
}

double bisect_eigenvalue(const Tridiagonal<double>& K, const Tridiagonal<double>& M, std::size_t index, double lo,
                         double hi) {
  // Smallest sigma with more than `index` eigenvalues below.
  while (count_below(K, M, hi) <= index) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(K, M, mid) > index)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double m_dot(const Tridiagonal<double>& M, const std::vector<double>& u, const std::vector<double>& v) {
  const auto Mv = M.apply(v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * Mv[i];
  return s;
}

void recover_slopes(EigenBasis& basis, std::size_t k) {
  const std::size_t n = basis.mesh.n;
  const double lam2 = basis.lambdas[k] * basis.lambdas[k];
  const auto& x = basis.mesh.nodes;
  std::vector<double> cum(n + 1, 0.0);  // int_0^{x_i} rho e
  double moment = 0.0;                  // int_0^1 rho e (1 - s)
  for (std::size_t c = 0; c < n; ++c) {
    const double el = basis.eigvecs(c, k);
    const double er = basis.eigvecs(c + 1, k);
    const double xl = x[c];
    const double h = x[c + 1] - xl;
    double cell = 0.0;
    basis.rho.for_each_piece(xl, x[c + 1], [&](double a, double b, double ra, double rb) {
      const double ea = el + (er - el) * (a - xl) / h;
      const double eb = el + (er - el) * (b - xl) / h;
      cell += triple_linear<double>(b - a, ra, rb, ea, eb, 1.0, 1.0);
      moment += triple_linear<double>(b - a, ra, rb, ea, eb, 1.0 - a, 1.0 - b);
    });
    cum[c + 1] = cum[c] + cell;
  }
  const double d0 = lam2 * moment;
  for (std::size_t i = 0; i <= n; ++i) basis.slopes(i, k) = d0 - lam2 * cum[i];
}

}  // namespace

EigenBasis solve_basis(const Tabulated& rho, std::size_t m, const Mesh& mesh) {
  const std::size_t n = mesh.n;
  if (m == 0) throw PreconditionError("solve_basis: mode count must be positive");
  if (10 * m > n) {
    std::ostringstream msg;
    msg << "solve_basis: " << m << " modes need a mesh of at least " << 10 * m << " cells (have " << n << ")";
    throw PreconditionError(msg.str());
  }
  if (rho.front() > 0.0 || rho.back() < 1.0) throw PreconditionError("solve_basis: density must cover [0, 1]");
  const double rho_min = rho.min();
  const double rho_max = rho.max();
  if (!(rho_min > 0.0)) throw PreconditionError("solve_basis: density must be positive");

  const auto K = p1_stiffness<double>(n);
  const auto M = p1_mass<double>(rho, n);
  const std::size_t N = n - 1;

  EigenBasis basis;
  basis.mesh = mesh;
  basis.rho = rho;
  basis.lambdas.resize(m);
  basis.eigvecs = Eigen::MatrixXd::Zero(n + 1, m);
  basis.slopes = Eigen::MatrixXd::Zero(n + 1, m);

  std::vector<std::vector<double>> vecs;
  double lo = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double guess = std::pow((k + 1) * std::numbers::pi, 2) / rho_min * 1.5 + 1.0;
    const double sigma = bisect_eigenvalue(K, M, k, lo, std::max(guess, 2.0 * lo + 1.0));
    lo = sigma;
    basis.lambdas[k] = std::sqrt(sigma);

    TridiagonalLU<double> lu(combine(K, -sigma, M));
    std::vector<double> v(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double xi = mesh.nodes[i + 1];
      v[i] = std::sin((k + 1) * std::numbers::pi * xi) + 1e-3 * std::cos(7.0 * xi + static_cast<double>(k));
    }
    for (int it = 0; it < 4; ++it) {
      v = lu.solve(M.apply(v));
      const double nrm = std::sqrt(m_dot(M, v, v));
      for (auto& e : v) e /= nrm;
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : vecs) {
        const double p = m_dot(M, u, v);
        for (std::size_t i = 0; i < N; ++i) v[i] -= p * u[i];
      }
      const double nrm = std::sqrt(m_dot(M, v, v));
      for (auto& e : v) e /= nrm;
    }
    for (std::size_t i = 0; i < N; ++i) basis.eigvecs(i + 1, k) = v[i];
    recover_slopes(basis, k);
    if (basis.slopes(0, k) < 0.0) {
      basis.eigvecs.col(k) *= -1.0;
      basis.slopes.col(k) *= -1.0;
      for (auto& e : v) e = -e;
    }
    vecs.push_back(std::move(v));
  }

  for (std::size_t k = 1; k < m; ++k)
    if (!(basis.lambdas[k] - basis.lambdas[k - 1] > 1e-9 * basis.lambdas[k]))
      throw NumericalError("solve_basis: eigenvalues not strictly increasing");
  const auto report = check_orthonormality(basis);
  if (report.max_deviation > 1e-8) throw NumericalError("solve_basis: basis lost rho-orthonormality");
  const double h = mesh.h();
  for (std::size_t k = 0; k < m; ++k) {
    const double kpi = (k + 1) * std::numbers::pi;
    const double lam = basis.lambdas[k];
    const double slack = 1.0 + lam * lam * h * h * rho_max / 10.0 + 1e-12;
    if (lam < kpi / std::sqrt(rho_max) * (1.0 - 1e-12) || lam > kpi / std::sqrt(rho_min) * slack)
      throw NumericalError("solve_basis: eigenvalue outside the min-max bounds");
  }
  return basis;
}

EigenBasis exact_sine_basis(std::size_t m, const Mesh& mesh) {
  EigenBasis basis;
  basis.mesh = mesh;
  basis.rho = Tabulated::constant(1.0);
  basis.lambdas.resize(m);
  basis.eigvecs = Eigen::MatrixXd::Zero(mesh.n + 1, m);
  basis.slopes = Eigen::MatrixXd::Zero(mesh.n + 1, m);
  for (std::size_t k = 0; k < m; ++k) {
    const double lam = (k + 1) * std::numbers::pi;
    basis.lambdas[k] = lam;
    for (std::size_t i = 0; i <= mesh.n; ++i) {
      basis.eigvecs(i, k) = std::sqrt(2.0) * std::sin(lam * mesh.nodes[i]);
      basis.slopes(i, k) = std::sqrt(2.0) * lam * std::cos(lam * mesh.nodes[i]);
    }
    basis.eigvecs(0, k) = 0.0;
    basis.eigvecs(mesh.n, k) = 0.0;
  }
  return basis;
}

OrthonormalityReport check_orthonormality(const EigenBasis& basis) {
  const std::size_t n = basis.mesh.n;
  const std::size_t m = basis.m();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t c = 0; c < n; ++c) {
    const auto cm = p1_cell_mass<double>(basis.rho, n, c);
    const auto l = basis.eigvecs.row(c);
    const auto r = basis.eigvecs.row(c + 1);
    G.noalias() += cm[0] * l.transpose() * l + cm[1] * (l.transpose() * r + r.transpose() * l) +
                   cm[2] * r.transpose() * r;
  }
  OrthonormalityReport rep;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      const double dev = std::abs(G(j, k) - (j == k ? 1.0 : 0.0));
      if (j == k)
        rep.max_diag_dev = std::max(rep.max_diag_dev, dev);
      else
        rep.max_offdiag = std::max(rep.max_offdiag, dev);
    }
  rep.max_deviation = std::max(rep.max_diag_dev, rep.max_offdiag);
  return rep;
}

Eigen::VectorXd project(const EigenBasis& basis, const std::function<double(double)>& f) {
  const std::size_t m = basis.m();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  std::vector<double> e(m);
  const auto& rule = GaussRule<5>::get();
  const auto& x = basis.mesh.nodes;
  for (std::size_t c = 0; c < basis.mesh.n; ++c) {
    basis.rho.for_each_piece(x[c], x[c + 1], [&](double a, double b, double ra, double rb) {
      const double half = 0.5 * (b - a);
      for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
        const double t = 0.5 * (1.0 + rule.nodes[g]);
        const double s = a + t * (b - a);
        const double wgt = rule.weights[g] * half * (ra + t * (rb - ra)) * f(s);
        basis.values_at(s, e);
        for (std::size_t k = 0; k < m; ++k) out[k] += wgt * e[k];
      }
    });
  }
  return out;
}

double wrap_period_two(double x) {
  double r = std::fmod(x + 1.0, 2.0);
  if (r < 0.0) r += 2.0;
  return r - 1.0;
}

double extend_odd_periodic(const EigenBasis& basis, std::size_t k, double x) {
  const double r = wrap_period_two(x);
  return r >= 0.0 ? basis.value(k, r) : -basis.value(k, -r);
}

double extend_odd_periodic_slope(const EigenBasis& basis, std::size_t k, double x) {
  return basis.slope(k, std::abs(wrap_period_two(x)));
}

double extend_even_periodic(const Tabulated& rho, double x) { return rho(std::abs(wrap_period_two(x))); }

}  // namespace nullctl
