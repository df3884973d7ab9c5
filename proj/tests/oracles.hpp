#pragma once

// Independent reference values.  Nothing here calls the library's solvers.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nullctl/coefficients.hpp"

namespace oracle {

/// Shooting value e(1) of  e'' + lambda^2 rho e = 0,  e(0) = 0, e'(0) = 1,
/// propagated exactly across every constant piece of rho.
inline double shoot(const nullctl::PiecewiseProfile& rho, double lambda) {
  double e = 0.0, d = 1.0;
  const auto& bp = rho.breakpoints();
  for (std::size_t i = 0; i < rho.cells(); ++i) {
    const double k = lambda * std::sqrt(rho.values()[i]);
    const double h = bp[i + 1] - bp[i];
    const double c = std::cos(k * h), s = std::sin(k * h);
    const double e1 = c * e + s / k * d;
    const double d1 = -k * s * e + c * d;
    // Keep the pair bounded; only the sign and zeros of e(1) matter.
    const double scale = std::max(std::abs(e1), std::abs(d1) / std::max(k, 1.0));
    e = e1 / scale;
    d = d1 / scale;
  }
  return e;
}

/// First `count` Dirichlet wavenumbers by a fine scan for sign changes of the
/// shooting value and bisection to machine precision.
inline std::vector<double> transfer_matrix_wavenumbers(const nullctl::PiecewiseProfile& rho, std::size_t count) {
  std::vector<double> out;
  const double step = 1e-3 * M_PI / std::sqrt(rho.max());
  double lo = step, flo = shoot(rho, lo);
  while (out.size() < count) {
    const double hi = lo + step, fhi = shoot(rho, hi);
    if ((flo < 0) != (fhi < 0)) {
      double a = lo, b = hi, fa = flo;
      for (int it = 0; it < 200 && b - a > 4e-16 * b; ++it) {
        const double m = 0.5 * (a + b), fm = shoot(rho, m);
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      out.push_back(0.5 * (a + b));
    }
    lo = hi;
    flo = fhi;
  }
  return out;
}

/// W = int_0^tau e^{-Lambda s} G e^{-Lambda s} ds entrywise by 20-point Gauss
/// on 64 uniform panels of [0, min(tau, 50 / rate)]; the dropped tail is
/// below e^{-50} of the entry.
inline Eigen::MatrixXd gramian_by_quadrature(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& G, double tau) {
  const auto m = lambdas.size();
  Eigen::MatrixXd W(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double rate = lambdas[i] * lambdas[i] + lambdas[j] * lambdas[j];
      auto f = [&](double s) { return std::exp(-rate * s); };
      const double end = std::min(tau, 50.0 / rate);
      double sum = 0.0;
      for (int p = 0; p < 64; ++p)
        sum += boost::math::quadrature::gauss<double, 20>::integrate(f, end * p / 64.0, end * (p + 1) / 64.0);
      W(i, j) = G(i, j) * sum;
    }
  return W;
}

/// w'' + b w' + c w = 0, w(0) = w(1) = 1, for constants with b^2 - 4c > 0.
inline double w_constant(double b, double c, double x) {
  const double disc = std::sqrt(b * b - 4 * c);
  const double r1 = 0.5 * (-b + disc), r2 = 0.5 * (-b - disc);
  // A e^{r1 x} + C e^{r2 x}: A + C = 1, A e^{r1} + C e^{r2} = 1.
  const double A = (1 - std::exp(r2)) / (std::exp(r1) - std::exp(r2));
  const double C = 1 - A;
  return A * std::exp(r1 * x) + C * std::exp(r2 * x);
}

/// (int_0^x 1/a) / (int_0^1 1/a) for piecewise-constant a.
inline double y_of_x_divergence(const nullctl::PiecewiseProfile& a, double x) {
  const auto& bp = a.breakpoints();
  double part = 0.0, total = 0.0;
  for (std::size_t i = 0; i < a.cells(); ++i) {
    const double l = bp[i], r = bp[i + 1];
    total += (r - l) / a.values()[i];
    if (x > l) part += (std::min(x, r) - l) / a.values()[i];
  }
  return part / total;
}

/// Piecewise-constant profile with 2 to 5 cells and values in [1/K, K],
/// values log-uniform, breakpoints uniform and at least 0.05 apart.
inline nullctl::PiecewiseProfile random_profile(std::uint64_t seed, double K) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cells(2, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = cells(rng);
  std::vector<double> bp;
  for (;;) {
    bp = {0.0, 1.0};
    for (int i = 1; i < n; ++i) bp.push_back(unit(rng));
    std::sort(bp.begin(), bp.end());
    bool ok = true;
    for (std::size_t i = 1; i < bp.size(); ++i) ok = ok && bp[i] - bp[i - 1] >= 0.05;
    if (ok) break;
  }
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(std::exp((2 * unit(rng) - 1) * std::log(K)));
  return nullctl::PiecewiseProfile(bp, v);
}

}  // namespace oracle
