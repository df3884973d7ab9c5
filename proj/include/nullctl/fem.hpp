#pragma once

// P1 finite elements on a uniform partition of [0, 1], assembled for any
// scalar type so the same matrices serve double and multiprecision solves.

#include <array>
#include <cstddef>

#include "nullctl/tabulated.hpp"
#include "nullctl/tridiagonal.hpp"

namespace nullctl {

/// int_a^b rho f g for linear rho, f, g given by their end values.
template <class Scalar>
Scalar triple_linear(const Scalar& len, const Scalar& ra, const Scalar& rb, const Scalar& fa, const Scalar& fb,
                     const Scalar& ga, const Scalar& gb) {
  return len / 12 * (ra * (3 * fa * ga + fa * gb + fb * ga + fb * gb) + rb * (fa * ga + fa * gb + fb * ga + 3 * fb * gb));
}

/// Interior stiffness (1/h)[-1 2 -1] on n cells; size n - 1.
template <class Scalar>
Tridiagonal<Scalar> p1_stiffness(std::size_t n) {
  Tridiagonal<Scalar> K(n - 1);
  const Scalar inv_h = Scalar(n);
  for (auto& d : K.diag) d = 2 * inv_h;
  for (auto& u : K.upper) u = -inv_h;
  for (auto& l : K.lower) l = -inv_h;
  return K;
}

/// Local 2x2 weighted mass of cell i: {m00, m01, m11}, exact for piecewise-linear rho.
template <class Scalar>
std::array<Scalar, 3> p1_cell_mass(const Tabulated& rho, std::size_t n, std::size_t i) {
  const Scalar xl = Scalar(i) / Scalar(n);
  const Scalar h = Scalar(1) / Scalar(n);
  std::array<Scalar, 3> m{Scalar(0), Scalar(0), Scalar(0)};
  const double dl = static_cast<double>(i) / static_cast<double>(n);
  const double dr = static_cast<double>(i + 1) / static_cast<double>(n);
  rho.for_each_piece(dl, dr, [&](double a, double b, double va, double vb) {
    const Scalar sa = (Scalar(a) - xl) / h;
    const Scalar sb = (Scalar(b) - xl) / h;
    const Scalar len = Scalar(b) - Scalar(a);
    const Scalar ra(va), rb(vb);
    const Scalar la = 1 - sa, lb = 1 - sb;
    m[0] += triple_linear<Scalar>(len, ra, rb, la, lb, la, lb);
    m[1] += triple_linear<Scalar>(len, ra, rb, la, lb, sa, sb);
    m[2] += triple_linear<Scalar>(len, ra, rb, sa, sb, sa, sb);
  });
  return m;
}

/// Interior rho-weighted consistent mass on n cells; size n - 1.
template <class Scalar>
Tridiagonal<Scalar> p1_mass(const Tabulated& rho, std::size_t n) {
  Tridiagonal<Scalar> M(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = p1_cell_mass<Scalar>(rho, n, i);
    if (i >= 1) M.diag[i - 1] += m[0];
    if (i + 1 <= n - 1) M.diag[i] += m[2];
    if (i >= 1 && i + 1 <= n - 1) {
      M.upper[i - 1] += m[1];
      M.lower[i - 1] += m[1];
    }
  }
  return M;
}

}  // namespace nullctl
