#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nullctl {

/// Tridiagonal matrix stored by diagonals: lower[i] = A(i+1, i),
/// diag[i] = A(i, i), upper[i] = A(i, i+1).
template <class Scalar>
struct Tridiagonal {
  std::vector<Scalar> lower;
  std::vector<Scalar> diag;
  std::vector<Scalar> upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n > 0 ? n - 1 : 0), diag(n), upper(n > 0 ? n - 1 : 0) {}

  std::size_t size() const { return diag.size(); }

  std::vector<Scalar> apply(const std::vector<Scalar>& x) const {
    const std::size_t n = size();
    std::vector<Scalar> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      Scalar s = diag[i] * x[i];
      if (i > 0) s += lower[i - 1] * x[i - 1];
      if (i + 1 < n) s += upper[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }
};

/// A + s B for tridiagonal A, B of equal size.
template <class Scalar>
Tridiagonal<Scalar> combine(const Tridiagonal<Scalar>& A, const Scalar& s, const Tridiagonal<Scalar>& B) {
  Tridiagonal<Scalar> C(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) C.diag[i] = A.diag[i] + s * B.diag[i];
  for (std::size_t i = 0; i + 1 < A.size(); ++i) {
    C.lower[i] = A.lower[i] + s * B.lower[i];
    C.upper[i] = A.upper[i] + s * B.upper[i];
  }
  return C;
}

/// LU factorization with partial pivoting (LAPACK gttrf layout: one extra
/// superdiagonal of fill).  Handles the nearly singular shifted systems of
/// inverse iteration.
template <class Scalar>
class TridiagonalLU {
 public:
  explicit TridiagonalLU(const Tridiagonal<Scalar>& A)
      : dl_(A.lower), d_(A.diag), du_(A.upper), du2_(A.size() > 2 ? A.size() - 2 : 0), swapped_(A.size(), false) {
    using std::abs;
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (abs(d_[i]) >= abs(dl_[i])) {
        if (d_[i] == Scalar(0)) d_[i] = tiny(abs(du_[i]) + abs(dl_[i]));
        const Scalar f = dl_[i] / d_[i];
        dl_[i] = f;
        d_[i + 1] -= f * du_[i];
        if (i + 2 < n) du2_[i] = Scalar(0);
      } else {
        const Scalar f = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = f;
        const Scalar temp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = temp - f * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -f * du_[i + 1];
        }
        swapped_[i] = true;
      }
    }
    if (n > 0 && d_[n - 1] == Scalar(0)) d_[n - 1] = tiny(Scalar(1));
  }

  std::vector<Scalar> solve(std::vector<Scalar> b) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swapped_[i]) {
        const Scalar temp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = temp - dl_[i] * b[i];
      } else {
        b[i + 1] -= dl_[i] * b[i];
      }
    }
    if (n == 0) return b;
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) b[k] = (b[k] - du_[k] * b[k + 1] - du2_[k] * b[k + 2]) / d_[k];
    return b;
  }

 private:
  static Scalar tiny(const Scalar& scale) {
    using std::abs;
    Scalar s = abs(scale);
    if (s == Scalar(0)) s = Scalar(1);
    return s * Scalar(1e-300);
  }

  std::vector<Scalar> dl_, d_, du_, du2_;
  std::vector<bool> swapped_;
};

/// Thomas algorithm without pivoting; for diagonally dominant or SPD systems.
template <class Scalar>
std::vector<Scalar> solve_thomas(const Tridiagonal<Scalar>& A, std::vector<Scalar> b) {
  const std::size_t n = A.size();
  std::vector<Scalar> c(n);
  Scalar denom = A.diag[0];
  if (denom == Scalar(0)) throw std::runtime_error("tridiagonal solve: zero pivot");
  if (n > 1) c[0] = A.upper[0] / denom;
  b[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = A.diag[i] - A.lower[i - 1] * c[i - 1];
    if (denom == Scalar(0)) throw std::runtime_error("tridiagonal solve: zero pivot");
    if (i + 1 < n) c[i] = A.upper[i] / denom;
    b[i] = (b[i] - A.lower[i - 1] * b[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) b[i] -= c[i] * b[i + 1];
  return b;
}

}  // namespace nullctl
