#pragma once

// Dirichlet eigenpairs of  e'' + lambda^2 rho e = 0  on [0, 1].

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nullctl/tabulated.hpp"

namespace nullctl {

struct Mesh {
  std::size_t n = 2;
  std::vector<double> nodes;

  explicit Mesh(std::size_t cells);
  double h() const { return 1.0 / static_cast<double>(n); }
  /// Cell containing x, clamped to [0, n - 1].
  std::size_t cell_of(double x) const;
};

/// Modes are indexed from 0; mode k has wavenumber lambdas[k] (the k+1-th).
struct EigenBasis {
  Mesh mesh{2};
  Tabulated rho;
  std::vector<double> lambdas;
  Eigen::MatrixXd eigvecs;  // (n + 1) x m nodal values, zero at both ends
  Eigen::MatrixXd slopes;   // (n + 1) x m recovered nodal derivatives

  std::size_t m() const { return lambdas.size(); }
  /// Modes with lambda <= mu.
  std::size_t count_below(double mu) const;

  /// Cubic Hermite reconstruction from nodal values and recovered slopes.
  double value(std::size_t k, double x) const;
  double slope(std::size_t k, double x) const;
  /// Values of modes 0..out.size()-1 at x.
  void values_at(double x, std::span<double> out) const;
  void slopes_at(double x, std::span<double> out) const;
};

/// Lowest m eigenpairs by P1 elements (stiffness against rho-weighted
/// consistent mass), rho-orthonormal with e_k'(0) > 0.  Refuses m > n/10.
EigenBasis solve_basis(const Tabulated& rho, std::size_t m, const Mesh& mesh);

/// Exact pairs for rho = 1: lambda_k = k pi, e_k = sqrt(2) sin(k pi x).
EigenBasis exact_sine_basis(std::size_t m, const Mesh& mesh);

struct OrthonormalityReport {
  double max_offdiag = 0.0;
  double max_diag_dev = 0.0;
  double max_deviation = 0.0;
};

/// max |int rho e_j e_k - delta_jk| of the nodal interpolants.
OrthonormalityReport check_orthonormality(const EigenBasis& basis);

/// rho-weighted coefficients of f against every mode.
Eigen::VectorXd project(const EigenBasis& basis, const std::function<double(double)>& f);

/// Odd reflection in 0 and period 2.
double extend_odd_periodic(const EigenBasis& basis, std::size_t k, double x);
/// Derivative of the odd periodic extension (even, period 2).
double extend_odd_periodic_slope(const EigenBasis& basis, std::size_t k, double x);
/// Even reflection in 0 and period 2.
double extend_even_periodic(const Tabulated& rho, double x);

/// Map x to (-1, 1] by period 2.
double wrap_period_two(double x);

}  // namespace nullctl
