#pragma once

// Observability ratios  sup_a  sum a_k^2 / int_omega |sum a_k e_k|^2  over the
// modes with lambda_k <= mu, and their exponential-in-mu fit.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "nullctl/coefficients.hpp"
#include "nullctl/eigensolver.hpp"

namespace nullctl {

/// G[j, k] = int_omega e_j e_k (unweighted) for the modes with lambda <= mu,
/// from the nodal interpolants.  Throws PreconditionError if no mode lies below mu.
Eigen::MatrixXd gram_on_region(const EigenBasis& basis, const ControlRegion& omega, double mu);

struct ObservabilityOptions {
  unsigned start_digits = 40;
  unsigned max_digits = 1280;
};

struct ObservabilityReport {
  std::vector<double> mu_grid;
  std::vector<std::size_t> mode_counts;
  std::vector<double> lambda_min;  // smallest Gram eigenvalue; 0 for an empty mode set
  std::vector<double> ratios;      // 1 / lambda_min; 0 marks an empty mode set, +inf a sentinel
  std::vector<double> log_ratios;
  std::vector<bool> sentinel;
  unsigned digits = 0;  // working precision that resolved every ratio
};

/// Exact ratios 1 / lambda_min(G(mu)).  The eigenvectors are refined and the
/// Gram matrix factored in multiprecision; the precision doubles until
/// lambda_min clears 1e-14 (eps / eps_double) lambda_max for every mu or
/// max_digits is reached, after which the remaining points are sentinels.
ObservabilityReport observability_curve(const EigenBasis& basis, const ControlRegion& omega,
                                        const std::vector<double>& mu_grid, const ObservabilityOptions& options = {});

/// Multiples of pi up to half of the largest resolved wavenumber.
std::vector<double> default_mu_grid(const EigenBasis& basis);

struct FitResult {
  double slope = 0.0;      // beta in log ratio ~ alpha + beta mu
  double intercept = 0.0;  // alpha
  double N_hat = 0.0;      // max(beta, e^alpha)
  double N_certified = 0.0;  // smallest N with ratio <= N e^{N mu} at every point
  double max_positive_residual = 0.0;
  double fitted_range = 0.0;
  bool super_exponential_flag = false;  // residual above 15% of the fitted range
  std::size_t points = 0;
};

/// Least squares on the points with a nonempty mode set.  Throws
/// NumericalError when a sentinel is present.
FitResult fit_constant(const ObservabilityReport& report);

/// a.a / a^T G a.
double sample_ratio(const Eigen::MatrixXd& G, const Eigen::VectorXd& a);

/// Largest sample_ratio over `trials` Gaussian directions, seed-pinned.
double random_coefficient_check(const EigenBasis& basis, const ControlRegion& omega, double mu, std::size_t trials,
                                std::uint64_t seed);

}  // namespace nullctl
