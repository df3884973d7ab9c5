#pragma once

// The lift  u(x, y) = sum a_k e_k(x) cosh(lambda_k y)  solves
//   div(diag(1, rho) grad u) = 0,  u_y(x, 0) = 0
// on the strip, with e_k and rho extended (odd, even) with period 2 in x.
// Its stream function  v = sum a_k e_k'(x) sinh(lambda_k y) / lambda_k
// satisfies  v_x = -rho u_y,  v_y = u_x,  v(x, 0) = 0.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "nullctl/coefficients.hpp"
#include "nullctl/eigensolver.hpp"

namespace nullctl {

/// Uniform grid on [-1, 1] x [-Y, Y].
struct LiftGrid {
  std::vector<double> x;
  std::vector<double> y;

  static LiftGrid uniform(std::size_t nx = 1025, std::size_t ny = 1025, double Y = 1.0);
};

struct LiftField {
  LiftGrid grid;
  Eigen::MatrixXd u;  // x index by y index
  Eigen::MatrixXd v;
  double mu = 0.0;
  Eigen::VectorXd coeffs;
  std::shared_ptr<const EigenBasis> basis;
};

/// Throws PreconditionError when a coefficient belongs to a mode above mu.
LiftField eval_lift(std::shared_ptr<const EigenBasis> basis, const Eigen::VectorXd& coeffs, double mu,
                    const LiftGrid& grid);

/// max over bilinear tents of half-width H on a lattice inside the grid of
/// |int int u_x phi_x + rho u_y phi_y| / (|u|_L2 |grad phi|_L2), with the
/// integrals of the closed-form lift evaluated exactly in y.
double weak_residual(const LiftField& field, double H = 0.125);

struct StreamResidual {
  double x_relation = 0.0;  // mean |v_x + rho u_y| / mean |grad u|
  double y_relation = 0.0;  // mean |v_y - u_x| / mean |grad u|
  double max_trace = 0.0;   // max |v(x, 0)|
};

/// Central differences on the grid.
StreamResidual stream_residual(const LiftField& field);

struct GrowthOptions {
  std::size_t nx = 1025;
  std::size_t ny = 1025;
  double Y = 1.0;
};

struct GrowthRow {
  double mu;
  std::size_t trial;
  double r;
  double sup_norm;
};

struct GrowthReport {
  double center = 0.0;
  double delta = 0.0;
  std::vector<double> radii;  // ascending: delta/2 and dyadic radii up to 1
  std::vector<GrowthRow> rows;
  std::vector<double> ratio_mu;  // per (mu, trial): |u|_{B_1} / |u|_{B_{delta/2}}
  std::vector<double> log_ratios;
  double fit_slope = 0.0;
  double fit_intercept = 0.0;
  double max_residual = 0.0;
  bool monotone = true;                 // m(r) nondecreasing for every trial
  std::size_t convexity_violations = 0; // log m not convex in log r
  std::size_t convexity_checks = 0;
  std::size_t skipped = 0;              // identically zero trials
};

/// Sup norms of random lifts over Euclidean balls centered at (center of the
/// largest interval of omega, 0).
GrowthReport growth_report(const EigenBasis& basis, const ControlRegion& omega, const std::vector<double>& mu_samples,
                           std::size_t trials, std::uint64_t seed, const GrowthOptions& options = {});

struct CauchyRow {
  std::size_t trial;
  double r;
  double lhs;    // |u|_{L^inf(B_{r/2})}
  double trace;  // |u(., 0)|_{L^2(-r, r)} about the center
  double upper;  // |u|_{L^inf(B_{4r})}
};

struct CauchyReport {
  std::vector<CauchyRow> rows;
  double theta = 0.0;  // regression slope clipped to [0.01, 0.99]
  double C = 0.0;      // max of (lhs/upper) / (trace/(sqrt(r) upper))^theta
  std::size_t violations = 0;
  std::size_t excluded = 0;  // zero traces
};

/// lhs <= C (trace / sqrt(r))^theta upper^{1-theta} over random unit
/// combinations of the first `modes` modes; trial t uses seed + t.
CauchyReport cauchy_data_report(const EigenBasis& basis, const ControlRegion& omega, std::size_t trials,
                                const std::vector<double>& r_grid, std::uint64_t seed, std::size_t modes = 10,
                                const GrowthOptions& options = {});

/// Fit of a Cauchy report's rows (also used to refit merged batches).
void fit_cauchy(CauchyReport& report);

}  // namespace nullctl
