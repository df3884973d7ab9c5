#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "nullctl/coefficients.hpp"
#include "nullctl/eigensolver.hpp"
#include "nullctl/reduction.hpp"
#include "nullctl/space_time.hpp"

namespace nullctl {

/// States at the output times: mode coefficients (modal) or nodal values on x.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> norms;  // rho-weighted L2
  std::vector<double> x;      // nodes of a nodal trajectory; empty when modal
  bool modal = true;
};

/// Output times: 0, every multiple of `spacing` below T, and T.
std::vector<double> output_grid(double T, double spacing);

/// Exponential integrator for z_j' = -lambda_j^2 z_j - int f e_j on the
/// first N modes.  The forcing is projected by Gauss quadrature on the
/// control support and integrated over geometrically graded time panels.
Trajectory spectral_simulate(const EigenBasis& basis, const Eigen::VectorXd& z0, const SpaceTimeControl& control,
                             const std::vector<double>& output_times, std::size_t N = 0);

struct CrankNicolsonOptions {
  bool rannacher = true;        // first two steps as four backward Euler half steps
  bool check_energy = true;     // assert dissipation when it is guaranteed
};

/// P1 elements on the breakpoint-fitted mesh of about n cells, implicit
/// midpoint in time with the step grid aligned to output and control break
/// times.  The advection term is skew-symmetrized.
Trajectory crank_nicolson_simulate(const ProblemSpec& spec, const SpaceTimeControl& control, std::size_t n, double dt,
                                   const std::vector<double>& output_times,
                                   const std::function<double(double)>& z0 = {},
                                   const CrankNicolsonOptions& options = {});

/// rho-weighted L2 norm of a nodal state of a trajectory on the fitted mesh.
double nodal_norm(const ProblemSpec& spec, const std::vector<double>& x, const Eigen::VectorXd& z);

struct CrossValidation {
  std::vector<double> times;  // output times t > 0
  std::vector<double> discrepancy;
  double sup_discrepancy = 0.0;
  double initial_norm = 0.0;  // of z0 in the original coordinates
  double terminal_norm_original = 0.0;
  double terminal_norm_mapped = 0.0;
  Trajectory original;
  Trajectory canonical;
};

/// Simulate the canonical system spectrally and the original one by
/// Crank–Nicolson under the pulled-back control, and compare in original
/// coordinates z = e^{gamma t} w(x) z~(y(x), t).
CrossValidation cross_validate(const ProblemSpec& spec, std::shared_ptr<const CanonicalSystem> system,
                               const EigenBasis& basis, const std::function<double(double)>& z0,
                               std::shared_ptr<const SpaceTimeControl> canonical_control, std::size_t n, double dt,
                               const std::vector<double>& output_times, std::size_t N = 0);

/// Canonical-coordinate state mapped to x.
double mapped_state(const CanonicalSystem& system, const EigenBasis& basis, const Eigen::VectorXd& modes, double x,
                    double t);

}  // namespace nullctl
