#pragma once

// Lebeau–Robbiano synthesis for  z_yy - rho z_t = f chi_omega  in mode space:
//   z_j' = -lambda_j^2 z_j - sum_k Bmat[j, k] g_k,   f = sum_k g_k eta e_k.
// Slice j steers the modes below mu_j = 2^j mu_0 to zero on its active half
// by minimal-norm control and lets everything decay on its passive half.

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <vector>

#include "nullctl/coefficients.hpp"
#include "nullctl/eigensolver.hpp"
#include "nullctl/space_time.hpp"

namespace nullctl {

struct Slice {
  double t_start = 0.0;
  double active = 0.0;
  double passive = 0.0;
  double mu = 0.0;
  std::size_t modes = 0;
};

struct SlicePlan {
  std::vector<Slice> slices;
  double T = 1.0;
  double mu0 = 0.0;
  double tol = 0.0;
  std::size_t N_max = 0;
  double predicted_bound = 1.0;  // e^{-mu^2 passive} of the last slice
};

/// mu_j = 2^j mu0 over slices of length T 2^{-j-1}, half active and half
/// passive, until e^{-mu_j^2 passive_j} < tol.  lambdas are the resolved
/// wavenumbers; a slice needing more than N_max/2 modes refuses the plan.
SlicePlan make_plan(double T, double mu0, double tol, const std::vector<double>& lambdas, std::size_t N_max);

enum class CutoffKind { Smooth, Indicator };

/// eta on the largest interval [l, r] of the region: C1 smoothstep from 0 at
/// l to 1 at l + (r-l)/4, flat to r - (r-l)/4, back to 0 at r.  The indicator
/// variant is 1 on the whole interval.
struct Cutoff {
  Interval support;
  CutoffKind kind = CutoffKind::Smooth;

  double operator()(double y) const;
  double derivative(double y) const;
  /// Points where eta is not polynomial.
  std::vector<double> breaks() const;
};

Cutoff make_cutoff(const ControlRegion& omega, CutoffKind kind = CutoffKind::Smooth);

struct InputOperator {
  Cutoff eta;
  Eigen::MatrixXd B;  // N_max x m: int eta e_k e_j
  Eigen::MatrixXd H;  // m x m: int eta^2 e_k e_l
};

InputOperator build_input_operator(const EigenBasis& basis, const ControlRegion& omega, std::size_t m,
                                   std::size_t N_max, CutoffKind kind = CutoffKind::Smooth);

/// (1 - e^{-(a + b) tau}) / (a + b) for a, b the squared wavenumbers.
Eigen::MatrixXd decay_kernel(const Eigen::VectorXd& lam2_rows, const Eigen::VectorXd& lam2_cols, double tau);

/// W = int_0^tau e^{-Lambda s} G e^{-Lambda s} ds in closed form.
Eigen::MatrixXd gramian(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& G, double tau);

struct SliceControl {
  Slice slice;
  Eigen::VectorXd dual;  // x with g_k(s) = sum_j Bl[j, k] e^{-lambda_j^2 (tau - s)} x_j
  Eigen::MatrixXd Bl;    // leading modes x modes block of B
  Eigen::VectorXd lam2;  // squared wavenumbers of the steered modes
  double condition = 1.0;
  double energy = 0.0;   // int int |f|^2 over the active window
  Eigen::VectorXd start_state;
  Eigen::VectorXd active_end_state;
  Eigen::VectorXd end_state;
  double steered_residual = 0.0;  // max |z_k| over steered modes at the end of the active window

  /// Time coefficient k at local time s in [0, active].
  double g(std::size_t k, double s) const;
};

/// Refuses (NumericalError) when cond(W) exceeds 1e14.
SliceControl steer_slice(const Eigen::VectorXd& state, const Slice& slice, const InputOperator& input,
                         const std::vector<double>& lambdas);

/// The synthesized control as a function of (y, t) in canonical coordinates.
class ControlField final : public SpaceTimeControl {
 public:
  ControlField(std::shared_ptr<const EigenBasis> basis, InputOperator input, std::vector<SliceControl> slices,
               SlicePlan plan);

  double value(double y, double t) const override;
  std::vector<Interval> support() const override;
  std::vector<double> time_breaks() const override;
  std::vector<double> space_breaks() const override;

  const SlicePlan& plan() const { return plan_; }
  const std::vector<SliceControl>& slices() const { return slices_; }
  const InputOperator& input() const { return input_; }
  const EigenBasis& basis() const { return *basis_; }

 private:
  std::shared_ptr<const EigenBasis> basis_;
  InputOperator input_;
  std::vector<SliceControl> slices_;
  SlicePlan plan_;
};

struct Synthesis {
  std::shared_ptr<const ControlField> control;
  std::vector<double> times;            // 0, slice boundaries, T
  std::vector<Eigen::VectorXd> states;  // mode vectors at those times
  Eigen::VectorXd final_state;
  double initial_norm = 0.0;
  double final_norm = 0.0;
  double max_steered_residual = 0.0;
  double tail_bound = 0.0;  // K~ |z0| e^{-lambda_{N_max}^2 T / 2}
  std::vector<double> energies;
};

/// z0 holds the first N_max mode coefficients.
Synthesis synthesize(const Eigen::VectorXd& z0, const SlicePlan& plan, std::shared_ptr<const EigenBasis> basis,
                     const ControlRegion& omega, double K_tilde = 1.0, CutoffKind kind = CutoffKind::Smooth);

}  // namespace nullctl
