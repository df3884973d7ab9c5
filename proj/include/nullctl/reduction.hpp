#pragma once

// Reduction of the general equation
//   (a z')' + b z' + c z - rho z_t = f chi_omega
// to the canonical form  z_yy - rho~ z_t = f~ chi_omega~  on [0, 1].
//
// The chain, applied in order:
//   1. z = e^{gamma t} z1           (gamma > 0 only if c has a positive part)
//   2. z1 = w z2                    (w solves e^-B (a e^B w')' + c1 w = 0, w(0)=w(1)=1)
//   3. y = (1/L) int_0^x ds / (a w^2 e^B)
// giving  rho~ = L^2 rho a w^4 e^{2B}  and  f~ = e^{-gamma t} L^2 a w^3 e^{2B} f.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "nullctl/coefficients.hpp"
#include "nullctl/space_time.hpp"
#include "nullctl/tabulated.hpp"

namespace nullctl {

struct ReductionOptions {
  std::size_t grid_cells = 16384;
};

/// Near-uniform partition of [0, 1] into about n cells with every breakpoint
/// as a node.  Uniform nodes closer than h/2 to a breakpoint are dropped.
std::vector<double> fitted_grid(std::size_t n, std::span<const double> breakpoints);

/// B(x) = int_0^x b/a, piecewise linear with knots at the breakpoints of a, b.
Tabulated compute_B(const PiecewiseProfile& a, const PiecewiseProfile& b);

/// Solve e^-B (a e^B w')' + c w = 0, w(0) = w(1) = 1 with P1 elements.
/// Requires c <= 0; a positive part must be removed through the time shift
/// first (see shift_rate).
Tabulated solve_w(const PiecewiseProfile& a, const PiecewiseProfile& b, const PiecewiseProfile& c,
                  std::size_t grid_cells = 16384);
Tabulated solve_w_on(const PiecewiseProfile& a, const PiecewiseProfile& b, const PiecewiseProfile& c,
                     std::span<const double> grid);

/// Rate gamma of the state factor e^{gamma t} that makes c - gamma rho <= 0.
double shift_rate(const ProblemSpec& spec);
/// c - gamma rho on the common refinement of c and rho.
PiecewiseProfile shifted_c(const ProblemSpec& spec, double gamma);

struct CanonicalSystem {
  std::vector<double> x_grid;
  Tabulated B;               // over x
  Tabulated w;               // over x
  Tabulated y_of_x;          // over x
  Tabulated x_of_y;          // over y
  Tabulated rho_tilde;       // over y, jumps at images of breakpoints of a, rho
  Tabulated control_factor;  // over x: L^2 a w^3 e^{2B}
  double L = 1.0;
  double shift_rate = 0.0;
  double K = 1.0;
  double K_tilde = 1.0;            // measured bound on rho~ and on the Lipschitz constants of y
  double log_K_tilde_bound = 0.0;  // a-priori bound depending only on K (and gamma)
  ControlRegion omega{{Interval{0.3, 0.5}}};
  ControlRegion omega_tilde{{Interval{0.3, 0.5}}};

  /// e^{gamma t} w(x): z_original(x, t) = state_factor(x, t) * z_canonical(y(x), t).
  double state_factor(double x, double t) const;
  /// Canonical initial state z0(x(y)) / w(x(y)).
  double canonical_initial(const NodalFunction& z0, double y) const;
};

/// a-priori log bound for rho~ and the bi-Lipschitz constants of y(x), in terms
/// of K and the shift rate only.
double a_priori_log_K_tilde(double K, double gamma);

CanonicalSystem build_canonical(const ProblemSpec& spec, const ReductionOptions& options = {});

/// f(x, t) = e^{gamma t} f~(y(x), t) / (L^2 a w^3 e^{2B})(x).
class PulledBackControl final : public SpaceTimeControl {
 public:
  PulledBackControl(std::shared_ptr<const SpaceTimeControl> canonical, std::shared_ptr<const CanonicalSystem> system);

  double value(double x, double t) const override;
  std::vector<Interval> support() const override;
  std::vector<double> time_breaks() const override;
  std::vector<double> space_breaks() const override;

 private:
  std::shared_ptr<const SpaceTimeControl> canonical_;
  std::shared_ptr<const CanonicalSystem> system_;
};

/// f~(y, t) = e^{-gamma t} (L^2 a w^3 e^{2B})(x(y)) f(x(y), t).
class PushedForwardControl final : public SpaceTimeControl {
 public:
  PushedForwardControl(std::shared_ptr<const SpaceTimeControl> original, std::shared_ptr<const CanonicalSystem> system);

  double value(double y, double t) const override;
  std::vector<Interval> support() const override;
  std::vector<double> time_breaks() const override;
  std::vector<double> space_breaks() const override;

 private:
  std::shared_ptr<const SpaceTimeControl> original_;
  std::shared_ptr<const CanonicalSystem> system_;
};

/// Throws PreconditionError when the canonical control is not supported in omega~.
std::shared_ptr<const PulledBackControl> map_control_back(std::shared_ptr<const SpaceTimeControl> canonical,
                                                          std::shared_ptr<const CanonicalSystem> system);
std::shared_ptr<const PushedForwardControl> map_control_forward(std::shared_ptr<const SpaceTimeControl> original,
                                                                std::shared_ptr<const CanonicalSystem> system);

}  // namespace nullctl
