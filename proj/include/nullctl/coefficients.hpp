#pragma once

// Piecewise-constant coefficient profiles on [0, 1], the problem description
// they live in, and cell-exact composite quadrature.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nullctl {

/// Piecewise-constant function on [0, 1].  Right-continuous at interior
/// breakpoints and left-continuous at x = 1.
class PiecewiseProfile {
 public:
  PiecewiseProfile(std::vector<double> breakpoints, std::vector<double> values);

  static PiecewiseProfile constant(double value);

  double operator()(double x) const;
  std::size_t cell_of(double x) const;

  std::size_t cells() const { return values_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  /// Breakpoints strictly inside (0, 1).
  std::vector<double> interior_breakpoints() const;

  double min() const;
  double max() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

double eval(const PiecewiseProfile& profile, double x);

struct Interval {
  double left = 0.0;
  double right = 0.0;

  double length() const { return right - left; }
  double center() const { return 0.5 * (left + right); }
  bool contains(double x) const { return x > left && x < right; }
};

/// Finite union of disjoint open subintervals of (0, 1), kept sorted.
class ControlRegion {
 public:
  explicit ControlRegion(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const { return intervals_; }
  /// Largest half-length over the intervals.
  double inradius() const;
  /// Interval realizing the inradius (first one on ties).
  const Interval& largest() const;
  bool contains(double x) const;
  double measure() const;
  /// Every interval endpoint, ascending.
  std::vector<double> endpoints() const;

 private:
  std::vector<Interval> intervals_;
};

/// Nodal values on the uniform partition of [0, 1] into mesh_n cells,
/// evaluated by linear interpolation.
struct NodalFunction {
  std::size_t mesh_n = 0;
  std::vector<double> values;

  double operator()(double x) const;
  static NodalFunction sample(std::size_t mesh_n, const std::function<double(double)>& f);
};

struct ProblemSpec {
  PiecewiseProfile a = PiecewiseProfile::constant(1.0);
  PiecewiseProfile b = PiecewiseProfile::constant(0.0);
  PiecewiseProfile c = PiecewiseProfile::constant(0.0);
  PiecewiseProfile rho = PiecewiseProfile::constant(1.0);
  double K = 1.0;
  ControlRegion omega{{Interval{0.3, 0.5}}};
  double T = 1.0;
  NodalFunction z0;

  /// Sorted union of the interior breakpoints of a, b, c and rho.
  std::vector<double> all_breakpoints() const;
};

struct BoundViolation {
  std::string coefficient;
  std::size_t cell = 0;
  double left = 0.0;
  double right = 0.0;
  double value = 0.0;
  std::string message;
};

struct ValidationReport {
  bool valid = true;
  std::vector<BoundViolation> violations;
  double inradius = 0.0;
};

/// Check every ellipticity/boundedness bound cell by cell.  Never throws.
ValidationReport validate(const ProblemSpec& spec);

/// Composite Gauss–Legendre (6 points) over [l, r], split at every supplied
/// breakpoint and further into at least `cells_per_unit` uniform cells per
/// unit length.  Exact for polynomials of degree 11 on each piece.
double integrate(const std::function<double(double)>& integrand, double l, double r,
                 std::span<const double> breakpoints = {}, std::size_t cells_per_unit = 64);

/// Sorted union of several breakpoint lists with duplicates removed.
std::vector<double> merge_breakpoints(std::initializer_list<std::span<const double>> lists);

}  // namespace nullctl
