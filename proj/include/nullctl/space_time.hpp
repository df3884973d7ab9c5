#pragma once

#include <vector>

#include "nullctl/coefficients.hpp"

namespace nullctl {

/// A control f(x, t) on [0, 1] x [0, T].
class SpaceTimeControl {
 public:
  virtual ~SpaceTimeControl() = default;

  virtual double value(double x, double t) const = 0;
  /// Intervals outside of which f vanishes identically.
  virtual std::vector<Interval> support() const = 0;
  /// Times where f may jump; time steppers align their grids with them.
  virtual std::vector<double> time_breaks() const { return {}; }
  /// Points where f or its derivative may jump in space; quadrature splits there.
  virtual std::vector<double> space_breaks() const { return {}; }
};

class ZeroControl final : public SpaceTimeControl {
 public:
  double value(double, double) const override { return 0.0; }
  std::vector<Interval> support() const override { return {}; }
};

}  // namespace nullctl
