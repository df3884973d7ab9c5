#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "nullctl/coefficients.hpp"

namespace nullctl {

/// Piecewise-linear function given by (knot, value) pairs with nondecreasing
/// knots.  A repeated knot encodes a jump; evaluation is right-continuous
/// there and left-continuous at the last knot.
class Tabulated {
 public:
  Tabulated() = default;
  Tabulated(std::vector<double> knots, std::vector<double> values);

  /// Exact representation of a piecewise-constant profile.
  static Tabulated from_profile(const PiecewiseProfile& profile);
  static Tabulated constant(double value, double left = 0.0, double right = 1.0);

  double operator()(double x) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return knots_.size(); }
  bool empty() const { return knots_.empty(); }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }

  double min() const;
  double max() const;

  /// Knots at which the function jumps.
  std::vector<double> jumps() const;

  /// Linear pieces overlapping [l, r]: calls piece(a, b, va, vb) for every
  /// maximal sub-interval [a, b] on which the function is linear with end
  /// values va, vb.
  template <class F>
  void for_each_piece(double l, double r, F&& piece) const;

  bool operator==(const Tabulated&) const = default;

 private:
  std::size_t segment_of(double x) const;

  std::vector<double> knots_;
  std::vector<double> values_;
};

template <class F>
void Tabulated::for_each_piece(double l, double r, F&& piece) const {
  if (!(l < r) || knots_.size() < 2) return;
  std::size_t s = segment_of(l);
  for (; s + 1 < knots_.size(); ++s) {
    const double k0 = knots_[s];
    const double k1 = knots_[s + 1];
    if (k0 >= r) break;
    if (k1 <= l || k1 == k0) continue;
    const double a = std::max(l, k0);
    const double b = std::min(r, k1);
    if (!(b > a)) continue;
    const double slope = (values_[s + 1] - values_[s]) / (k1 - k0);
    piece(a, b, values_[s] + slope * (a - k0), values_[s] + slope * (b - k0));
  }
}

}  // namespace nullctl
