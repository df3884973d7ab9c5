#pragma once

#include <array>
#include <cstddef>

#include <boost/math/quadrature/gauss.hpp>

namespace nullctl {

/// Full Gauss–Legendre rule on [-1, 1], unpacked from Boost's half-rule storage.
template <std::size_t Points>
struct GaussRule {
  std::array<double, Points> nodes{};
  std::array<double, Points> weights{};

  GaussRule() {
    using Half = boost::math::quadrature::gauss<double, Points>;
    const auto& abscissa = Half::abscissa();
    const auto& weight = Half::weights();
    std::size_t next = 0;
    // Boost stores the nonnegative half; an odd rule starts with the midpoint.
    constexpr std::size_t first = Points % 2;
    if constexpr (Points % 2 == 1) {
      nodes[next] = 0.0;
      weights[next] = weight[0];
      ++next;
    }
    for (std::size_t i = first; i < abscissa.size(); ++i) {
      nodes[next] = -abscissa[i];
      weights[next] = weight[i];
      ++next;
      nodes[next] = abscissa[i];
      weights[next] = weight[i];
      ++next;
    }
  }

  static const GaussRule& get() {
    static const GaussRule rule;
    return rule;
  }

  /// Integrate f over [l, r].
  template <class F>
  double integrate(F&& f, double l, double r) const {
    const double half = 0.5 * (r - l);
    const double mid = 0.5 * (r + l);
    double sum = 0.0;
    for (std::size_t i = 0; i < Points; ++i) sum += weights[i] * f(mid + half * nodes[i]);
    return half * sum;
  }
};

}  // namespace nullctl
