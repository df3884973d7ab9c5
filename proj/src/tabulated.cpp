#include "nullctl/tabulated.hpp"

#include <algorithm>
#include <stdexcept>

namespace nullctl {

Tabulated::Tabulated(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size()) throw std::invalid_argument("tabulated: knots and values differ in length");
  if (knots_.size() < 2) throw std::invalid_argument("tabulated: need at least two knots");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (knots_[i] < knots_[i - 1]) throw std::invalid_argument("tabulated: knots must be nondecreasing");
  if (!(knots_.back() > knots_.front())) throw std::invalid_argument("tabulated: empty support");
}

Tabulated Tabulated::from_profile(const PiecewiseProfile& profile) {
  std::vector<double> knots;
  std::vector<double> values;
  const auto& bp = profile.breakpoints();
  for (std::size_t c = 0; c < profile.cells(); ++c) {
    knots.push_back(bp[c]);
    values.push_back(profile.values()[c]);
    knots.push_back(bp[c + 1]);
    values.push_back(profile.values()[c]);
  }
  return {std::move(knots), std::move(values)};
}

Tabulated Tabulated::constant(double value, double left, double right) {
  return {{left, right}, {value, value}};
}

std::size_t Tabulated::segment_of(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin()) return 0;
  auto s = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::min(s, knots_.size() - 2);
}

double Tabulated::operator()(double x) const {
  if (x < knots_.front() || x > knots_.back()) throw std::domain_error("tabulated: argument outside the table");
  if (x == knots_.back()) return values_.back();
  const std::size_t s = segment_of(x);
  const double k0 = knots_[s];
  const double k1 = knots_[s + 1];
  if (k1 == k0) return values_[s + 1];
  const double t = (x - k0) / (k1 - k0);
  return values_[s] + t * (values_[s + 1] - values_[s]);
}

double Tabulated::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Tabulated::max() const { return *std::max_element(values_.begin(), values_.end()); }

std::vector<double> Tabulated::jumps() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (knots_[i] == knots_[i - 1] && values_[i] != values_[i - 1]) out.push_back(knots_[i]);
  return out;
}

}  // namespace nullctl
