#include "nullctl/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nullctl/errors.hpp"
#include "nullctl/quadrature.hpp"

namespace nullctl {

PiecewiseProfile::PiecewiseProfile(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.size() < 2) throw std::invalid_argument("profile needs at least two breakpoints");
  if (values_.size() + 1 != breakpoints_.size())
    throw std::invalid_argument("profile needs exactly one value per cell");
  if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0)
    throw std::invalid_argument("profile breakpoints must start at 0 and end at 1");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] > breakpoints_[i - 1]))
      throw std::invalid_argument("profile breakpoints must be strictly increasing");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("profile values must be finite");
}

PiecewiseProfile PiecewiseProfile::constant(double value) { return PiecewiseProfile({0.0, 1.0}, {value}); }

std::size_t PiecewiseProfile::cell_of(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("profile evaluated outside [0, 1]");
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  auto cell = static_cast<std::size_t>(it - breakpoints_.begin());
  // upper_bound past the last breakpoint only happens at x = 1.
  return std::min(cell, values_.size()) - 1;
}

double PiecewiseProfile::operator()(double x) const { return values_[cell_of(x)]; }

std::vector<double> PiecewiseProfile::interior_breakpoints() const {
  return {breakpoints_.begin() + 1, breakpoints_.end() - 1};
}

double PiecewiseProfile::min() const { return *std::min_element(values_.begin(), values_.end()); }
double PiecewiseProfile::max() const { return *std::max_element(values_.begin(), values_.end()); }

double eval(const PiecewiseProfile& profile, double x) { return profile(x); }

ControlRegion::ControlRegion(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw std::invalid_argument("control region must be nonempty");
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& l, const Interval& r) { return l.left < r.left; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!(iv.left < iv.right)) throw std::invalid_argument("control interval must have left < right");
    if (iv.left < 0.0 || iv.right > 1.0) throw std::invalid_argument("control interval must lie in [0, 1]");
    if (i > 0 && iv.left < intervals_[i - 1].right)
      throw std::invalid_argument("control intervals must be disjoint");
  }
}

double ControlRegion::inradius() const { return 0.5 * largest().length(); }

const Interval& ControlRegion::largest() const {
  return *std::max_element(intervals_.begin(), intervals_.end(),
                           [](const Interval& l, const Interval& r) { return l.length() < r.length(); });
}

bool ControlRegion::contains(double x) const {
  return std::any_of(intervals_.begin(), intervals_.end(), [x](const Interval& iv) { return iv.contains(x); });
}

double ControlRegion::measure() const {
  double sum = 0.0;
  for (const auto& iv : intervals_) sum += iv.length();
  return sum;
}

std::vector<double> ControlRegion::endpoints() const {
  std::vector<double> out;
  for (const auto& iv : intervals_) {
    out.push_back(iv.left);
    out.push_back(iv.right);
  }
  return out;
}

double NodalFunction::operator()(double x) const {
  if (mesh_n == 0 || values.size() != mesh_n + 1) throw std::logic_error("nodal function is not initialized");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("nodal function evaluated outside [0, 1]");
  const double s = x * static_cast<double>(mesh_n);
  auto cell = std::min(static_cast<std::size_t>(s), mesh_n - 1);
  const double t = s - static_cast<double>(cell);
  return (1.0 - t) * values[cell] + t * values[cell + 1];
}

NodalFunction NodalFunction::sample(std::size_t mesh_n, const std::function<double(double)>& f) {
  NodalFunction out;
  out.mesh_n = mesh_n;
  out.values.resize(mesh_n + 1);
  for (std::size_t i = 0; i <= mesh_n; ++i)
    out.values[i] = f(static_cast<double>(i) / static_cast<double>(mesh_n));
  return out;
}

std::vector<double> ProblemSpec::all_breakpoints() const {
  auto pa = a.interior_breakpoints();
  auto pb = b.interior_breakpoints();
  auto pc = c.interior_breakpoints();
  auto pr = rho.interior_breakpoints();
  return merge_breakpoints({pa, pb, pc, pr});
}

std::vector<double> merge_breakpoints(std::initializer_list<std::span<const double>> lists) {
  std::vector<double> out;
  for (auto list : lists) out.insert(out.end(), list.begin(), list.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void check_two_sided(const PiecewiseProfile& p, const std::string& name, double K, ValidationReport& report) {
  for (std::size_t i = 0; i < p.cells(); ++i) {
    const double v = p.values()[i];
    const double l = p.breakpoints()[i];
    const double r = p.breakpoints()[i + 1];
    if (v < 1.0 / K) report.violations.push_back({name, i, l, r, v, name + " below K^-1"});
    if (v > K) report.violations.push_back({name, i, l, r, v, name + " above K"});
  }
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport report;
  if (!(spec.K >= 1.0)) report.violations.push_back({"K", 0, 0.0, 1.0, spec.K, "K must be at least 1"});
  const double K = std::max(spec.K, 1.0);
  check_two_sided(spec.a, "a", K, report);
  check_two_sided(spec.rho, "rho", K, report);

  // |b| + |c| is checked on the common refinement of both partitions.
  const auto& pb = spec.b.breakpoints();
  const auto& pc = spec.c.breakpoints();
  auto cuts = merge_breakpoints({pb, pc});
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    const double v = std::abs(spec.b(mid)) + std::abs(spec.c(mid));
    if (v > K) report.violations.push_back({"b+c", i, cuts[i], cuts[i + 1], v, "|b| + |c| above K"});
  }
  if (!(spec.T > 0.0)) report.violations.push_back({"T", 0, 0.0, 1.0, spec.T, "horizon T must be positive"});
  if (spec.z0.mesh_n == 0 || spec.z0.values.size() != spec.z0.mesh_n + 1)
    report.violations.push_back({"z0", 0, 0.0, 1.0, 0.0, "z0 needs mesh_n + 1 nodal values"});
  report.inradius = spec.omega.inradius();
  report.valid = report.violations.empty();
  return report;
}

double integrate(const std::function<double(double)>& integrand, double l, double r,
                 std::span<const double> breakpoints, std::size_t cells_per_unit) {
  if (!(l < r)) return 0.0;
  std::vector<double> cuts{l};
  for (double b : breakpoints)
    if (b > l && b < r) cuts.push_back(b);
  cuts.push_back(r);
  std::sort(cuts.begin(), cuts.end());
  const auto& rule = GaussRule<6>::get();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len * cells_per_unit)));
    const double step = len / static_cast<double>(pieces);
    for (std::size_t p = 0; p < pieces; ++p) {
      const double a = cuts[i] + step * static_cast<double>(p);
      const double b = (p + 1 == pieces) ? cuts[i + 1] : a + step;
      sum += rule.integrate(integrand, a, b);
    }
  }
  return sum;
}

}  // namespace nullctl
