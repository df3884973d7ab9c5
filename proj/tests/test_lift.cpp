#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nullctl/errors.hpp"
#include "nullctl/lift.hpp"

using namespace nullctl;

constexpr double kPi = std::numbers::pi;

namespace {

std::shared_ptr<const EigenBasis> rough_basis() {
  static const auto b = std::make_shared<const EigenBasis>(
      solve_basis(Tabulated::from_profile(PiecewiseProfile({0, 0.3, 1}, {1, 2})), 30, Mesh(2000)));
  return b;
}

}  // namespace

TEST_CASE("single unit-density mode is sqrt2 sin(pi x) cosh(pi y)") {
  auto b = std::make_shared<const EigenBasis>(exact_sine_basis(3, Mesh(2000)));
  Eigen::VectorXd a(1);
  a << 1.0;
  const auto f = eval_lift(b, a, 4.0, LiftGrid::uniform(65, 65));
  for (Eigen::Index i = 0; i < 65; i += 8)
    for (Eigen::Index j = 0; j < 65; j += 8) {
      const double x = f.grid.x[i], y = f.grid.y[j];
      CHECK(f.u(i, j) == doctest::Approx(std::sqrt(2.0) * std::sin(kPi * x) * std::cosh(kPi * y)).epsilon(1e-9));
    }
  CHECK(weak_residual(f) <= 1e-10);
}

TEST_CASE("parity, trace and stream normalization") {
  Eigen::VectorXd a(3);
  a << 0.3, -0.5, 0.8;
  const auto f = eval_lift(rough_basis(), a, 20.0, LiftGrid::uniform(129, 129));
  const Eigen::Index ny = 129, mid = 64;
  REQUIRE(f.grid.y[mid] == 0.0);
  for (Eigen::Index i = 0; i < 129; ++i) {
    CHECK(f.v(i, mid) == 0.0);
    double trace = 0.0;
    const double r = wrap_period_two(f.grid.x[i]);
    for (int k = 0; k < 3; ++k) trace += a[k] * (r < 0 ? -1.0 : 1.0) * rough_basis()->value(k, std::abs(r));
    CHECK(f.u(i, mid) == doctest::Approx(trace).epsilon(1e-12));
    for (Eigen::Index j = 0; j < ny; ++j) {
      CHECK(f.u(i, j) == f.u(i, ny - 1 - j));
      CHECK(f.v(i, j) == -f.v(i, ny - 1 - j));
    }
  }
}

TEST_CASE("stream residual decreases under refinement") {
  Eigen::VectorXd a(3);
  a << 0.3, -0.5, 0.8;
  double prev = 1e300;
  for (std::size_t n : {65, 129, 257}) {
    const auto s = stream_residual(eval_lift(rough_basis(), a, 20.0, LiftGrid::uniform(n, n)));
    const double r = std::max(s.x_relation, s.y_relation);
    CHECK(r < 0.55 * prev);
    CHECK(s.max_trace == 0.0);
    prev = r;
  }
}

TEST_CASE("zero coefficients and coefficients above the cutoff") {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  const auto f = eval_lift(rough_basis(), z, 20.0, LiftGrid::uniform(33, 33));
  CHECK(weak_residual(f) == 0.0);
  CHECK_THROWS_AS(eval_lift(rough_basis(), Eigen::VectorXd::Ones(20), 5.0, LiftGrid::uniform(33, 33)),
                  PreconditionError);
}

TEST_CASE("growth report: nested sup norms and the skipped path") {
  const ControlRegion omega({{0.3, 0.5}});
  const auto gr = growth_report(*rough_basis(), omega, {1.0, 3 * kPi, 6 * kPi}, 3, 11, {257, 257, 1.0});
  CHECK(gr.skipped == 3);  // mu = 1 lies below the first wavenumber
  CHECK(gr.monotone);
  CHECK(gr.center == doctest::Approx(0.4));
  CHECK(gr.delta == doctest::Approx(0.1));
  CHECK(gr.radii.front() == doctest::Approx(0.05));
  CHECK(gr.radii.back() == doctest::Approx(1.0));
  CHECK(gr.ratio_mu.size() == 6);
  for (double l : gr.log_ratios) CHECK(l >= 0.0);
  CHECK(std::isfinite(gr.fit_slope));
}

TEST_CASE("growth of a single mode stays below the cosh bound") {
  // |u| on B_1 is at most sqrt2 cosh(pi) while |u| on B_{delta/2} is at least
  // the value at the center.
  auto b = std::make_shared<const EigenBasis>(exact_sine_basis(3, Mesh(2000)));
  const auto gr = growth_report(*b, ControlRegion({{0.3, 0.5}}), {kPi}, 1, 0, {513, 513, 1.0});
  REQUIRE(gr.log_ratios.size() == 1);
  CHECK(gr.log_ratios[0] <= std::log(std::cosh(kPi) / std::sin(0.4 * kPi)) + 1e-12);
}

TEST_CASE("cauchy report: fitted inequality holds on every row") {
  const std::vector<double> r{1.0 / 16, 1.0 / 8, 1.0 / 4};
  auto rep = cauchy_data_report(*rough_basis(), ControlRegion({{0.3, 0.5}}), 20, r, 5, 10, {257, 257, 1.0});
  CHECK(rep.rows.size() == 60);
  CHECK(rep.theta > 0.0);
  CHECK(rep.theta < 1.0);
  CHECK(std::isfinite(rep.C));
  CHECK(rep.violations == 0);
  for (const auto& row : rep.rows)
    CHECK(row.lhs <= rep.C * std::pow(row.trace / std::sqrt(row.r), rep.theta) *
                         std::pow(row.upper, 1 - rep.theta) * (1 + 1e-10));
  CHECK_THROWS_AS(cauchy_data_report(*rough_basis(), ControlRegion({{0.3, 0.5}}), 2, {0.5}, 0), PreconditionError);
}

TEST_CASE("cauchy report: identically zero traces are excluded and counted") {
  auto b = exact_sine_basis(12, Mesh(200));
  b.eigvecs.setZero();
  b.slopes.setZero();
  const auto rep = cauchy_data_report(b, ControlRegion({{0.3, 0.5}}), 4, {0.125, 0.25}, 0, 10, {65, 65, 1.0});
  CHECK(rep.rows.empty());
  CHECK(rep.excluded == 8);
}
