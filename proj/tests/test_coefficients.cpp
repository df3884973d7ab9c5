#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "nullctl/coefficients.hpp"
#include "nullctl/tabulated.hpp"
#include "oracles.hpp"

using namespace nullctl;

TEST_CASE("constant problem validates with inradius 0.1") {
  ProblemSpec s;
  s.a = s.b = s.c = s.rho = PiecewiseProfile::constant(1.0);
  s.K = 2.0;  // |b| + |c| = 2
  s.z0 = NodalFunction::sample(8, [](double) { return 0.0; });
  const auto r = validate(s);
  CHECK(r.valid);
  CHECK(r.inradius == doctest::Approx(0.1));
  s.K = 1.0;
  const auto tight = validate(s);
  CHECK_FALSE(tight.valid);
  REQUIRE(tight.violations.size() == 1);
  CHECK(tight.violations[0].coefficient.find('b') != std::string::npos);
}

TEST_CASE("a zero density cell is reported with its index") {
  ProblemSpec s;
  s.rho = PiecewiseProfile({0, 0.5, 1}, {1, 0});
  s.K = 2.0;
  s.z0 = NodalFunction::sample(8, [](double) { return 0.0; });
  const auto r = validate(s);
  REQUIRE_FALSE(r.valid);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].coefficient == "rho");
  CHECK(r.violations[0].cell == 1);
  CHECK(r.violations[0].message == "rho below K^-1");
}

TEST_CASE("|b| + |c| is checked on the common refinement") {
  ProblemSpec s;
  s.b = PiecewiseProfile({0, 0.5, 1}, {1, 0});
  s.c = PiecewiseProfile({0, 0.25, 1}, {0, 1});
  s.K = 1.5;
  s.z0 = NodalFunction::sample(8, [](double) { return 0.0; });
  const auto r = validate(s);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].left == 0.25);
  CHECK(r.violations[0].right == 0.5);
}

TEST_CASE("inradius comes from the largest interval") {
  const ControlRegion omega({{0.6, 0.7}, {0.2, 0.4}});
  CHECK(omega.inradius() == doctest::Approx(0.1));
  CHECK(omega.largest().left == 0.2);
  CHECK(omega.intervals().front().left == 0.2);  // sorted
  CHECK(omega.measure() == doctest::Approx(0.3));
}

TEST_CASE("control region rejects overlap, empty and out-of-range intervals") {
  CHECK_THROWS_AS(ControlRegion({}), std::invalid_argument);
  CHECK_THROWS_AS(ControlRegion({{0.2, 0.5}, {0.4, 0.6}}), std::invalid_argument);
  CHECK_THROWS_AS(ControlRegion({{0.5, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(ControlRegion({{-0.1, 0.5}}), std::invalid_argument);
}

TEST_CASE("profile evaluation is right-continuous and left-continuous at 1") {
  const PiecewiseProfile p({0, 0.5, 1}, {1, 2});
  CHECK(eval(p, 0.25) == 1.0);
  CHECK(eval(p, 0.5) == 2.0);
  CHECK(eval(p, 1.0) == 2.0);
  CHECK(eval(p, 0.0) == 1.0);
  CHECK_THROWS_AS(eval(p, 1.0001), std::domain_error);
  CHECK_THROWS_AS(eval(p, -1e-9), std::domain_error);
}

TEST_CASE("profile construction enforces its invariants") {
  CHECK_THROWS_AS(PiecewiseProfile({0, 1}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseProfile({0.1, 1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseProfile({0, 0.5, 0.5, 1}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseProfile({0, 1}, {NAN}), std::invalid_argument);
}

TEST_CASE("integrate is exact for piecewise polynomials split at breakpoints") {
  const PiecewiseProfile p({0, 0.3, 1}, {2, 5});
  const auto bp = p.interior_breakpoints();
  const double got = integrate([&](double x) { return p(x) * x * x * x; }, 0.0, 1.0, bp, 1);
  const double want = 2 * std::pow(0.3, 4) / 4 + 5 * (1 - std::pow(0.3, 4)) / 4;
  CHECK(got == doctest::Approx(want).epsilon(1e-14));
  CHECK(integrate([](double) { return 1.0; }, 0.5, 0.5) == 0.0);
}

TEST_CASE("property: integrate of a random profile equals its cell sum") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto p = oracle::random_profile(seed, 4.0);
    double want = 0.0;
    for (std::size_t i = 0; i < p.cells(); ++i) want += p.values()[i] * (p.breakpoints()[i + 1] - p.breakpoints()[i]);
    const auto bp = p.interior_breakpoints();
    CHECK(integrate([&](double x) { return p(x); }, 0.0, 1.0, bp) == doctest::Approx(want).epsilon(1e-13));
    CHECK(p.min() >= 0.25);
    CHECK(p.max() <= 4.0);
  }
}

TEST_CASE("nodal function interpolates linearly") {
  const auto f = NodalFunction::sample(4, [](double x) { return x * x; });
  CHECK(f(0.25) == doctest::Approx(0.0625));
  CHECK(f(0.125) == doctest::Approx(0.5 * 0.0625));
  CHECK_THROWS_AS(f(1.5), std::domain_error);
}

TEST_CASE("tabulated: a repeated knot is a right-continuous jump") {
  const Tabulated t({0, 0.5, 0.5, 1}, {0, 1, 3, 4});
  CHECK(t(0.25) == doctest::Approx(0.5));
  CHECK(t(0.5) == 3.0);
  CHECK(t(1.0) == 4.0);
  CHECK(t.jumps() == std::vector<double>{0.5});
  CHECK_THROWS_AS(t(1.5), std::domain_error);
  const auto exact = Tabulated::from_profile(PiecewiseProfile({0, 0.4, 1}, {1, 2}));
  CHECK(exact(0.39) == 1.0);
  CHECK(exact(0.4) == 2.0);
}

TEST_CASE("tabulated: pieces cover the requested range") {
  const Tabulated t({0, 0.5, 0.5, 1}, {0, 1, 3, 4});
  double covered = 0.0;
  t.for_each_piece(0.25, 0.75, [&](double a, double b, double va, double vb) {
    covered += b - a;
    CHECK(t(a) == doctest::Approx(va));
    if (b < 0.5 || a >= 0.5) CHECK(vb - va == doctest::Approx((b - a) * (b <= 0.5 ? 2.0 : 2.0)));
  });
  CHECK(covered == doctest::Approx(0.5));
}
