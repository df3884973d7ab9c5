#include <doctest.h>

#include <cmath>
#include <memory>

#include "nullctl/errors.hpp"
#include "nullctl/reduction.hpp"
#include "oracles.hpp"

using namespace nullctl;

namespace {

// f(x, t) = x (1 - x) (1 + t) on omega.
class Polynomial final : public SpaceTimeControl {
 public:
  explicit Polynomial(Interval iv) : iv_(iv) {}
  double value(double x, double t) const override { return iv_.contains(x) ? x * (1 - x) * (1 + t) : 0.0; }
  std::vector<Interval> support() const override { return {iv_}; }

 private:
  Interval iv_;
};

}  // namespace

TEST_CASE("fitted grid keeps every breakpoint and stays near uniform") {
  const std::vector<double> bp{0.3, 0.5};
  const auto g = fitted_grid(10, bp);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(std::find(g.begin(), g.end(), 0.3) != g.end());
  CHECK(std::find(g.begin(), g.end(), 0.5) != g.end());
  for (std::size_t i = 1; i < g.size(); ++i) {
    CHECK(g[i] > g[i - 1]);
    CHECK(g[i] - g[i - 1] >= 0.05 - 1e-15);
    CHECK(g[i] - g[i - 1] <= 0.15 + 1e-15);
  }
}

TEST_CASE("B integrates b / a exactly") {
  const PiecewiseProfile a({0, 0.5, 1}, {1, 4});
  const auto B = compute_B(a, PiecewiseProfile::constant(2.0));
  CHECK(B(0.25) == doctest::Approx(0.5));
  CHECK(B(1.0) == doctest::Approx(1.0 + 0.25));
}

TEST_CASE("w matches the constant-coefficient closed form") {
  for (auto [b, c] : {std::pair{0.0, -1.0}, std::pair{0.5, -0.5}, std::pair{-1.0, -2.0}}) {
    const auto w = solve_w(PiecewiseProfile::constant(1.0), PiecewiseProfile::constant(b), PiecewiseProfile::constant(c),
                           4096);
    for (double x : {0.1, 0.37, 0.5, 0.9}) CHECK(w(x) == doctest::Approx(oracle::w_constant(b, c, x)).epsilon(1e-6));
    CHECK(w(0.0) == 1.0);
    CHECK(w(1.0) == 1.0);
  }
}

TEST_CASE("w refuses a positive c") {
  CHECK_THROWS_AS(solve_w(PiecewiseProfile::constant(1.0), PiecewiseProfile::constant(0.0), PiecewiseProfile::constant(0.5)),
                  PreconditionError);
}

TEST_CASE("identity coefficients give the identity chain") {
  ProblemSpec s;
  const auto sys = build_canonical(s);
  CHECK(sys.shift_rate == 0.0);
  CHECK(sys.L == doctest::Approx(1.0));
  for (double x : {0.0, 0.2, 0.77, 1.0}) {
    CHECK(sys.y_of_x(x) == doctest::Approx(x));
    CHECK(sys.w(x) == doctest::Approx(1.0));
    CHECK(sys.control_factor(x) == doctest::Approx(1.0));
    CHECK(sys.rho_tilde(x) == doctest::Approx(1.0));
  }
  CHECK(sys.omega_tilde.intervals()[0].left == doctest::Approx(0.3));
  CHECK(sys.omega_tilde.intervals()[0].right == doctest::Approx(0.5));
}

TEST_CASE("divergence-form a: y, L and rho~ in closed form") {
  // b = c = 0 gives w = 1, B = 0, L = int 1/a, rho~ = L^2 rho a.
  ProblemSpec s;
  s.a = PiecewiseProfile({0, 0.5, 1}, {1, 4});
  s.rho = PiecewiseProfile({0, 0.3, 1}, {1, 2});
  s.K = 4;
  const auto sys = build_canonical(s);
  const double L = 0.5 + 0.5 / 4;
  CHECK(sys.L == doctest::Approx(L).epsilon(1e-12));
  for (double x : {0.1, 0.3, 0.45, 0.5, 0.8}) {
    const double y = oracle::y_of_x_divergence(s.a, x);
    CHECK(sys.y_of_x(x) == doctest::Approx(y).epsilon(1e-12));
    CHECK(sys.x_of_y(y) == doctest::Approx(x).epsilon(1e-12));
    CHECK(sys.rho_tilde(y) == doctest::Approx(L * L * s.rho(x) * s.a(x)).epsilon(1e-12));
  }
}

TEST_CASE("a positive c is absorbed by the time shift") {
  ProblemSpec s;
  s.c = PiecewiseProfile::constant(1.0);
  s.K = 2;
  const double gamma = shift_rate(s);
  CHECK(gamma > 0.0);
  const auto c1 = shifted_c(s, gamma);
  CHECK(c1.max() <= 0.0);
  const auto sys = build_canonical(s);
  CHECK(sys.shift_rate == gamma);
  CHECK(sys.state_factor(0.5, 1.0) == doctest::Approx(std::exp(gamma) * sys.w(0.5)));
}

TEST_CASE("property: reduction invariants over random coefficients") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    ProblemSpec s;
    s.K = 4;
    s.a = oracle::random_profile(seed, 4);
    s.rho = oracle::random_profile(seed + 100, 4);
    s.b = PiecewiseProfile({0, 0.4, 1}, {0.5, -1.0});
    s.c = PiecewiseProfile({0, 0.6, 1}, {-1.0, 0.5});
    s.omega = ControlRegion({{0.2, 0.45}});
    const auto sys = build_canonical(s, {4096});
    CHECK(sys.y_of_x(0.0) == doctest::Approx(0.0));
    CHECK(sys.y_of_x(1.0) == doctest::Approx(1.0));
    double prev = -1.0;
    for (double x : sys.x_grid) {
      const double y = sys.y_of_x(x);
      CHECK(y > prev);
      prev = y;
      CHECK(sys.x_of_y(std::clamp(y, 0.0, 1.0)) == doctest::Approx(x).epsilon(1e-10));
    }
    CHECK(sys.rho_tilde.min() >= 1.0 / sys.K_tilde * (1 - 1e-12));
    CHECK(sys.rho_tilde.max() <= sys.K_tilde * (1 + 1e-12));
    CHECK(std::log(sys.K_tilde) <= sys.log_K_tilde_bound);
    CHECK(sys.w.min() > 0.0);
    const auto& om = sys.omega_tilde.intervals()[0];
    CHECK(om.left == doctest::Approx(sys.y_of_x(0.2)));
    CHECK(om.right == doctest::Approx(sys.y_of_x(0.45)));
  }
}

TEST_CASE("pullback and pushforward are inverse") {
  ProblemSpec s;
  s.a = PiecewiseProfile({0, 0.5, 1}, {1, 4});
  s.b = PiecewiseProfile::constant(0.5);
  s.c = PiecewiseProfile::constant(-0.5);
  s.rho = PiecewiseProfile({0, 0.3, 1}, {1, 2});
  s.K = 4;
  s.omega = ControlRegion({{0.55, 0.8}});
  auto sys = std::make_shared<const CanonicalSystem>(build_canonical(s));
  auto f = std::make_shared<const Polynomial>(Interval{0.55, 0.8});
  auto fwd = map_control_forward(f, sys);
  auto back = map_control_back(fwd, sys);
  for (double x : {0.56, 0.6, 0.7, 0.79})
    for (double t : {0.0, 0.5, 1.0}) CHECK(back->value(x, t) == doctest::Approx(f->value(x, t)).epsilon(1e-9));
  CHECK(back->value(0.3, 0.5) == 0.0);
}

TEST_CASE("a canonical control outside omega~ is refused") {
  ProblemSpec s;
  auto sys = std::make_shared<const CanonicalSystem>(build_canonical(s));
  auto f = std::make_shared<const Polynomial>(Interval{0.1, 0.4});
  CHECK_THROWS_AS(map_control_back(f, sys), PreconditionError);
}
