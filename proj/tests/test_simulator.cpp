#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nullctl/errors.hpp"
#include "nullctl/lr_control.hpp"
#include "nullctl/simulator.hpp"

using namespace nullctl;

constexpr double kPi = std::numbers::pi;

namespace {

// f = sqrt2 sin(pi x) on [0, 1], constant in time.
class FirstMode final : public SpaceTimeControl {
 public:
  double value(double x, double) const override { return std::sqrt(2.0) * std::sin(kPi * x); }
  std::vector<Interval> support() const override { return {{0.0, 1.0}}; }
};

double first_mode(double x) { return std::sqrt(2.0) * std::sin(kPi * x); }

// z_1' = -pi^2 z_1 - 1 with z_1(0) = 1.
double forced_first_mode(double t) {
  const double l2 = kPi * kPi;
  return std::exp(-l2 * t) * (1.0 + 1.0 / l2) - 1.0 / l2;
}

}  // namespace

TEST_CASE("output grid") {
  const auto g = output_grid(1.0, 0.25);
  CHECK(g == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(output_grid(1.0, 0.3).back() == 1.0);
  CHECK(output_grid(1.0, 0.3).size() == 5);
}

TEST_CASE("spectral: free decay in closed form") {
  const auto b = exact_sine_basis(4, Mesh(400));
  Eigen::VectorXd z0(2);
  z0 << 1.0, 0.5;
  const auto tr = spectral_simulate(b, z0, ZeroControl{}, {0.0, 0.5, 1.0});
  CHECK(tr.modal);
  CHECK(tr.norms[2] == doctest::Approx(std::hypot(std::exp(-kPi * kPi), 0.5 * std::exp(-4 * kPi * kPi))).epsilon(1e-10));
  CHECK(tr.norms[0] >= tr.norms[1]);
  CHECK(tr.norms[1] >= tr.norms[2]);
  CHECK_THROWS_AS(spectral_simulate(b, z0, ZeroControl{}, {0.1, 1.0}), PreconditionError);
  CHECK_THROWS_AS(spectral_simulate(b, Eigen::VectorXd::Ones(5), ZeroControl{}, {0.0, 1.0}), PreconditionError);
}

TEST_CASE("spectral: forced first mode in closed form") {
  const auto b = exact_sine_basis(6, Mesh(2000));
  Eigen::VectorXd z0(1);
  z0 << 1.0;
  const auto tr = spectral_simulate(b, z0, FirstMode{}, {0.0, 0.3, 1.0});
  CHECK(tr.states[1][0] == doctest::Approx(forced_first_mode(0.3)).epsilon(1e-8));
  CHECK(tr.states[2][0] == doctest::Approx(forced_first_mode(1.0)).epsilon(1e-8));
  for (Eigen::Index k = 1; k < 6; ++k) CHECK(std::abs(tr.states[2][k]) < 1e-8);
}

TEST_CASE("crank-nicolson: heat decay and forced first mode") {
  ProblemSpec s;
  const auto free = crank_nicolson_simulate(s, ZeroControl{}, 512, 1e-3, {0.0, 1.0}, first_mode);
  CHECK_FALSE(free.modal);
  CHECK(free.norms[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(free.norms[1] == doctest::Approx(std::exp(-kPi * kPi)).epsilon(1e-3));

  const auto forced = crank_nicolson_simulate(s, FirstMode{}, 512, 1e-3, {0.0, 0.3, 1.0}, first_mode);
  CHECK(forced.norms[1] == doctest::Approx(std::abs(forced_first_mode(0.3))).epsilon(1e-3));
  CHECK(forced.norms[2] == doctest::Approx(std::abs(forced_first_mode(1.0))).epsilon(1e-3));
  CHECK(nodal_norm(s, forced.x, forced.states[2]) == doctest::Approx(forced.norms[2]));
}

TEST_CASE("crank-nicolson: dissipation, growth bound and maximum principle") {
  ProblemSpec s;
  s.K = 4;
  s.a = PiecewiseProfile({0, 0.5, 1}, {1, 4});
  s.rho = PiecewiseProfile({0, 0.3, 1}, {1, 2});
  s.b = PiecewiseProfile({0, 0.6, 1}, {-1.0, 1.0});
  s.c = PiecewiseProfile::constant(-0.5);
  auto bump = [](double x) { return x * (1 - x) * (x < 0.6 ? 1.0 : 3.0); };
  const auto times = output_grid(0.5, 0.05);
  const auto tr = crank_nicolson_simulate(s, ZeroControl{}, 400, 1e-3, times, bump);
  for (std::size_t i = 1; i < tr.norms.size(); ++i) CHECK(tr.norms[i] <= tr.norms[i - 1] * (1 + 1e-10));
  for (const auto& z : tr.states) CHECK(z.minCoeff() >= -1e-6 * z.cwiseAbs().maxCoeff());

  // c = 1/2 > 0: the rho-weighted norm grows at most like e^{c t / rho_min}.
  ProblemSpec g;
  g.K = 2;
  g.b = PiecewiseProfile::constant(1.0);
  g.c = PiecewiseProfile::constant(0.5);
  const auto gr = crank_nicolson_simulate(g, ZeroControl{}, 400, 1e-3, times, bump);
  for (std::size_t i = 0; i < gr.norms.size(); ++i)
    CHECK(gr.norms[i] <= gr.norms[0] * std::exp(0.5 * gr.times[i]) * (1 + 1e-8));
}

TEST_CASE("crank-nicolson refusals") {
  ProblemSpec s;
  CHECK_THROWS_AS(crank_nicolson_simulate(s, ZeroControl{}, 64, 0.0, {0.0, 1.0}, first_mode), PreconditionError);
  CHECK_THROWS_AS(crank_nicolson_simulate(s, ZeroControl{}, 64, 1e-2, {0.0, 1.0}), PreconditionError);
}

TEST_CASE("spectral terminal state under the synthesized control matches synthesis") {
  auto b = std::make_shared<const EigenBasis>(
      solve_basis(Tabulated::from_profile(PiecewiseProfile({0, 0.3, 1}, {1, 2})), 40, Mesh(1500)));
  const auto plan = make_plan(1.0, b->lambdas[0], 1e-4, b->lambdas, 40);
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(6);
  z0 << 1.0, -0.4, 0.3, 0.2, -0.1, 0.05;
  const auto syn = synthesize(z0, plan, b, ControlRegion({{0.3, 0.5}}));
  const auto tr = spectral_simulate(*b, z0, *syn.control, {0.0, 1.0}, 40);
  CHECK((tr.states.back() - syn.final_state).norm() <= 1e-8 * syn.initial_norm);
  CHECK(tr.norms.back() <= plan.predicted_bound * syn.initial_norm + 1e-8 * syn.initial_norm);
}

TEST_CASE("cross validation: identity coefficients agree without control") {
  ProblemSpec s;
  auto sys = std::make_shared<const CanonicalSystem>(build_canonical(s));
  const auto b = solve_basis(sys->rho_tilde, 40, Mesh(2000));
  auto zero = std::make_shared<const ZeroControl>();
  const auto cv = cross_validate(s, sys, b, first_mode, zero, 512, 1e-3, output_grid(0.5, 0.1), 40);
  CHECK(cv.initial_norm == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(cv.times.front() > 0.0);
  CHECK(cv.sup_discrepancy <= 1e-3 * cv.initial_norm);
  CHECK(cv.terminal_norm_original == doctest::Approx(std::exp(-kPi * kPi * 0.5)).epsilon(1e-3));
  CHECK(cv.terminal_norm_mapped == doctest::Approx(cv.terminal_norm_original).epsilon(1e-3));
}
