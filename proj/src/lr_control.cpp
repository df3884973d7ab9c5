#include "nullctl/lr_control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/quadrature.hpp"

namespace nullctl {

SlicePlan make_plan(double T, double mu0, double tol, const std::vector<double>& lambdas, std::size_t N_max) {
  if (!(T > 0.0)) throw PreconditionError("make_plan: T must be positive");
  if (!(tol > 0.0)) throw PreconditionError("make_plan: tol must be positive");
  if (lambdas.empty()) throw PreconditionError("make_plan: no resolved modes");
  if (mu0 < lambdas.front()) {
    std::ostringstream msg;
    msg << "make_plan: mu0 = " << mu0 << " is below lambda_1 = " << lambdas.front();
    throw PreconditionError(msg.str());
  }
  SlicePlan plan;
  plan.T = T;
  plan.mu0 = mu0;
  plan.tol = tol;
  plan.N_max = N_max;
  for (int j = 0; j < 60; ++j) {
    Slice s;
    const double scale = std::ldexp(1.0, -j);
    s.t_start = T * (1.0 - scale);
    s.active = 0.25 * T * scale;
    s.passive = 0.25 * T * scale;
    s.mu = std::ldexp(mu0, j);
    const double bound = std::exp(-s.mu * s.mu * s.passive);
    const bool resolved = s.mu < lambdas.back();
    s.modes = static_cast<std::size_t>(std::upper_bound(lambdas.begin(), lambdas.end(), s.mu) - lambdas.begin());
    if (!resolved || 2 * s.modes > N_max) {
      std::ostringstream msg;
      msg << "make_plan: tol = " << tol << " is unreachable within N_max = " << N_max
          << " modes; the achievable bound is " << plan.predicted_bound;
      throw PreconditionError(msg.str());
    }
    plan.slices.push_back(s);
    plan.predicted_bound = bound;
    if (bound < tol) return plan;
  }
  throw PreconditionError("make_plan: schedule did not reach tol");
}

double Cutoff::operator()(double y) const {
  const double l = support.left, r = support.right;
  if (!(y > l && y < r)) return 0.0;
  if (kind == CutoffKind::Indicator) return 1.0;
  const double s = (y - l) / (r - l);
  auto step = [](double t) { return t * t * (3.0 - 2.0 * t); };
  if (s < 0.25) return step(4.0 * s);
  if (s > 0.75) return step(4.0 * (1.0 - s));
  return 1.0;
}

double Cutoff::derivative(double y) const {
  const double l = support.left, r = support.right;
  if (!(y > l && y < r) || kind == CutoffKind::Indicator) return 0.0;
  const double len = r - l;
  const double s = (y - l) / len;
  auto dstep = [](double t) { return 6.0 * t * (1.0 - t); };
  if (s < 0.25) return 4.0 / len * dstep(4.0 * s);
  if (s > 0.75) return -4.0 / len * dstep(4.0 * (1.0 - s));
  return 0.0;
}

std::vector<double> Cutoff::breaks() const {
  const double l = support.left, r = support.right;
  if (kind == CutoffKind::Indicator) return {l, r};
  return {l, l + 0.25 * (r - l), r - 0.25 * (r - l), r};
}

Cutoff make_cutoff(const ControlRegion& omega, CutoffKind kind) { return Cutoff{omega.largest(), kind}; }

namespace {

// Gauss points over the cutoff support, split at mesh nodes and cutoff breaks.
template <class F>
void for_each_support_point(const EigenBasis& basis, const Cutoff& eta, F&& visit) {
  std::vector<double> cuts = eta.breaks();
  for (double x : basis.mesh.nodes)
    if (x > eta.support.left && x < eta.support.right) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  const auto& rule = GaussRule<6>::get();
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    for (std::size_t g = 0; g < rule.nodes.size(); ++g) visit(a + half * (1.0 + rule.nodes[g]), half * rule.weights[g]);
  }
}

}  // namespace

InputOperator build_input_operator(const EigenBasis& basis, const ControlRegion& omega, std::size_t m,
                                   std::size_t N_max, CutoffKind kind) {
  if (2 * m > N_max) throw PreconditionError("build_input_operator: needs m <= N_max / 2");
  if (basis.m() < N_max) throw PreconditionError("build_input_operator: basis has fewer than N_max modes");
  if (!(omega.inradius() > 0.0)) throw PreconditionError("build_input_operator: region has no interior");
  InputOperator op;
  op.eta = make_cutoff(omega, kind);
  op.B = Eigen::MatrixXd::Zero(N_max, m);
  op.H = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd e(N_max);
  for_each_support_point(basis, op.eta, [&](double y, double w) {
    basis.values_at(y, {e.data(), N_max});
    const double eta = op.eta(y);
    op.B.noalias() += (w * eta) * e * e.head(m).transpose();
    op.H.noalias() += (w * eta * eta) * e.head(m) * e.head(m).transpose();
  });
  return op;
}

Eigen::MatrixXd decay_kernel(const Eigen::VectorXd& lam2_rows, const Eigen::VectorXd& lam2_cols, double tau) {
  Eigen::MatrixXd C(lam2_rows.size(), lam2_cols.size());
  for (Eigen::Index j = 0; j < C.rows(); ++j)
    for (Eigen::Index k = 0; k < C.cols(); ++k) {
      const double s = lam2_rows[j] + lam2_cols[k];
      C(j, k) = s > 0.0 ? -std::expm1(-s * tau) / s : tau;
    }
  return C;
}

Eigen::MatrixXd gramian(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& G, double tau) {
  const Eigen::VectorXd lam2 = lambdas.array().square();
  return G.cwiseProduct(decay_kernel(lam2, lam2, tau));
}

double SliceControl::g(std::size_t k, double s) const {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dual.size(); ++j)
    sum += Bl(j, static_cast<Eigen::Index>(k)) * std::exp(-lam2[j] * (slice.active - s)) * dual[j];
  return sum;
}

SliceControl steer_slice(const Eigen::VectorXd& state, const Slice& slice, const InputOperator& input,
                         const std::vector<double>& lambdas) {
  const auto N = input.B.rows();
  const auto m = static_cast<Eigen::Index>(slice.modes);
  if (state.size() != N) throw PreconditionError("steer_slice: state size differs from N_max");
  if (m > input.B.cols() || m < 1) throw PreconditionError("steer_slice: slice mode count outside the input operator");
  SliceControl out;
  out.slice = slice;
  out.start_state = state;
  const double tau = slice.active;
  Eigen::VectorXd lam2_all(N);
  for (Eigen::Index j = 0; j < N; ++j) lam2_all[j] = lambdas[j] * lambdas[j];
  out.lam2 = lam2_all.head(m);
  out.Bl = input.B.topLeftCorner(m, m);

  const Eigen::MatrixXd G = out.Bl * out.Bl.transpose();
  const Eigen::MatrixXd W = G.cwiseProduct(decay_kernel(out.lam2, out.lam2, tau));
  const Eigen::VectorXd ew = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W, Eigen::EigenvaluesOnly).eigenvalues();
  out.condition = ew[0] > 0.0 ? ew[m - 1] / ew[0] : std::numeric_limits<double>::infinity();
  if (!(out.condition <= 1e14)) {
    std::ostringstream msg;
    msg << "steer_slice: Gramian condition number " << out.condition << " exceeds 1e14 at mu = " << slice.mu
        << " with " << m << " modes; use a longer active window or fewer modes";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd decay = (-out.lam2 * tau).array().exp();
  const Eigen::VectorXd rhs = decay.cwiseProduct(state.head(m));
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(W);
  Eigen::VectorXd x = ldlt.solve(rhs);
  x += ldlt.solve(rhs - W * x);
  out.dual = x;

  // Closed-form end of the active window for every tracked mode.
  const Eigen::MatrixXd C = decay_kernel(lam2_all, out.lam2, tau);
  const Eigen::MatrixXd coupling = (input.B.leftCols(m) * out.Bl.transpose()).cwiseProduct(C);
  out.active_end_state = (-lam2_all * tau).array().exp().matrix().cwiseProduct(state) - coupling * x;
  out.steered_residual = out.active_end_state.head(m).cwiseAbs().maxCoeff();
  out.end_state = (-lam2_all * slice.passive).array().exp().matrix().cwiseProduct(out.active_end_state);

  const Eigen::MatrixXd Hm = input.H.topLeftCorner(m, m);
  const Eigen::MatrixXd E = (out.Bl * Hm * out.Bl.transpose()).cwiseProduct(decay_kernel(out.lam2, out.lam2, tau));
  out.energy = x.dot(E * x);
  return out;
}

ControlField::ControlField(std::shared_ptr<const EigenBasis> basis, InputOperator input,
                           std::vector<SliceControl> slices, SlicePlan plan)
    : basis_(std::move(basis)), input_(std::move(input)), slices_(std::move(slices)), plan_(std::move(plan)) {}

double ControlField::value(double y, double t) const {
  const double eta = input_.eta(y);
  if (eta == 0.0) return 0.0;
  for (const auto& sc : slices_) {
    const double s = t - sc.slice.t_start;
    if (!(s >= 0.0 && s < sc.slice.active)) continue;
    const Eigen::Index m = sc.dual.size();
    Eigen::VectorXd weighted(m);
    for (Eigen::Index j = 0; j < m; ++j) weighted[j] = std::exp(-sc.lam2[j] * (sc.slice.active - s)) * sc.dual[j];
    const Eigen::VectorXd g = sc.Bl.transpose() * weighted;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) sum += g[k] * basis_->value(static_cast<std::size_t>(k), y);
    return eta * sum;
  }
  return 0.0;
}

std::vector<Interval> ControlField::support() const { return {input_.eta.support}; }

std::vector<double> ControlField::time_breaks() const {
  std::vector<double> out;
  for (const auto& sc : slices_) {
    out.push_back(sc.slice.t_start);
    out.push_back(sc.slice.t_start + sc.slice.active);
  }
  return out;
}

std::vector<double> ControlField::space_breaks() const {
  std::vector<double> out = input_.eta.breaks();
  for (double x : basis_->mesh.nodes)
    if (x > input_.eta.support.left && x < input_.eta.support.right) out.push_back(x);
  std::sort(out.begin(), out.end());
  return out;
}

Synthesis synthesize(const Eigen::VectorXd& z0, const SlicePlan& plan, std::shared_ptr<const EigenBasis> basis,
                     const ControlRegion& omega, double K_tilde, CutoffKind kind) {
  const std::size_t N = plan.N_max;
  if (plan.slices.empty()) throw PreconditionError("synthesize: empty plan");
  if (static_cast<std::size_t>(z0.size()) > N) throw PreconditionError("synthesize: z0 has more than N_max modes");
  std::size_t m_total = 0;
  for (const auto& s : plan.slices) m_total = std::max(m_total, s.modes);
  auto input = build_input_operator(*basis, omega, m_total, N, kind);

  Synthesis out;
  Eigen::VectorXd state = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  state.head(z0.size()) = z0;
  out.initial_norm = state.norm();
  out.times.push_back(0.0);
  out.states.push_back(state);
  std::vector<SliceControl> controls;
  for (const auto& s : plan.slices) {
    auto sc = steer_slice(state, s, input, basis->lambdas);
    out.max_steered_residual = std::max(out.max_steered_residual, sc.steered_residual);
    out.energies.push_back(sc.energy);
    state = sc.end_state;
    out.times.push_back(s.t_start + s.active + s.passive);
    out.states.push_back(state);
    controls.push_back(std::move(sc));
  }
  const double rest = plan.T - out.times.back();
  if (rest > 0.0) {
    for (Eigen::Index j = 0; j < state.size(); ++j)
      state[j] *= std::exp(-basis->lambdas[j] * basis->lambdas[j] * rest);
    out.times.push_back(plan.T);
    out.states.push_back(state);
  }
  out.final_state = state;
  out.final_norm = state.norm();
  const double lN = basis->lambdas[N - 1];
  out.tail_bound = K_tilde * out.initial_norm * std::exp(-lN * lN * plan.T / 2.0);
  out.control = std::make_shared<const ControlField>(std::move(basis), std::move(input), std::move(controls), plan);
  return out;
}

}  // namespace nullctl
