#include "nullctl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/quadrature.hpp"
#include "nullctl/tridiagonal.hpp"

namespace nullctl {

std::vector<double> output_grid(double T, double spacing) {
  std::vector<double> out{0.0};
  for (int i = 1; i * spacing < T * (1.0 - 1e-12); ++i) out.push_back(i * spacing);
  out.push_back(T);
  return out;
}

namespace {

struct QuadPoint {
  double x;
  double w;
};

// Gauss points over the support of a control, split at the supplied cuts.
std::vector<QuadPoint> support_points(const SpaceTimeControl& control, std::vector<double> cuts) {
  const auto& rule = GaussRule<6>::get();
  std::vector<QuadPoint> pts;
  for (double b : control.space_breaks()) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  for (const auto& iv : control.support()) {
    const double l = std::max(0.0, iv.left), r = std::min(1.0, iv.right);
    if (!(r > l)) continue;
    std::vector<double> edges{l};
    for (double c : cuts)
      if (c > l && c < r) edges.push_back(c);
    edges.push_back(r);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double a = edges[i], b = edges[i + 1];
      if (!(b - a > 1e-15)) continue;
      const double half = 0.5 * (b - a);
      for (std::size_t g = 0; g < rule.nodes.size(); ++g) pts.push_back({a + half * (1.0 + rule.nodes[g]), half * rule.weights[g]});
    }
  }
  return pts;
}

std::vector<double> time_cuts(const std::vector<double>& output_times, const SpaceTimeControl& control) {
  std::vector<double> cuts = output_times;
  const double T = output_times.back();
  for (double t : control.time_breaks())
    if (t > 0.0 && t < T) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out;
  for (double t : cuts)
    if (out.empty() || t - out.back() > 1e-14 * std::max(1.0, T)) out.push_back(t);
  return out;
}

void check_output_times(const std::vector<double>& times) {
  if (times.size() < 2 || times.front() != 0.0 || !std::is_sorted(times.begin(), times.end()))
    throw PreconditionError("simulation output times must start at 0 and ascend");
}

}  // namespace

Trajectory spectral_simulate(const EigenBasis& basis, const Eigen::VectorXd& z0, const SpaceTimeControl& control,
                             const std::vector<double>& output_times, std::size_t N) {
  check_output_times(output_times);
  if (N == 0) N = basis.m();
  if (N > basis.m()) throw PreconditionError("spectral_simulate: N exceeds the basis size");
  if (static_cast<std::size_t>(z0.size()) > N) throw PreconditionError("spectral_simulate: z0 has more than N modes");
  const auto n = static_cast<Eigen::Index>(N);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  z.head(z0.size()) = z0;
  Eigen::VectorXd lam2(n);
  for (Eigen::Index j = 0; j < n; ++j) lam2[j] = basis.lambdas[j] * basis.lambdas[j];

  const auto pts = support_points(control, basis.mesh.nodes);
  Eigen::MatrixXd Ew(n, static_cast<Eigen::Index>(pts.size()));
  {
    Eigen::VectorXd e(n);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      basis.values_at(pts[q].x, {e.data(), N});
      Ew.col(static_cast<Eigen::Index>(q)) = pts[q].w * e;
    }
  }

  Trajectory traj;
  traj.modal = true;
  traj.times.push_back(0.0);
  traj.states.push_back(z);
  traj.norms.push_back(z.norm());

  const auto cuts = time_cuts(output_times, control);
  const auto& rule = GaussRule<8>::get();
  constexpr int kPanels = 36;
  Eigen::VectorXd fv(static_cast<Eigen::Index>(pts.size()));
  std::size_t next_output = 1;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t0 = cuts[i], t1 = cuts[i + 1];
    const double len = t1 - t0;
    Eigen::VectorXd forced = Eigen::VectorXd::Zero(n);
    if (!pts.empty()) {
      // Panels [t1 - len 2^-p, t1 - len 2^-(p+1)], the last one closing at t1.
      for (int p = 0; p < kPanels; ++p) {
        const double a = t1 - len * std::ldexp(1.0, -p);
        const double b = p + 1 == kPanels ? t1 : t1 - len * std::ldexp(1.0, -p - 1);
        const double half = 0.5 * (b - a);
        for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
          const double s = a + half * (1.0 + rule.nodes[g]);
          bool any = false;
          for (std::size_t q = 0; q < pts.size(); ++q) {
            fv[static_cast<Eigen::Index>(q)] = control.value(pts[q].x, s);
            any = any || fv[static_cast<Eigen::Index>(q)] != 0.0;
          }
          if (!any) continue;
          const Eigen::VectorXd F = Ew * fv;
          const double wt = half * rule.weights[g];
          forced.array() += wt * (-lam2.array() * (t1 - s)).exp() * F.array();
        }
      }
    }
    z = (-lam2.array() * len).exp().matrix().cwiseProduct(z) - forced;
    if (next_output < output_times.size() && std::abs(output_times[next_output] - t1) <= 1e-14 * std::max(1.0, t1)) {
      traj.times.push_back(output_times[next_output]);
      traj.states.push_back(z);
      traj.norms.push_back(z.norm());
      ++next_output;
    }
  }
  return traj;
}

namespace {

struct FemSystem {
  std::vector<double> x;
  Tridiagonal<double> M;  // rho mass, interior
  Tridiagonal<double> L;  // -(a stiffness) + skew advection + reaction + jump term
  std::vector<double> cell_rho;
};

FemSystem assemble(const ProblemSpec& spec, std::size_t n, const std::vector<double>& extra_breaks) {
  auto breaks = spec.all_breakpoints();
  for (double b : extra_breaks)
    if (b > 0.0 && b < 1.0) breaks.push_back(b);
  FemSystem S;
  S.x = fitted_grid(n, breaks);
  const std::size_t nodes = S.x.size();
  const std::size_t N = nodes - 2;
  S.M = Tridiagonal<double>(N);
  S.L = Tridiagonal<double>(N);
  S.cell_rho.resize(nodes - 1);
  // Local (test i, trial j) contributions to rows/cols of interior nodes.
  auto add = [N](Tridiagonal<double>& A, std::size_t gi, std::size_t gj, double v) {
    if (gi == 0 || gj == 0 || gi > N || gj > N) return;
    const std::size_t i = gi - 1, j = gj - 1;
    if (i == j)
      A.diag[i] += v;
    else if (j == i + 1)
      A.upper[i] += v;
    else
      A.lower[j] += v;
  };
  for (std::size_t c = 0; c + 1 < nodes; ++c) {
    const double h = S.x[c + 1] - S.x[c];
    const double mid = 0.5 * (S.x[c] + S.x[c + 1]);
    const double a = spec.a(mid), b = spec.b(mid), cc = spec.c(mid), rho = spec.rho(mid);
    S.cell_rho[c] = rho;
    const std::size_t g[2] = {c, c + 1};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double same = i == j ? 1.0 : 0.0;
        add(S.M, g[i], g[j], rho * h * (1.0 + same) / 6.0);
        const double stiff = a / h * (same ? 1.0 : -1.0);
        const double react = cc * h * (1.0 + same) / 6.0;
        // 1/2 int b (z' phi - z phi'): antisymmetric, +1 for (test 0, trial 1).
        const double skew = 0.5 * b * (i == j ? 0.0 : (i == 0 ? 1.0 : -1.0));
        add(S.L, g[i], g[j], -stiff + react + skew);
      }
  }
  // -1/2 [b] z phi at interior nodes where b jumps.
  for (std::size_t p = 1; p + 1 < nodes; ++p) {
    const double jump = spec.b(S.x[p]) - spec.b(0.5 * (S.x[p - 1] + S.x[p]));
    if (jump != 0.0) add(S.L, p, p, -0.5 * jump);
  }
  return S;
}

double m_norm(const Tridiagonal<double>& M, const std::vector<double>& z) {
  const auto Mz = M.apply(z);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * Mz[i];
  return std::sqrt(std::max(0.0, s));
}

}  // namespace

double nodal_norm(const ProblemSpec& spec, const std::vector<double>& x, const Eigen::VectorXd& z) {
  double s = 0.0;
  for (std::size_t c = 0; c + 1 < x.size(); ++c) {
    const double h = x[c + 1] - x[c];
    const double rho = spec.rho(0.5 * (x[c] + x[c + 1]));
    const double l = z[static_cast<Eigen::Index>(c)], r = z[static_cast<Eigen::Index>(c + 1)];
    s += rho * h * (l * l + l * r + r * r) / 3.0;
  }
  return std::sqrt(s);
}

Trajectory crank_nicolson_simulate(const ProblemSpec& spec, const SpaceTimeControl& control, std::size_t n, double dt,
                                   const std::vector<double>& output_times,
                                   const std::function<double(double)>& z0, const CrankNicolsonOptions& options) {
  check_output_times(output_times);
  if (!(dt > 0.0)) throw PreconditionError("crank_nicolson_simulate: dt must be positive");
  if (!z0 && spec.z0.mesh_n == 0) throw PreconditionError("crank_nicolson_simulate: no initial state");
  const auto S = assemble(spec, n, {});
  const std::size_t nodes = S.x.size();
  const std::size_t N = nodes - 2;

  bool dissipative = options.check_energy && control.support().empty() && spec.c.max() <= 0.0;
  for (std::size_t i = 1; i < spec.b.cells(); ++i) dissipative = dissipative && spec.b.values()[i] >= spec.b.values()[i - 1];

  // Load quadrature: points with their cell and barycentric weights.
  struct LoadPoint {
    double x, w;
    std::size_t cell;
    double t;
  };
  std::vector<LoadPoint> load;
  for (const auto& p : support_points(control, S.x)) {
    auto it = std::upper_bound(S.x.begin(), S.x.end(), p.x);
    std::size_t c = static_cast<std::size_t>(it - S.x.begin());
    c = std::clamp<std::size_t>(c, 1, nodes - 1) - 1;
    load.push_back({p.x, p.w, c, (p.x - S.x[c]) / (S.x[c + 1] - S.x[c])});
  }
  auto load_vector = [&](double t) {
    std::vector<double> F(N, 0.0);
    for (const auto& q : load) {
      const double f = control.value(q.x, t);
      if (f == 0.0) continue;
      if (q.cell >= 1) F[q.cell - 1] += q.w * f * (1.0 - q.t);
      if (q.cell + 1 <= N) F[q.cell] += q.w * f * q.t;
    }
    return F;
  };

  std::vector<double> z(N);
  for (std::size_t i = 0; i < N; ++i) z[i] = z0 ? z0(S.x[i + 1]) : spec.z0(S.x[i + 1]);

  Trajectory traj;
  traj.modal = false;
  traj.x = S.x;
  auto record = [&](double t) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes));
    for (std::size_t i = 0; i < N; ++i) full[static_cast<Eigen::Index>(i + 1)] = z[i];
    traj.times.push_back(t);
    traj.states.push_back(full);
    traj.norms.push_back(m_norm(S.M, z));
  };
  record(0.0);

  std::map<double, TridiagonalLU<double>> factors;  // keyed by half step
  auto solver = [&](double half) -> const TridiagonalLU<double>& {
    auto it = factors.find(half);
    if (it == factors.end()) it = factors.emplace(half, TridiagonalLU<double>(combine(S.M, -half, S.L))).first;
    return it->second;
  };

  const auto cuts = time_cuts(output_times, control);
  std::size_t next_output = 1;
  bool first_steps = options.rannacher;
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double t0 = cuts[seg], t1 = cuts[seg + 1];
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil((t1 - t0) / dt - 1e-9)));
    const double k = (t1 - t0) / static_cast<double>(steps);
    const auto& lu = solver(0.5 * k);
    std::size_t done = 0;
    while (done < steps) {
      const double ts = t0 + static_cast<double>(done) * k;
      const double before = dissipative ? m_norm(S.M, z) : 0.0;
      if (first_steps && steps - done >= 2) {
        // Four backward Euler steps of k/2 replace two midpoint steps.
        for (int h = 0; h < 4; ++h) {
          const double te = ts + 0.5 * k * (h + 1);
          auto rhs = S.M.apply(z);
          const auto F = load_vector(te);
          for (std::size_t i = 0; i < N; ++i) rhs[i] -= 0.5 * k * F[i];
          z = lu.solve(std::move(rhs));
        }
        done += 2;
        first_steps = false;
      } else {
        auto rhs = S.M.apply(z);
        const auto Lz = S.L.apply(z);
        const auto F = load_vector(ts + 0.5 * k);
        for (std::size_t i = 0; i < N; ++i) rhs[i] += 0.5 * k * Lz[i] - k * F[i];
        z = lu.solve(std::move(rhs));
        done += 1;
      }
      if (dissipative) {
        const double after = m_norm(S.M, z);
        if (after > before * (1.0 + 1e-10) + 1e-300) {
          std::ostringstream msg;
          msg << "crank_nicolson_simulate: energy increased from " << before << " to " << after << " near t = " << ts;
          throw NumericalError(msg.str());
        }
      }
    }
    if (next_output < output_times.size() && std::abs(output_times[next_output] - t1) <= 1e-14 * std::max(1.0, t1)) {
      record(output_times[next_output]);
      ++next_output;
    }
  }
  return traj;
}

double mapped_state(const CanonicalSystem& system, const EigenBasis& basis, const Eigen::VectorXd& modes, double x,
                    double t) {
  const double y = std::clamp(system.y_of_x(x), 0.0, 1.0);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < modes.size(); ++k) sum += modes[k] * basis.value(static_cast<std::size_t>(k), y);
  return system.state_factor(x, t) * sum;
}

CrossValidation cross_validate(const ProblemSpec& spec, std::shared_ptr<const CanonicalSystem> system,
                               const EigenBasis& basis, const std::function<double(double)>& z0,
                               std::shared_ptr<const SpaceTimeControl> canonical_control, std::size_t n, double dt,
                               const std::vector<double>& output_times, std::size_t N) {
  if (N == 0) N = basis.m();
  CrossValidation out;
  const auto modes = project(basis, [&](double y) {
    const double x = std::clamp(system->x_of_y(y), 0.0, 1.0);
    return z0(x) / system->w(x);
  });
  out.canonical = spectral_simulate(basis, modes.head(static_cast<Eigen::Index>(N)), *canonical_control, output_times, N);
  std::shared_ptr<const SpaceTimeControl> pulled;
  if (canonical_control->support().empty())
    pulled = std::make_shared<ZeroControl>();
  else
    pulled = map_control_back(canonical_control, system);
  out.original = crank_nicolson_simulate(spec, *pulled, n, dt, output_times, z0);

  const auto& x = out.original.x;
  const auto& rule = GaussRule<4>::get();
  {
    double s = 0.0;
    for (std::size_t c = 0; c + 1 < x.size(); ++c) {
      const double rho = spec.rho(0.5 * (x[c] + x[c + 1]));
      s += rule.integrate([&](double xx) { return rho * z0(xx) * z0(xx); }, x[c], x[c + 1]);
    }
    out.initial_norm = std::sqrt(s);
  }
  for (std::size_t i = 1; i < out.original.times.size(); ++i) {
    const double t = out.original.times[i];
    const auto& zc = out.original.states[i];
    const auto& zm = out.canonical.states[i];
    double s = 0.0, mapped = 0.0;
    for (std::size_t c = 0; c + 1 < x.size(); ++c) {
      const double rho = spec.rho(0.5 * (x[c] + x[c + 1]));
      const double h = x[c + 1] - x[c];
      const double l = zc[static_cast<Eigen::Index>(c)], r = zc[static_cast<Eigen::Index>(c + 1)];
      for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
        const double xx = x[c] + 0.5 * h * (1.0 + rule.nodes[g]);
        const double w = 0.5 * h * rule.weights[g] * rho;
        const double fem = l + (r - l) * (xx - x[c]) / h;
        const double mv = mapped_state(*system, basis, zm, xx, t);
        s += w * (fem - mv) * (fem - mv);
        mapped += w * mv * mv;
      }
    }
    out.times.push_back(t);
    out.discrepancy.push_back(std::sqrt(s));
    out.sup_discrepancy = std::max(out.sup_discrepancy, std::sqrt(s));
    out.terminal_norm_mapped = std::sqrt(mapped);
  }
  out.terminal_norm_original = out.original.norms.back();
  return out;
}

}  // namespace nullctl
