#include "nullctl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "nullctl/coefficients.hpp"
#include "nullctl/eigensolver.hpp"
#include "nullctl/errors.hpp"
#include "nullctl/io.hpp"
#include "nullctl/lift.hpp"
#include "nullctl/lr_control.hpp"
#include "nullctl/reduction.hpp"
#include "nullctl/simulator.hpp"
#include "nullctl/spectral_inequality.hpp"

namespace nullctl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, Command>& command_table() {
  static const std::map<std::string, Command> t{{"validate", Command::Validate},
                                                {"reduce", Command::Reduce},
                                                {"eigs", Command::Eigs},
                                                {"specineq", Command::Specineq},
                                                {"lift-verify", Command::LiftVerify},
                                                {"synthesize", Command::Synthesize},
                                                {"simulate", Command::Simulate},
                                                {"full-pipeline", Command::FullPipeline}};
  return t;
}

bool wants(Command c, std::initializer_list<Command> stages) {
  if (c == Command::FullPipeline) return true;
  for (auto s : stages)
    if (s == c) return true;
  return false;
}

class Session {
 public:
  Session(const RunConfig& cfg, ProblemSpec spec) : cfg_(cfg), spec_(std::move(spec)) {
    spec_key_ = sha256_bytes(to_json(spec_).dump());
    manifest_["command"] = command_name(cfg.command);
    manifest_["seed"] = cfg.seed;
    manifest_["spec_sha256"] = spec_key_;
    manifest_["config"] = {{"mesh_n", cfg.mesh_n}, {"modes", cfg.modes}, {"dt", cfg.dt},
                           {"cn_n", cfg.cn_n},     {"mu_max", cfg.mu_max}, {"tol", cfg.tol},
                           {"jobs", cfg.jobs},     {"growth_trials", cfg.growth_trials},
                           {"cauchy_trials", cfg.cauchy_trials}};
    manifest_["artifacts"] = json::array();
    manifest_["results"] = json::object();
  }

  void execute() {
    const auto report = validate(spec_);
    json violations = json::array();
    for (const auto& v : report.violations)
      violations.push_back({{"coefficient", v.coefficient}, {"cell", v.cell}, {"left", v.left}, {"right", v.right},
                            {"value", v.value}, {"message", v.message}});
    results()["validation"] = {{"valid", report.valid}, {"inradius", report.inradius}, {"violations", violations}};
    if (!report.valid) {
      std::ostringstream msg;
      msg << "problem violates its bounds:";
      for (const auto& v : report.violations) msg << " [" << v.coefficient << " cell " << v.cell << ": " << v.message << "]";
      finish();
      throw PreconditionError(msg.str());
    }
    const Command c = cfg_.command;
    if (c == Command::Validate) return finish();

    reduce();
    if (c == Command::Reduce) return finish();
    eigs();
    if (wants(c, {Command::Specineq})) specineq();
    if (wants(c, {Command::LiftVerify})) lift_verify();
    if (wants(c, {Command::Synthesize, Command::Simulate})) synthesize_control();
    if (wants(c, {Command::Simulate})) simulate();
    finish();
  }

  const json& manifest() const { return manifest_; }

 private:
  json& results() { return manifest_["results"]; }
  std::string comment() const { return "seed=" + std::to_string(cfg_.seed) + " spec_sha256=" + spec_key_; }

  void emit(const std::string& name, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
            bool cached = false) {
    const fs::path path = cfg_.out_dir / name;
    write_csv(path, header, rows, comment());
    manifest_["artifacts"].push_back(
        {{"file", name}, {"rows", rows.size()}, {"sha256", sha256_file(path)}, {"cached", cached}});
  }

  void finish() {
    std::ofstream out(cfg_.out_dir / "manifest.json", std::ios::binary);
    out << manifest_.dump(2) << "\n";
    if (!out) throw PreconditionError("cannot write manifest in " + cfg_.out_dir.string());
  }

  fs::path cache_dir() const { return cfg_.out_dir / "cache"; }

  bool cache_hit(const std::string& stem, const std::string& key) const {
    if (!cfg_.use_cache) return false;
    std::ifstream in(cache_dir() / (stem + ".key"));
    std::string stored;
    return in && std::getline(in, stored) && stored == key;
  }

  void store_key(const std::string& stem, const std::string& key) const {
    std::ofstream out(cache_dir() / (stem + ".key"));
    out << key << "\n";
  }

  void reduce() {
    fs::create_directories(cache_dir());
    canonical_key_ = sha256_bytes(spec_key_ + " grid_cells=" + std::to_string(ReductionOptions{}.grid_cells));
    bool cached = cache_hit("canonical", canonical_key_);
    if (cached) {
      system_ = std::make_shared<const CanonicalSystem>(load_canonical(cache_dir() / "canonical"));
    } else {
      system_ = std::make_shared<const CanonicalSystem>(build_canonical(spec_));
      save_canonical(*system_, cache_dir() / "canonical");
      store_key("canonical", canonical_key_);
    }
    const auto& s = *system_;
    std::vector<std::vector<double>> rows;
    for (double x : s.x_grid) {
      const double y = s.y_of_x(x);
      rows.push_back({x, y, s.w(x), s.B(x), s.control_factor(x), s.rho_tilde(std::clamp(y, 0.0, 1.0))});
    }
    emit("reduction.csv", {"x", "y", "w", "B", "control_factor", "rho_tilde"}, rows, cached);
    json omega_tilde = to_json(s.omega_tilde);
    results()["reduction"] = {{"L", s.L},
                              {"shift_rate", s.shift_rate},
                              {"K_tilde", s.K_tilde},
                              {"log_K_tilde_bound", s.log_K_tilde_bound},
                              {"omega_tilde", omega_tilde},
                              {"cached", cached}};
  }

  void eigs() {
    const std::string key =
        sha256_bytes(canonical_key_ + " mesh_n=" + std::to_string(cfg_.mesh_n) + " modes=" + std::to_string(cfg_.modes));
    bool cached = cache_hit("basis", key);
    if (cached) {
      basis_ = std::make_shared<const EigenBasis>(load_basis(cache_dir() / "basis"));
    } else {
      basis_ = std::make_shared<const EigenBasis>(solve_basis(system_->rho_tilde, cfg_.modes, Mesh(cfg_.mesh_n)));
      save_basis(*basis_, cache_dir() / "basis");
      store_key("basis", key);
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < basis_->m(); ++k) {
      const double l = basis_->lambdas[k];
      rows.push_back({static_cast<double>(k + 1), l, l * l});
    }
    emit("eigenvalues.csv", {"k", "lambda", "lambda_sq"}, rows, cached);
    const auto orth = check_orthonormality(*basis_);
    results()["eigs"] = {{"modes", basis_->m()},
                         {"lambda_max", basis_->lambdas.back()},
                         {"orthonormality_deviation", orth.max_deviation},
                         {"cached", cached}};
  }

  std::vector<double> mu_grid() const {
    if (cfg_.mu_max <= 0.0) return default_mu_grid(*basis_);
    std::vector<double> g;
    for (int k = 1; k * std::numbers::pi <= cfg_.mu_max * (1.0 + 1e-12); ++k) g.push_back(k * std::numbers::pi);
    if (g.empty()) throw PreconditionError("--mu-max is below pi; no frequency cutoff to sample");
    return g;
  }

  void specineq() {
    const auto grid = mu_grid();
    const auto rep = observability_curve(*basis_, system_->omega_tilde, grid);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.mu_grid.size(); ++i)
      rows.push_back({rep.mu_grid[i], static_cast<double>(rep.mode_counts[i]), rep.lambda_min[i], rep.ratios[i],
                      rep.log_ratios[i], rep.sentinel[i] ? 1.0 : 0.0});
    emit("observability.csv", {"mu", "modes", "lambda_min", "ratio", "log_ratio", "sentinel"}, rows);
    bool monotone = true;
    for (std::size_t i = 1; i < rep.ratios.size(); ++i)
      if (rep.ratios[i] < rep.ratios[i - 1]) monotone = false;
    const auto fit = fit_constant(rep);
    const double check = random_coefficient_check(*basis_, system_->omega_tilde, grid.back(), 200, cfg_.seed);
    results()["specineq"] = {{"digits", rep.digits},
                             {"monotone", monotone},
                             {"slope", fit.slope},
                             {"intercept", fit.intercept},
                             {"N_hat", fit.N_hat},
                             {"N_certified", fit.N_certified},
                             {"max_positive_residual", fit.max_positive_residual},
                             {"fitted_range", fit.fitted_range},
                             {"super_exponential_flag", fit.super_exponential_flag},
                             {"random_check_ratio", check},
                             {"random_check_mu", grid.back()}};
  }

  void lift_verify() {
    auto grid = mu_grid();
    // At most twelve evenly spread cutoffs keep the sup-norm sweep cheap.
    std::vector<double> mus;
    const std::size_t want = std::min<std::size_t>(12, grid.size());
    for (std::size_t i = 0; i < want; ++i) mus.push_back(grid[want == 1 ? 0 : i * (grid.size() - 1) / (want - 1)]);
    const auto gr = growth_report(*basis_, system_->omega_tilde, mus, cfg_.growth_trials, cfg_.seed);
    std::vector<std::vector<double>> rows;
    for (const auto& r : gr.rows) rows.push_back({r.mu, static_cast<double>(r.trial), r.r, r.sup_norm});
    emit("growth.csv", {"mu", "trial", "r", "sup_norm"}, rows);

    const std::size_t cm = std::min<std::size_t>(10, basis_->m());
    const auto cr = cauchy_data_report(*basis_, system_->omega_tilde, cfg_.cauchy_trials, {1.0 / 16, 1.0 / 8, 1.0 / 4},
                                       cfg_.seed, cm);
    rows.clear();
    for (const auto& r : cr.rows) rows.push_back({static_cast<double>(r.trial), r.r, r.lhs, r.trace, r.upper});
    emit("cauchy.csv", {"trial", "r", "sup_norm_half_r", "trace_norm", "sup_norm_4r"}, rows);
    results()["lift"] = {{"growth_slope", gr.fit_slope},
                         {"growth_intercept", gr.fit_intercept},
                         {"growth_max_residual", gr.max_residual},
                         {"monotone", gr.monotone},
                         {"convexity_violations", gr.convexity_violations},
                         {"convexity_checks", gr.convexity_checks},
                         {"skipped", gr.skipped},
                         {"cauchy_theta", cr.theta},
                         {"cauchy_C", cr.C},
                         {"cauchy_violations", cr.violations},
                         {"cauchy_excluded", cr.excluded}};
  }

  Eigen::VectorXd canonical_modes() const {
    const auto& s = *system_;
    return project(*basis_, [&](double y) { return s.canonical_initial(spec_.z0, y); });
  }

  void synthesize_control() {
    const std::size_t N = basis_->m();
    plan_ = make_plan(spec_.T, basis_->lambdas.front(), cfg_.tol, basis_->lambdas, N);
    synthesis_ = synthesize(canonical_modes(), plan_, basis_, system_->omega_tilde, system_->K_tilde);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < synthesis_.control->slices().size(); ++i) {
      const auto& sc = synthesis_.control->slices()[i];
      rows.push_back({static_cast<double>(i), sc.slice.t_start, sc.slice.active, sc.slice.passive, sc.slice.mu,
                      static_cast<double>(sc.slice.modes), sc.condition, sc.energy, sc.steered_residual});
    }
    emit("control.csv", {"slice", "t_start", "active", "passive", "mu", "modes", "condition", "energy", "steered_residual"},
         rows);
    results()["synthesis"] = {{"slices", plan_.slices.size()},
                              {"predicted_bound", plan_.predicted_bound},
                              {"initial_norm", synthesis_.initial_norm},
                              {"final_norm", synthesis_.final_norm},
                              {"relative_final_norm", synthesis_.final_norm / synthesis_.initial_norm},
                              {"max_steered_residual", synthesis_.max_steered_residual},
                              {"tail_bound", synthesis_.tail_bound}};
  }

  void simulate() {
    const auto times = output_grid(spec_.T, spec_.T / 20.0);
    const auto& z0 = spec_.z0;
    const auto cv = cross_validate(spec_, system_, *basis_, [&](double x) { return z0(x); }, synthesis_.control,
                                   cfg_.cn_n, cfg_.dt, times, basis_->m());
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < cv.original.times.size(); ++i) {
      const double disc = i == 0 ? 0.0 : cv.discrepancy[i - 1];
      rows.push_back({cv.original.times[i], cv.canonical.norms[i], cv.original.norms[i], disc});
    }
    emit("trajectory.csv", {"t", "norm_canonical", "norm_original", "discrepancy"}, rows);
    results()["simulation"] = {{"initial_norm", cv.initial_norm},
                               {"terminal_norm_canonical", cv.canonical.norms.back()},
                               {"terminal_norm_original", cv.terminal_norm_original},
                               {"terminal_norm_mapped", cv.terminal_norm_mapped},
                               {"relative_terminal_norm", cv.terminal_norm_original / cv.initial_norm},
                               {"sup_discrepancy", cv.sup_discrepancy}};
  }

  RunConfig cfg_;
  ProblemSpec spec_;
  std::string spec_key_;
  std::string canonical_key_;
  json manifest_;
  std::shared_ptr<const CanonicalSystem> system_;
  std::shared_ptr<const EigenBasis> basis_;
  SlicePlan plan_;
  Synthesis synthesis_;
};

}  // namespace

Command parse_command(const std::string& name) {
  const auto& t = command_table();
  const auto it = t.find(name);
  if (it == t.end()) throw SchemaError("unknown command \"" + name + "\"");
  return it->second;
}

std::string command_name(Command c) {
  for (const auto& [name, cmd] : command_table())
    if (cmd == c) return name;
  return "unknown";
}

RunResult run(const RunConfig& config) {
  RunResult out;
  try {
    // Parsing comes first so that a schema error leaves no output behind.
    ProblemSpec spec = load_problem_spec(config.spec_path);
    if (config.out_dir.empty()) throw PreconditionError("no output directory given");
    fs::create_directories(config.out_dir);
    Session session(config, std::move(spec));
    try {
      session.execute();
    } catch (...) {
      out.manifest = session.manifest();
      throw;
    }
    out.manifest = session.manifest();
    out.message = "ok";
  } catch (const SchemaError& e) {
    out.exit_code = kExitSchema;
    out.message = std::string("schema error: ") + e.what();
  } catch (const NumericalError& e) {
    out.exit_code = kExitNumerical;
    out.message = std::string("numerical refusal: ") + e.what();
  } catch (const std::invalid_argument& e) {
    out.exit_code = kExitPrecondition;
    out.message = std::string("precondition refusal: ") + e.what();
  } catch (const std::logic_error& e) {
    out.exit_code = kExitPrecondition;
    out.message = std::string("precondition refusal: ") + e.what();
  } catch (const fs::filesystem_error& e) {
    out.exit_code = kExitPrecondition;
    out.message = std::string("precondition refusal: ") + e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitInternal;
    out.message = std::string("internal error: ") + e.what();
  }
  return out;
}

}  // namespace nullctl
