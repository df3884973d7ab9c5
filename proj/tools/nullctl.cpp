// Command-line front end: nullctl <command> --spec PATH --out DIR [options].

#include <CLI11.hpp>

#include <iostream>

#include "nullctl/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Null-control pipeline for 1-D parabolic equations with piecewise-constant coefficients"};
  nullctl::RunConfig cfg;
  std::string command;
  std::string spec, out;
  bool no_cache = false;
  app.add_option("command", command,
                 "validate | reduce | eigs | specineq | lift-verify | synthesize | simulate | full-pipeline")
      ->required();
  app.add_option("--spec", spec, "problem file (JSON)")->required();
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", cfg.seed, "seed of every random draw")->capture_default_str();
  app.add_option("--mesh-n", cfg.mesh_n, "eigensolver cells")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--modes", cfg.modes, "resolved modes (also the synthesis mode budget)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--dt", cfg.dt, "Crank-Nicolson time step")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--cn-n", cfg.cn_n, "Crank-Nicolson cells")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--mu-max", cfg.mu_max, "largest frequency cutoff (0: half the largest resolved wavenumber)")
      ->capture_default_str();
  app.add_option("--tol", cfg.tol, "slice-plan tail tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--jobs", cfg.jobs, "worker count; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--no-cache", no_cache, "recompute the canonical system and the basis");

  try {
    app.parse(argc, argv);
    cfg.command = nullctl::parse_command(command);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? nullctl::kExitOk : nullctl::kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return nullctl::kExitSchema;
  }
  cfg.spec_path = spec;
  cfg.out_dir = out;
  cfg.use_cache = !no_cache;

  const auto result = nullctl::run(cfg);
  if (result.exit_code == nullctl::kExitOk) {
    std::cout << result.manifest["results"].dump(2) << "\n";
  } else {
    std::cerr << result.message << "\n";
  }
  return result.exit_code;
}
