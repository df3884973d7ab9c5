#pragma once

// Command orchestration: problem file in, CSV artifacts and a manifest out.
// Every file is written below out_dir; caches live in out_dir/cache.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace nullctl {

enum class Command { Validate, Reduce, Eigs, Specineq, LiftVerify, Synthesize, Simulate, FullPipeline };

/// Throws SchemaError for an unknown name.
Command parse_command(const std::string& name);
std::string command_name(Command c);

struct RunConfig {
  Command command = Command::FullPipeline;
  std::filesystem::path spec_path;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::size_t mesh_n = 2000;   // eigensolver cells
  std::size_t modes = 60;      // resolved modes, also N_max of the synthesis
  double dt = 1e-3;            // Crank–Nicolson step
  std::size_t cn_n = 1024;     // Crank–Nicolson cells
  double mu_max = 0.0;         // 0: half the largest resolved wavenumber
  double tol = 1e-6;           // slice-plan tail tolerance
  std::size_t jobs = 1;
  std::size_t growth_trials = 5;
  std::size_t cauchy_trials = 100;
  bool use_cache = true;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 1;
inline constexpr int kExitPrecondition = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInternal = 4;

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  nlohmann::json manifest;  // also written to out_dir/manifest.json on success
};

/// Never throws; errors map to exit codes 1 (schema), 2 (precondition),
/// 3 (numerical refusal) and 4 (anything else).  A schema error writes nothing.
RunResult run(const RunConfig& config);

}  // namespace nullctl
