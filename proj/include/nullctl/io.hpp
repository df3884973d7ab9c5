#pragma once

// Problem files, cache files and CSV output.
//
// Problem file (JSON object, unknown keys rejected):
//   "a", "b", "c", "rho": number (constant) or {"breakpoints": [...], "values": [...]};
//                         optional, defaulting to 1, 0, 0, 1
//   "K":     number >= 1
//   "omega": [[left, right], ...]
//   "T":     number > 0
//   "z0":    {"sine_modes": [c1, c2, ...]}  for  sum c_k sin(k pi x), or
//            {"values": [v0, ..., vn]}      nodal values on a uniform grid
//
// Cache files come in pairs: <stem>.json holds the version stamp, scalars and
// the byte range and SHA-256 of every array; <stem>.csv holds the arrays as
// "# name rows cols" headers followed by rows of shortest round-trip decimals,
// which read back bit-exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nullctl/coefficients.hpp"
#include "nullctl/eigensolver.hpp"
#include "nullctl/reduction.hpp"

namespace nullctl {

inline constexpr int kCacheVersion = 1;
inline constexpr std::size_t kZ0SampleCells = 4096;

/// Throws SchemaError naming the offending key.
ProblemSpec problem_spec_from_json(const nlohmann::json& j);
/// Throws SchemaError on unreadable files, malformed JSON or schema violations.
ProblemSpec load_problem_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ProblemSpec& spec);
nlohmann::json to_json(const PiecewiseProfile& profile);
nlohmann::json to_json(const ControlRegion& omega);

/// Shortest decimal text that reads back to the same double.
std::string format_real(double v);

/// Rows of reals under a header line, each value printed by format_real.
/// A nonempty comment goes first as "# comment".
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const std::string& comment = "");

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

/// Writes <stem>.json and <stem>.csv.
void save_basis(const EigenBasis& basis, const std::filesystem::path& stem);
void save_canonical(const CanonicalSystem& system, const std::filesystem::path& stem);

/// Throws SchemaError on a version-stamp mismatch, a wrong kind, a malformed
/// value (reporting its byte offset) or a checksum mismatch (reporting the
/// byte range of the affected array).
EigenBasis load_basis(const std::filesystem::path& stem);
CanonicalSystem load_canonical(const std::filesystem::path& stem);

}  // namespace nullctl
