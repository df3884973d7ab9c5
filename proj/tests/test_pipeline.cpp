#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/io.hpp"
#include "nullctl/pipeline.hpp"

using namespace nullctl;
namespace fs = std::filesystem;

namespace {

const fs::path kSpecs = NULLCTL_SPECS;

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("nullctl_test_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + NULLCTL_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

RunConfig small(Command c, const fs::path& spec, const fs::path& out) {
  RunConfig cfg;
  cfg.command = c;
  cfg.spec_path = spec;
  cfg.out_dir = out;
  cfg.mesh_n = 400;
  cfg.modes = 30;
  return cfg;
}

}  // namespace

TEST_CASE("command names") {
  for (auto c : {Command::Validate, Command::Reduce, Command::Eigs, Command::Specineq, Command::LiftVerify,
                 Command::Synthesize, Command::Simulate, Command::FullPipeline})
    CHECK(parse_command(command_name(c)) == c);
  CHECK(command_name(Command::LiftVerify) == "lift-verify");
  CHECK_THROWS_AS(parse_command("solve"), SchemaError);
}

TEST_CASE("cli exit codes") {
  const auto d = scratch("cli");
  std::ofstream(d / "broken.json") << "{\"K\": 2,";
  CHECK(cli("validate --spec " + (d / "broken.json").string() + " --out " + (d / "o1").string()) == kExitSchema);
  CHECK_FALSE(fs::exists(d / "o1"));

  // a = 3 exceeds K = 2.
  std::ofstream(d / "bounds.json") << R"({"a": 3, "K": 2, "omega": [[0.3, 0.5]], "T": 1, "z0": {"sine_modes": [1]}})";
  CHECK(cli("validate --spec " + (d / "bounds.json").string() + " --out " + (d / "o2").string()) == kExitPrecondition);
  CHECK(fs::exists(d / "o2" / "manifest.json"));

  CHECK(cli("solve --spec " + (kSpecs / "constant.json").string() + " --out " + (d / "o3").string()) == kExitSchema);
  CHECK(cli("validate --spec " + (kSpecs / "constant.json").string() + " --out " + (d / "o4").string()) == kExitOk);
  CHECK(cli("validate --spec " + (kSpecs / "constant.json").string() + " --out " + (d / "o5").string() +
            " --bogus-flag") == kExitSchema);
}

TEST_CASE("run: a missing problem file is a schema error and writes nothing") {
  const auto d = scratch("missing");
  const auto r = run(small(Command::Validate, d / "absent.json", d / "out"));
  CHECK(r.exit_code == kExitSchema);
  CHECK_FALSE(r.message.empty());
  CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("run: specineq is reproducible and the manifest lists checksummed artifacts") {
  const auto d = scratch("specineq");
  const auto spec = kSpecs / "constant.json";
  const auto r1 = run(small(Command::Specineq, spec, d / "a"));
  REQUIRE(r1.exit_code == kExitOk);
  const auto r2 = run(small(Command::Specineq, spec, d / "b"));
  REQUIRE(r2.exit_code == kExitOk);
  CHECK(slurp(d / "a" / "observability.csv") == slurp(d / "b" / "observability.csv"));

  const auto manifest = nlohmann::json::parse(slurp(d / "a" / "manifest.json"));
  CHECK(manifest == r1.manifest);
  CHECK(manifest.at("command") == "specineq");
  // The key hashes the normalized problem, so formatting of the file does not matter.
  CHECK(manifest.at("spec_sha256") == sha256_bytes(to_json(load_problem_spec(spec)).dump()));
  REQUIRE(manifest.at("artifacts").is_array());
  CHECK_FALSE(manifest.at("artifacts").empty());
  for (const auto& a : manifest.at("artifacts")) {
    const auto file = d / "a" / a.at("file").get<std::string>();
    REQUIRE(fs::exists(file));
    CHECK(a.at("sha256") == sha256_file(file));
    const auto text = slurp(file);
    CHECK(text.rfind("# seed=0 spec_sha256=", 0) == 0);
  }
}

TEST_CASE("run: the second eigs run reads the cache and reproduces the artifact") {
  const auto d = scratch("cache");
  const auto spec = kSpecs / "rough.json";
  auto cfg = small(Command::Eigs, spec, d / "out");
  const auto r1 = run(cfg);
  REQUIRE(r1.exit_code == kExitOk);
  const auto first = slurp(d / "out" / "eigenvalues.csv");
  const auto r2 = run(cfg);
  REQUIRE(r2.exit_code == kExitOk);
  CHECK(slurp(d / "out" / "eigenvalues.csv") == first);
  auto cached = [](const nlohmann::json& m) {
    for (const auto& a : m.at("artifacts"))
      if (a.at("file") == "eigenvalues.csv") return a.at("cached").get<bool>();
    return false;
  };
  CHECK_FALSE(cached(r1.manifest));
  CHECK(cached(r2.manifest));
  cfg.use_cache = false;
  const auto r3 = run(cfg);
  CHECK_FALSE(cached(r3.manifest));
  CHECK(slurp(d / "out" / "eigenvalues.csv") == first);
}

TEST_CASE("run: a precondition violation maps to exit code 2") {
  const auto d = scratch("precondition");
  auto cfg = small(Command::Eigs, kSpecs / "constant.json", d / "out");
  cfg.modes = 300;  // more modes than mesh_n / 2
  const auto r = run(cfg);
  CHECK(r.exit_code == kExitPrecondition);
  CHECK_FALSE(r.message.empty());
}
