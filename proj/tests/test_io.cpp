#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "nullctl/errors.hpp"
#include "nullctl/io.hpp"

using namespace nullctl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double read_back(const std::string& text) {
  double v = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), v);
  return v;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("nullctl_test_io_" + name);
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

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

std::string schema_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

json minimal() { return json::parse(R"({"K": 2, "omega": [[0.3, 0.5]], "T": 1, "z0": {"sine_modes": [1]}})"); }

}  // namespace

TEST_CASE("format_real reads back bit-exactly") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(u(gen), static_cast<int>(u(gen)));
    CHECK(read_back(format_real(v)) == v);
  }
  CHECK(format_real(0.1) == "0.1");
  CHECK(read_back(format_real(std::numeric_limits<double>::denorm_min())) == std::numeric_limits<double>::denorm_min());
}

TEST_CASE("problem schema: defaults, profiles and z0 forms") {
  auto j = minimal();
  j["a"] = json{{"breakpoints", {0, 0.5, 1}}, {"values", {1, 2}}};
  const auto s = problem_spec_from_json(j);
  CHECK(s.a.cells() == 2);
  CHECK(s.b(0.5) == 0.0);
  CHECK(s.rho(0.5) == 1.0);
  CHECK(s.K == 2.0);
  CHECK(s.z0.mesh_n == kZ0SampleCells);
  CHECK(s.z0(0.5) == doctest::Approx(1.0));
  j["z0"] = json{{"values", {0, 2, 0}}};
  CHECK(problem_spec_from_json(j).z0(0.25) == doctest::Approx(1.0));

  const auto back = problem_spec_from_json(to_json(s));
  CHECK(back.a.breakpoints() == s.a.breakpoints());
  CHECK(back.a.values() == s.a.values());
  CHECK(back.omega.intervals()[0].right == 0.5);
  CHECK(back.z0.values == s.z0.values);
}

TEST_CASE("problem schema violations name the key") {
  auto unknown = minimal();
  unknown["d"] = 1;
  CHECK(schema_message([&] { problem_spec_from_json(unknown); }).find("unknown key \"d\"") != std::string::npos);
  auto missing = minimal();
  missing.erase("T");
  CHECK(schema_message([&] { problem_spec_from_json(missing); }).find("\"T\"") != std::string::npos);
  auto lowK = minimal();
  lowK["K"] = 0.5;
  CHECK(schema_message([&] { problem_spec_from_json(lowK); }).find("\"K\"") != std::string::npos);
  auto bad_omega = minimal();
  bad_omega["omega"] = json::array({json::array({0.5})});
  CHECK_FALSE(schema_message([&] { problem_spec_from_json(bad_omega); }).empty());
  auto both = minimal();
  both["z0"]["values"] = {0, 1};
  CHECK_FALSE(schema_message([&] { problem_spec_from_json(both); }).empty());
}

TEST_CASE("malformed JSON reports the byte offset") {
  const auto d = scratch("malformed");
  spit(d / "p.json", "{\"K\": 2,, }");
  const auto msg = schema_message([&] { load_problem_spec(d / "p.json"); });
  CHECK(msg.find("byte offset 9") != std::string::npos);
  CHECK_FALSE(schema_message([&] { load_problem_spec(d / "absent.json"); }).empty());
}

TEST_CASE("basis cache round-trips bit-exactly") {
  const auto d = scratch("basis");
  const auto b = solve_basis(Tabulated::from_profile(PiecewiseProfile({0, 0.3, 1}, {1, 2})), 8, Mesh(200));
  save_basis(b, d / "basis");
  const auto r = load_basis(d / "basis");
  CHECK(r.lambdas == b.lambdas);
  CHECK(r.eigvecs == b.eigvecs);
  CHECK(r.slopes == b.slopes);
  CHECK(r.mesh.nodes == b.mesh.nodes);
  save_basis(r, d / "again");
  CHECK(slurp(d / "again.csv") == slurp(d / "basis.csv"));
}

TEST_CASE("canonical cache round-trips bit-exactly") {
  const auto d = scratch("canonical");
  ProblemSpec s;
  s.K = 4;
  s.a = PiecewiseProfile({0, 0.5, 1}, {1, 4});
  s.b = PiecewiseProfile::constant(0.5);
  s.c = PiecewiseProfile::constant(0.5);
  const auto sys = build_canonical(s, {512});
  save_canonical(sys, d / "canon");
  const auto r = load_canonical(d / "canon");
  CHECK(r.x_grid == sys.x_grid);
  for (auto [p, q] : {std::pair{&r.w, &sys.w}, std::pair{&r.rho_tilde, &sys.rho_tilde},
                      std::pair{&r.x_of_y, &sys.x_of_y}, std::pair{&r.control_factor, &sys.control_factor}}) {
    CHECK(p->knots() == q->knots());
    CHECK(p->values() == q->values());
  }
  CHECK(r.L == sys.L);
  CHECK(r.shift_rate == sys.shift_rate);
  CHECK(r.K_tilde == sys.K_tilde);
  CHECK(r.omega_tilde.intervals()[0].left == sys.omega_tilde.intervals()[0].left);
}

TEST_CASE("corrupted, truncated and stale caches are refused") {
  const auto d = scratch("corrupt");
  const auto b = solve_basis(Tabulated::constant(1.0), 4, Mesh(100));
  save_basis(b, d / "basis");
  const auto csv = slurp(d / "basis.csv");
  const auto head = slurp(d / "basis.json");

  // A digit changed inside a value: the checksum of its array fails.
  auto digit = csv;
  const auto pos = digit.find_first_of("123456789", digit.find('\n', digit.find("# eigvecs")) + 1);
  digit[pos] = digit[pos] == '9' ? '8' : '9';
  spit(d / "basis.csv", digit);
  const auto m1 = schema_message([&] { load_basis(d / "basis"); });
  CHECK(m1.find("checksum mismatch") != std::string::npos);
  CHECK(m1.find("byte offsets") != std::string::npos);

  // A letter inside a value: the parser reports where.
  auto letter = csv;
  letter[pos] = 'x';
  spit(d / "basis.csv", letter);
  const auto m2 = schema_message([&] { load_basis(d / "basis"); });
  CHECK(m2.find("byte offset") != std::string::npos);

  spit(d / "basis.csv", csv.substr(0, csv.size() / 2));
  CHECK(schema_message([&] { load_basis(d / "basis"); }).find("truncated") != std::string::npos);

  spit(d / "basis.csv", csv);
  auto stale = json::parse(head);
  stale["version"] = kCacheVersion + 1;
  spit(d / "basis.json", stale.dump());
  CHECK(schema_message([&] { load_basis(d / "basis"); }).find("version stamp") != std::string::npos);

  spit(d / "basis.json", head);
  CHECK_NOTHROW(load_basis(d / "basis"));
  CHECK_THROWS_AS(load_canonical(d / "basis"), SchemaError);  // wrong kind
}

TEST_CASE("csv writer and checksums") {
  const auto d = scratch("csv");
  write_csv(d / "t.csv", {"x", "y"}, {{0.1, 2.0}, {1e-300, -3.5}}, "seed=0");
  CHECK(slurp(d / "t.csv") == "# seed=0\nx,y\n0.1,2\n1e-300,-3.5\n");
  CHECK(sha256_bytes("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_file(d / "t.csv") == sha256_bytes(slurp(d / "t.csv")));
}
