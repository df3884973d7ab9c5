#include "nullctl/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "nullctl/errors.hpp"

namespace nullctl {

using nlohmann::json;

namespace {

double real_field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw SchemaError("missing key \"" + key + "\"");
  if (!j[key].is_number()) throw SchemaError("\"" + key + "\" must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw SchemaError("\"" + key + "\" must be finite");
  return v;
}

std::vector<double> real_array(const json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError(what + " must be an array of numbers");
    out.push_back(v.get<double>());
    if (!std::isfinite(out.back())) throw SchemaError(what + " must contain finite numbers");
  }
  return out;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw SchemaError("unknown key \"" + it.key() + "\" in " + where);
}

PiecewiseProfile profile_field(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return PiecewiseProfile::constant(fallback);
  const auto& p = j[key];
  if (p.is_number()) {
    const double v = p.get<double>();
    if (!std::isfinite(v)) throw SchemaError("\"" + key + "\" must be finite");
    return PiecewiseProfile::constant(v);
  }
  if (!p.is_object()) throw SchemaError("\"" + key + "\" must be a number or {breakpoints, values}");
  reject_unknown(p, {"breakpoints", "values"}, "\"" + key + "\"");
  if (!p.contains("breakpoints") || !p.contains("values"))
    throw SchemaError("\"" + key + "\" needs both \"breakpoints\" and \"values\"");
  try {
    return PiecewiseProfile(real_array(p["breakpoints"], key + ".breakpoints"), real_array(p["values"], key + ".values"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("\"" + key + "\": " + e.what());
  }
}

ControlRegion region_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SchemaError(what + " must be a nonempty array of [left, right] pairs");
  std::vector<Interval> ivs;
  for (const auto& iv : j) {
    const auto pair = real_array(iv, what + " entry");
    if (pair.size() != 2) throw SchemaError(what + " entries must be [left, right] pairs");
    ivs.push_back({pair[0], pair[1]});
  }
  try {
    return ControlRegion(std::move(ivs));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

NodalFunction z0_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("\"z0\" must be an object");
  reject_unknown(j, {"sine_modes", "values"}, "\"z0\"");
  if (j.contains("sine_modes") == j.contains("values"))
    throw SchemaError("\"z0\" needs exactly one of \"sine_modes\" and \"values\"");
  if (j.contains("values")) {
    auto v = real_array(j["values"], "z0.values");
    if (v.size() < 2) throw SchemaError("z0.values needs at least two nodal values");
    NodalFunction f;
    f.mesh_n = v.size() - 1;
    f.values = std::move(v);
    return f;
  }
  const auto c = real_array(j["sine_modes"], "z0.sine_modes");
  if (c.empty()) throw SchemaError("z0.sine_modes must be nonempty");
  return NodalFunction::sample(kZ0SampleCells, [&](double x) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * std::sin(static_cast<double>(k + 1) * std::numbers::pi * x);
    return s;
  });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot write " + path.string());
  out << bytes;
  if (!out) throw PreconditionError("write failed for " + path.string());
}

// Array sections of a cache file.
class CacheWriter {
 public:
  void add(const std::string& name, const Eigen::MatrixXd& a) {
    const std::size_t start = csv_.size();
    std::string s = "# " + name + " " + std::to_string(a.rows()) + " " + std::to_string(a.cols()) + "\n";
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (j) s += ',';
        s += format_real(a(i, j));
      }
      s += '\n';
    }
    csv_ += s;
    index_.push_back({{"name", name},
                      {"rows", a.rows()},
                      {"cols", a.cols()},
                      {"offset", start},
                      {"length", s.size()},
                      {"sha256", sha256_bytes(s)}});
  }
  void add(const std::string& name, const std::vector<double>& v) {
    add(name, Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(v.size()), 1)));
  }
  void add(const std::string& name, const Tabulated& t) {
    add(name + ".knots", t.knots());
    add(name + ".values", t.values());
  }

  void save(const std::filesystem::path& stem, const std::string& kind, json scalars) const {
    json head{{"format", "nullctl-cache"}, {"version", kCacheVersion}, {"kind", kind}, {"csv", stem.filename().string() + ".csv"}};
    head["scalars"] = std::move(scalars);
    head["arrays"] = index_;
    write_file(stem.string() + ".csv", csv_);
    write_file(stem.string() + ".json", head.dump(1) + "\n");
  }

 private:
  std::string csv_;
  json index_ = json::array();
};

class CacheReader {
 public:
  CacheReader(const std::filesystem::path& stem, const std::string& kind) {
    const auto head_path = stem.string() + ".json";
    try {
      head_ = json::parse(read_file(head_path));
    } catch (const json::parse_error& e) {
      throw SchemaError("corrupted cache header " + head_path + " at byte offset " + std::to_string(e.byte) + ": " +
                        e.what());
    }
    try {
      if (head_.at("format") != "nullctl-cache") throw SchemaError("not a cache file: " + head_path);
      const int version = head_.at("version").get<int>();
      if (version != kCacheVersion)
        throw SchemaError("cache version stamp " + std::to_string(version) + " does not match " +
                          std::to_string(kCacheVersion) + " in " + head_path);
      if (head_.at("kind") != kind)
        throw SchemaError("cache " + head_path + " holds " + head_.at("kind").get<std::string>() + ", not " + kind);
      for (const auto& a : head_.at("arrays")) index_[a.at("name").get<std::string>()] = a;
    } catch (const json::exception& e) {
      throw SchemaError("malformed cache header " + head_path + ": " + e.what());
    }
    csv_path_ = stem.string() + ".csv";
    csv_ = read_file(csv_path_);
  }

  double scalar(const std::string& key) const {
    try {
      return head_.at("scalars").at(key).get<double>();
    } catch (const json::exception& e) {
      throw SchemaError("cache scalar \"" + key + "\" unreadable: " + e.what());
    }
  }
  const json& raw_scalar(const std::string& key) const {
    try {
      return head_.at("scalars").at(key);
    } catch (const json::exception& e) {
      throw SchemaError("cache scalar \"" + key + "\" missing: " + e.what());
    }
  }

  Eigen::MatrixXd matrix(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw SchemaError("cache " + csv_path_ + " lacks array " + name);
    const json& a = it->second;
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    const auto off = a.at("offset").get<std::size_t>();
    const auto len = a.at("length").get<std::size_t>();
    if (off + len > csv_.size())
      throw SchemaError("cache " + csv_path_ + " truncated at byte offset " + std::to_string(csv_.size()) +
                        " inside array " + name);
    Eigen::MatrixXd m(rows, cols);
    const char* base = csv_.data();
    const char* p = base + off;
    const char* end = p + len;
    const std::string header = "# " + name + " " + std::to_string(rows) + " " + std::to_string(cols) + "\n";
    if (static_cast<std::size_t>(end - p) < header.size() || std::string(p, header.size()) != header)
      throw SchemaError("corrupted cache " + csv_path_ + " at byte offset " + std::to_string(off) +
                        ": bad header for array " + name);
    p += header.size();
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v = 0.0;
        const auto res = std::from_chars(p, end, v);
        const char want = j + 1 < cols ? ',' : '\n';
        if (res.ec != std::errc() || res.ptr == end || *res.ptr != want)
          throw SchemaError("corrupted cache " + csv_path_ + " at byte offset " +
                            std::to_string((res.ec == std::errc() ? res.ptr : p) - base) + " in array " + name);
        m(i, j) = v;
        p = res.ptr + 1;
      }
    if (p != end)
      throw SchemaError("corrupted cache " + csv_path_ + " at byte offset " + std::to_string(p - base) +
                        ": trailing data in array " + name);
    if (sha256_bytes(std::string(base + off, len)) != a.at("sha256").get<std::string>())
      throw SchemaError("corrupted cache " + csv_path_ + ": checksum mismatch for array " + name + " at byte offsets " +
                        std::to_string(off) + ".." + std::to_string(off + len));
    return m;
  }

  std::vector<double> vector(const std::string& name) const {
    const auto m = matrix(name);
    if (m.cols() != 1) throw SchemaError("cache array " + name + " is not a column");
    return {m.data(), m.data() + m.size()};
  }

  Tabulated tabulated(const std::string& name) const {
    try {
      return Tabulated(vector(name + ".knots"), vector(name + ".values"));
    } catch (const std::invalid_argument& e) {
      throw SchemaError("cache table " + name + ": " + e.what());
    }
  }

 private:
  json head_;
  std::map<std::string, json> index_;
  std::string csv_path_;
  std::string csv_;
};

}  // namespace

ProblemSpec problem_spec_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("problem file must hold a JSON object");
  reject_unknown(j, {"a", "b", "c", "rho", "K", "omega", "T", "z0"}, "problem file");
  ProblemSpec s;
  s.a = profile_field(j, "a", 1.0);
  s.b = profile_field(j, "b", 0.0);
  s.c = profile_field(j, "c", 0.0);
  s.rho = profile_field(j, "rho", 1.0);
  s.K = real_field(j, "K");
  if (s.K < 1.0) throw SchemaError("\"K\" must be at least 1");
  if (!j.contains("omega")) throw SchemaError("missing key \"omega\"");
  s.omega = region_from_json(j["omega"], "\"omega\"");
  s.T = real_field(j, "T");
  if (!(s.T > 0.0)) throw SchemaError("\"T\" must be positive");
  if (!j.contains("z0")) throw SchemaError("missing key \"z0\"");
  s.z0 = z0_from_json(j["z0"]);
  return s;
}

ProblemSpec load_problem_spec(const std::filesystem::path& path) {
  const auto text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("malformed JSON in " + path.string() + " at byte offset " + std::to_string(e.byte));
  }
  return problem_spec_from_json(j);
}

json to_json(const PiecewiseProfile& p) { return {{"breakpoints", p.breakpoints()}, {"values", p.values()}}; }

json to_json(const ControlRegion& omega) {
  json out = json::array();
  for (const auto& iv : omega.intervals()) out.push_back({iv.left, iv.right});
  return out;
}

json to_json(const ProblemSpec& s) {
  return {{"a", to_json(s.a)},     {"b", to_json(s.b)},   {"c", to_json(s.c)},
          {"rho", to_json(s.rho)}, {"K", s.K},            {"omega", to_json(s.omega)},
          {"T", s.T},              {"z0", {{"values", s.z0.values}}}};
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const std::string& comment) {
  std::string s;
  if (!comment.empty()) s += "# " + comment + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  s += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) s += ',';
      s += format_real(r[i]);
    }
    s += '\n';
  }
  write_file(path, s);
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_bytes(read_file(path)); }

void save_basis(const EigenBasis& basis, const std::filesystem::path& stem) {
  CacheWriter w;
  w.add("lambdas", basis.lambdas);
  w.add("eigvecs", basis.eigvecs);
  w.add("slopes", basis.slopes);
  w.add("rho", basis.rho);
  w.save(stem, "basis", {{"mesh_n", basis.mesh.n}, {"modes", basis.m()}});
}

EigenBasis load_basis(const std::filesystem::path& stem) {
  const CacheReader r(stem, "basis");
  const auto n = static_cast<std::size_t>(r.scalar("mesh_n"));
  const auto m = static_cast<std::size_t>(r.scalar("modes"));
  EigenBasis b;
  b.mesh = Mesh(n);
  b.rho = r.tabulated("rho");
  b.lambdas = r.vector("lambdas");
  b.eigvecs = r.matrix("eigvecs");
  b.slopes = r.matrix("slopes");
  const auto rows = static_cast<Eigen::Index>(n + 1), cols = static_cast<Eigen::Index>(m);
  if (b.lambdas.size() != m || b.eigvecs.rows() != rows || b.eigvecs.cols() != cols || b.slopes.rows() != rows ||
      b.slopes.cols() != cols)
    throw SchemaError("cache " + stem.string() + ": array shapes disagree with mesh_n and modes");
  return b;
}

void save_canonical(const CanonicalSystem& s, const std::filesystem::path& stem) {
  CacheWriter w;
  w.add("x_grid", s.x_grid);
  w.add("B", s.B);
  w.add("w", s.w);
  w.add("y_of_x", s.y_of_x);
  w.add("x_of_y", s.x_of_y);
  w.add("rho_tilde", s.rho_tilde);
  w.add("control_factor", s.control_factor);
  w.save(stem, "canonical",
         {{"L", s.L},
          {"shift_rate", s.shift_rate},
          {"K", s.K},
          {"K_tilde", s.K_tilde},
          {"log_K_tilde_bound", s.log_K_tilde_bound},
          {"omega", to_json(s.omega)},
          {"omega_tilde", to_json(s.omega_tilde)}});
}

CanonicalSystem load_canonical(const std::filesystem::path& stem) {
  const CacheReader r(stem, "canonical");
  CanonicalSystem s;
  s.x_grid = r.vector("x_grid");
  s.B = r.tabulated("B");
  s.w = r.tabulated("w");
  s.y_of_x = r.tabulated("y_of_x");
  s.x_of_y = r.tabulated("x_of_y");
  s.rho_tilde = r.tabulated("rho_tilde");
  s.control_factor = r.tabulated("control_factor");
  s.L = r.scalar("L");
  s.shift_rate = r.scalar("shift_rate");
  s.K = r.scalar("K");
  s.K_tilde = r.scalar("K_tilde");
  s.log_K_tilde_bound = r.scalar("log_K_tilde_bound");
  s.omega = region_from_json(r.raw_scalar("omega"), "cached omega");
  s.omega_tilde = region_from_json(r.raw_scalar("omega_tilde"), "cached omega_tilde");
  return s;
}

}  // namespace nullctl
