#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scatpole/errors.hpp"
#include "scatpole/mesh.hpp"
#include "scatpole/sim.hpp"

namespace scatpole {

/// Flat dotted-key configuration. Precedence: file < MP_* environment
/// overrides < command-line flags.
class KeyValueConfig {
 public:
  static KeyValueConfig from_stream(std::istream& is) {
    KeyValueConfig cfg;
    std::string line;
    long ln = 0;
    while (std::getline(is, line)) {
      ++ln;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(ln, "expected key=value");
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a number: " + it->second);
    }
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': not a bool: " + it->second);
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  /// MP_SIM_QUAD_POINTS -> sim.quad_points etc.; only known keys are probed,
  /// so the dot/underscore mapping stays unambiguous.
  void apply_env_overrides() {
    for (const char* key : known_keys()) {
      std::string env = "MP_";
      for (const char* p = key; *p; ++p)
        env += *p == '.' ? '_' : char(std::toupper(static_cast<unsigned char>(*p)));
      if (const char* v = std::getenv(env.c_str())) values_[key] = v;
    }
  }

  static const std::vector<const char*>& known_keys() {
    static const std::vector<const char*> keys = {
        "geometry.kind", "geometry.n_tan", "geometry.n_rad", "geometry.r_outer",
        "geometry.msh_path", "geometry.gamma_d_tags", "geometry.gamma_r_tags", "R",
        "truncation_n", "region.a_min", "region.a_max", "region.b_min", "region.b_max",
        "sim.quad_points", "sim.max_depth", "sim.box_tol", "sim.tau_abs", "sim.tau_rel",
        "sim.probe_count", "sim.newton_max", "sim.cluster_radius", "sim.initial_grid",
        "sim.count_probe", "seed", "threads", "out.csv", "out.summary", "oracle.n_max",
        "converge.levels", "converge.meshes"};
    return keys;
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  static std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
  }
  std::map<std::string, std::string> values_;
};

struct GeometrySpec {
  enum class Kind { BallShell, Msh } kind = Kind::BallShell;
  int n_tan = 2, n_rad = 2;
  double r_outer = 1.3;
  std::string msh_path;
  std::map<int, FaceTag> tag_map;
};

struct RunConfig {
  GeometrySpec geometry;
  double R = 1.3;
  int truncation_n = 10;
  SearchRegion region{0.0, 2.0, -2.0, 0.0};
  SimParams sim;
  std::uint64_t seed = 7;
  int threads = 1;
  bool count_probe = true;
  std::string out_csv, out_summary;
  int oracle_n_max = 6;
  std::vector<std::pair<int, int>> converge_levels;  // ball shells (n_tan, n_rad)
  std::vector<std::string> converge_meshes;

  static RunConfig from_kv(const KeyValueConfig& kv) {
    RunConfig c;
    std::string kind = kv.get("geometry.kind", "ball_shell");
    if (kind == "ball_shell") {
      c.geometry.kind = GeometrySpec::Kind::BallShell;
    } else if (kind == "msh") {
      c.geometry.kind = GeometrySpec::Kind::Msh;
    } else {
      throw ConfigError("geometry.kind must be ball_shell or msh, got '" + kind + "'");
    }
    c.geometry.n_tan = int(kv.get_int("geometry.n_tan", 2));
    c.geometry.n_rad = int(kv.get_int("geometry.n_rad", 2));
    c.geometry.r_outer = kv.get_double("geometry.r_outer", 1.3);
    c.geometry.msh_path = kv.get("geometry.msh_path", "");
    for (const auto& t : kv.get_list("geometry.gamma_d_tags"))
      c.geometry.tag_map[std::stoi(t)] = FaceTag::GammaD;
    for (const auto& t : kv.get_list("geometry.gamma_r_tags"))
      c.geometry.tag_map[std::stoi(t)] = FaceTag::GammaR;
    c.R = kv.get_double("R", c.geometry.kind == GeometrySpec::Kind::BallShell
                                 ? c.geometry.r_outer
                                 : 1.0);
    c.truncation_n = int(kv.get_int("truncation_n", 10));
    c.region.a_min = kv.get_double("region.a_min", 0.0);
    c.region.a_max = kv.get_double("region.a_max", 2.0);
    c.region.b_min = kv.get_double("region.b_min", -2.0);
    c.region.b_max = kv.get_double("region.b_max", 0.0);
    c.sim.quad_points = int(kv.get_int("sim.quad_points", 16));
    c.sim.max_depth = int(kv.get_int("sim.max_depth", 32));
    c.sim.box_tol = kv.get_double("sim.box_tol", 1e-4);
    c.sim.tau_abs = kv.get_double("sim.tau_abs", 1e-3);
    c.sim.tau_rel = kv.get_double("sim.tau_rel", 10.0);
    c.sim.probe_count = int(kv.get_int("sim.probe_count", 8));
    c.sim.newton_max = int(kv.get_int("sim.newton_max", 20));
    c.sim.cluster_radius = kv.get_double("sim.cluster_radius", 0.02);
    c.sim.initial_grid = int(kv.get_int("sim.initial_grid", 8));
    c.count_probe = kv.get_bool("sim.count_probe", true);
    c.seed = std::uint64_t(kv.get_int("seed", 7));
    c.threads = int(kv.get_int("threads", 1));
    c.out_csv = kv.get("out.csv", "");
    c.out_summary = kv.get("out.summary", "");
    c.oracle_n_max = int(kv.get_int("oracle.n_max", 6));
    for (const auto& lvl : kv.get_list("converge.levels")) {
      auto x = lvl.find('x');
      if (x == std::string::npos)
        throw ConfigError("converge.levels entries must look like 4x4, got '" + lvl + "'");
      c.converge_levels.emplace_back(std::stoi(lvl.substr(0, x)), std::stoi(lvl.substr(x + 1)));
    }
    c.converge_meshes = kv.get_list("converge.meshes");
    c.validate();
    return c;
  }

  void validate() const {
    if (truncation_n < 1) throw ConfigError("truncation_n must be >= 1");
    if (!region.valid()) throw ConfigError("region is empty (check region.* keys)");
    if (sim.quad_points < 2 || sim.quad_points % 2 != 0)
      throw ConfigError("sim.quad_points must be a positive even number");
    if (sim.box_tol <= 0 || sim.tau_abs <= 0 || sim.tau_rel <= 0 || sim.cluster_radius <= 0)
      throw ConfigError("sim thresholds must be positive");
    if (sim.max_depth < 1 || sim.probe_count < 1 || sim.newton_max < 1 || sim.initial_grid < 1)
      throw ConfigError("sim counters must be positive");
    if (geometry.kind == GeometrySpec::Kind::BallShell) {
      if (geometry.n_tan < 1 || geometry.n_rad < 1)
        throw ConfigError("geometry.n_tan and geometry.n_rad must be >= 1");
      if (geometry.r_outer <= 1.0)
        throw ConfigError("geometry.r_outer must exceed the unit obstacle radius");
    } else {
      if (geometry.msh_path.empty()) throw ConfigError("geometry.msh_path is required");
      if (geometry.tag_map.empty())
        throw ConfigError("geometry.gamma_d_tags / geometry.gamma_r_tags are required");
    }
    if (R <= 0) throw ConfigError("R must be positive");
  }

  /// Canonical form of the semantically meaningful fields (out paths and
  /// thread count excluded: results must not depend on them).
  std::string canonical() const {
    char buf[512];
    std::string s;
    auto addf = [&](const char* k, double v) {
      std::snprintf(buf, sizeof buf, "%s=%.17g\n", k, v);
      s += buf;
    };
    auto addi = [&](const char* k, long v) {
      std::snprintf(buf, sizeof buf, "%s=%ld\n", k, v);
      s += buf;
    };
    auto adds = [&](const char* k, const std::string& v) { s += std::string(k) + "=" + v + "\n"; };
    adds("geometry.kind", geometry.kind == GeometrySpec::Kind::BallShell ? "ball_shell" : "msh");
    if (geometry.kind == GeometrySpec::Kind::BallShell) {
      addi("geometry.n_tan", geometry.n_tan);
      addi("geometry.n_rad", geometry.n_rad);
      addf("geometry.r_outer", geometry.r_outer);
    } else {
      adds("geometry.msh_path", geometry.msh_path);
      for (const auto& [tag, ft] : geometry.tag_map)
        adds(("geometry.tag." + std::to_string(tag)).c_str(), to_string(ft));
    }
    addf("R", R);
    addi("truncation_n", truncation_n);
    addf("region.a_min", region.a_min);
    addf("region.a_max", region.a_max);
    addf("region.b_min", region.b_min);
    addf("region.b_max", region.b_max);
    addi("sim.quad_points", sim.quad_points);
    addi("sim.max_depth", sim.max_depth);
    addf("sim.box_tol", sim.box_tol);
    addf("sim.tau_abs", sim.tau_abs);
    addf("sim.tau_rel", sim.tau_rel);
    addi("sim.probe_count", sim.probe_count);
    addi("sim.newton_max", sim.newton_max);
    addf("sim.cluster_radius", sim.cluster_radius);
    addi("sim.initial_grid", sim.initial_grid);
    addi("sim.count_probe", count_probe ? 1 : 0);
    addi("seed", long(seed));
    addi("oracle.n_max", oracle_n_max);
    for (const auto& [a, b] : converge_levels)
      adds("converge.level", std::to_string(a) + "x" + std::to_string(b));
    for (const auto& m : converge_meshes) adds("converge.mesh", m);
    return s;
  }

  /// FNV-1a 64 over the canonical form.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

}  // namespace scatpole
