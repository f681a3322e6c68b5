#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scatpole/ball_oracle.hpp"
#include "scatpole/config.hpp"
#include "scatpole/edge_fem.hpp"
#include "scatpole/errors.hpp"
#include "scatpole/linalg.hpp"
#include "scatpole/mesh.hpp"
#include "scatpole/sim.hpp"

namespace scatpole {

namespace detail {

template <class F>
auto stage(const std::string& name, std::map<std::string, double>& timings, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto result = f();
      timings[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return result;
    }
  } catch (const Error& e) {
    throw Error("stage " + name + ": " + e.what());
  }
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

struct AssembledProblem {
  TetMesh mesh;
  MeshQualityReport quality;
  EdgeDofMap dofs;
  Eigen::SparseMatrix<double> S, M;
  DtnHandle dtn;
  int n_free = 0;

  FBuilder f_builder() const {
    return [this](Complex kappa) { return build_F(S, M, dtn, kappa); };
  }
  FBuilder df_builder() const {
    return [this](Complex kappa) { return build_dF(M, dtn, kappa); };
  }
};

struct SolveOutcome {
  ResonanceReport report;
  int n_free = 0;
  std::map<std::string, double> timings_ms;
  std::uint64_t config_hash = 0;
};

inline TetMesh build_geometry(const RunConfig& cfg) {
  if (cfg.geometry.kind == GeometrySpec::Kind::BallShell)
    return build_ball_shell(cfg.geometry.n_tan, cfg.geometry.n_rad, cfg.geometry.r_outer);
  std::ifstream is(cfg.geometry.msh_path);
  if (!is) throw ConfigError("cannot open mesh file " + cfg.geometry.msh_path);
  return load_msh(is, cfg.geometry.tag_map);
}

inline AssembledProblem assemble_problem(const RunConfig& cfg,
                                         std::map<std::string, double>& timings,
                                         std::optional<TetMesh> prebuilt = std::nullopt) {
  AssembledProblem p;
  p.mesh = detail::stage("mesh", timings, [&] {
    TetMesh m = prebuilt ? std::move(*prebuilt) : build_geometry(cfg);
    p.quality = validate(m);
    // R must clear the obstacle: every GammaD vertex strictly inside the sphere
    for (const auto& bf : m.boundary_faces)
      if (bf.tag == FaceTag::GammaD)
        for (int v : bf.v)
          if (m.vertices[v].norm() >= cfg.R)
            throw ConfigError("R = " + std::to_string(cfg.R) +
                              " does not enclose the obstacle (GammaD vertex at radius " +
                              std::to_string(m.vertices[v].norm()) + ")");
    return m;
  });
  detail::stage("assemble", timings, [&] {
    p.dofs = build_dof_map(p.mesh);
    p.n_free = p.dofs.n_free;
    p.S = assemble_stiffness(p.mesh, p.dofs, cfg.threads);
    p.M = assemble_mass(p.mesh, p.dofs, cfg.threads);
    p.dtn = make_dtn_handle(
        assemble_trace_matrix(p.mesh, p.dofs, cfg.truncation_n, cfg.R, cfg.threads));
  });
  return p;
}

inline SolveOutcome run_solve(const RunConfig& cfg, std::optional<TetMesh> prebuilt = std::nullopt) {
  SolveOutcome out;
  out.config_hash = cfg.hash();
  auto t0 = std::chrono::steady_clock::now();
  AssembledProblem p = assemble_problem(cfg, out.timings_ms, std::move(prebuilt));
  out.n_free = p.n_free;
  out.report = detail::stage("search", out.timings_ms, [&] {
    return run_pole_search(p.f_builder(), p.df_builder(), cfg.region, cfg.sim, cfg.seed,
                           cfg.threads, cfg.count_probe);
  });
  out.timings_ms["total"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Result files. The CSV body is deterministic for a given config and seed;
// wall-clock times go to the JSON summary only.

inline void write_solve_csv(std::ostream& os, const SolveOutcome& out) {
  os << "# scatpole-csv v1\n";
  os << "# kind=solve\n";
  os << "# config_hash=" << detail::hex64(out.config_hash) << "\n";
  os << "# n_dofs=" << out.n_free << "\n";
  os << "re,im,residual,cluster_id,cluster_size,count_probe\n";
  for (const auto& e : out.report.entries) {
    os << detail::fmt17(e.kappa.real()) << ',' << detail::fmt17(e.kappa.imag()) << ','
       << detail::fmt17(e.residual) << ',' << e.cluster_id << ',' << e.cluster_size << ','
       << e.count_probe << '\n';
  }
}

struct OracleOutcome {
  std::vector<OracleRoot> roots;
  std::uint64_t config_hash = 0;
  std::map<std::string, double> timings_ms;
};

inline OracleOutcome run_oracle(const RunConfig& cfg) {
  OracleOutcome out;
  out.config_hash = cfg.hash();
  detail::stage("oracle", out.timings_ms,
                [&] { out.roots = exact_ball_resonances(cfg.region, cfg.oracle_n_max); });
  return out;
}

inline void write_oracle_csv(std::ostream& os, const OracleOutcome& out) {
  os << "# scatpole-csv v1\n";
  os << "# kind=oracle\n";
  os << "# config_hash=" << detail::hex64(out.config_hash) << "\n";
  os << "n,kind,re,im,multiplicity\n";
  for (const auto& r : out.roots) {
    os << r.n << ',' << to_string(r.kind) << ',' << detail::fmt17(r.kappa.real()) << ','
       << detail::fmt17(r.kappa.imag()) << ',' << r.multiplicity << '\n';
  }
}

struct ConvergeChainRow {
  int level = 0;
  int n_dofs = 0;
  Complex kappa_hat;
  int cluster_size = 0;
  std::optional<double> abs_error;
  std::optional<double> order;
  bool ambiguous = false;
};

struct ConvergeOutcome {
  struct Chain {
    std::vector<ConvergeChainRow> rows;
    std::optional<Complex> reference;
  };
  std::vector<Chain> chains;
  std::vector<int> dof_counts;
  std::uint64_t config_hash = 0;
  std::map<std::string, double> timings_ms;
};

/// Run the pole search per mesh level, chain clusters across levels by
/// nearest neighbour, and attach convergence orders (against the exact ball
/// resonance when the geometry is the built-in ball shell).
inline ConvergeOutcome run_converge(const RunConfig& cfg) {
  bool ball = cfg.geometry.kind == GeometrySpec::Kind::BallShell;
  if (ball && !cfg.converge_levels.empty() && !cfg.converge_meshes.empty())
    throw ConfigError("converge: give converge.levels or converge.meshes, not both");
  std::size_t n_levels = ball ? cfg.converge_levels.size() : cfg.converge_meshes.size();
  if (ball && cfg.converge_levels.empty())
    throw ConfigError("converge: converge.levels is required for ball_shell geometry");
  if (!ball && cfg.converge_meshes.empty())
    throw ConfigError("converge: converge.meshes is required for msh geometry");
  if (n_levels < 3) throw ConfigError("converge: need at least 3 meshes");

  ConvergeOutcome out;
  out.config_hash = cfg.hash();
  auto t0 = std::chrono::steady_clock::now();

  std::vector<SolveOutcome> solves;
  for (std::size_t l = 0; l < n_levels; ++l) {
    RunConfig level_cfg = cfg;
    if (ball) {
      level_cfg.geometry.n_tan = cfg.converge_levels[l].first;
      level_cfg.geometry.n_rad = cfg.converge_levels[l].second;
    } else {
      level_cfg.geometry.msh_path = cfg.converge_meshes[l];
    }
    solves.push_back(run_solve(level_cfg));
    out.dof_counts.push_back(solves.back().n_free);
    if (l > 0 && out.dof_counts[l] <= out.dof_counts[l - 1])
      throw ConfigError("converge: DOF counts must be strictly increasing across levels");
  }

  // chains seeded by the coarsest level's clusters
  const auto& base = solves[0].report.clusters;
  for (std::size_t c = 0; c < base.size(); ++c) {
    ConvergeOutcome::Chain chain;
    Complex prev = base[c].mean;
    chain.rows.push_back({0, out.dof_counts[0], base[c].mean, base[c].size, std::nullopt,
                          std::nullopt, false});
    bool alive = true;
    for (std::size_t l = 1; l < n_levels && alive; ++l) {
      const auto& cl = solves[l].report.clusters;
      int best = -1, second = -1;
      for (std::size_t k = 0; k < cl.size(); ++k) {
        double d = std::abs(cl[k].mean - prev);
        if (best < 0 || d < std::abs(cl[std::size_t(best)].mean - prev)) {
          second = best;
          best = int(k);
        } else if (second < 0 || d < std::abs(cl[std::size_t(second)].mean - prev)) {
          second = int(k);
        }
      }
      if (best < 0) {
        alive = false;
        break;
      }
      bool ambiguous = second >= 0 &&
                       std::abs(cl[std::size_t(second)].mean - prev) <= cfg.sim.cluster_radius &&
                       std::abs(cl[std::size_t(best)].mean - prev) <= cfg.sim.cluster_radius;
      prev = cl[std::size_t(best)].mean;
      chain.rows.push_back({int(l), out.dof_counts[l], prev, cl[std::size_t(best)].size,
                            std::nullopt, std::nullopt, ambiguous});
    }
    if (chain.rows.size() == n_levels) out.chains.push_back(std::move(chain));
  }

  // reference values and orders
  std::vector<OracleRoot> oracle;
  if (ball) oracle = exact_ball_resonances(cfg.region, std::max(cfg.oracle_n_max, 6));
  for (auto& chain : out.chains) {
    if (ball && !oracle.empty()) {
      Complex finest = chain.rows.back().kappa_hat;
      const OracleRoot* nearest = &oracle[0];
      for (const auto& r : oracle)
        if (std::abs(r.kappa - finest) < std::abs(nearest->kappa - finest)) nearest = &r;
      chain.reference = nearest->kappa;
    }
    std::vector<std::pair<double, Complex>> rows;
    for (const auto& r : chain.rows) rows.emplace_back(double(r.n_dofs), r.kappa_hat);
    auto orders = convergence_orders(rows, chain.reference);
    for (std::size_t l = 0; l < chain.rows.size(); ++l) {
      chain.rows[l].order = orders[l];
      if (chain.reference)
        chain.rows[l].abs_error = std::abs(chain.rows[l].kappa_hat - *chain.reference);
    }
  }
  out.timings_ms["total"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline void write_converge_csv(std::ostream& os, const ConvergeOutcome& out) {
  os << "# scatpole-csv v1\n";
  os << "# kind=converge\n";
  os << "# config_hash=" << detail::hex64(out.config_hash) << "\n";
  os << "chain,level,n_dofs,re,im,cluster_size,abs_error,order,ambiguous\n";
  for (std::size_t c = 0; c < out.chains.size(); ++c) {
    for (const auto& r : out.chains[c].rows) {
      os << c << ',' << r.level << ',' << r.n_dofs << ',' << detail::fmt17(r.kappa_hat.real())
         << ',' << detail::fmt17(r.kappa_hat.imag()) << ',' << r.cluster_size << ',';
      if (r.abs_error) os << detail::fmt17(*r.abs_error);
      os << ',';
      if (r.order) os << detail::fmt17(*r.order);
      os << ',' << (r.ambiguous ? 1 : 0) << '\n';
    }
  }
}

inline nlohmann::json summary_json(const RunConfig& cfg, const std::map<std::string, double>& timings,
                                   int n_dofs, const std::string& kind) {
  nlohmann::json j;
  j["kind"] = kind;
  j["config_hash"] = detail::hex64(cfg.hash());
  nlohmann::json echo;
  std::istringstream canon(cfg.canonical());
  std::string line;
  while (std::getline(canon, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) echo[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = echo;
  j["threads"] = cfg.threads;
  if (n_dofs >= 0) j["n_dofs"] = n_dofs;
  nlohmann::json t;
  for (const auto& [k, v] : timings) t[k] = v;
  j["timings_ms"] = t;
  return j;
}

}  // namespace scatpole
