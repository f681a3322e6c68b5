// Command-line driver: solve | oracle | converge.
//
// Configuration comes from a flat key=value file (see README); MP_* environment
// variables override file values and command-line flags override both.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scatpole/driver.hpp"

namespace {

scatpole::RunConfig load_config(const std::string& path, const std::string& out_csv,
                                const std::string& out_summary, int threads, long seed) {
  scatpole::KeyValueConfig kv;
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw scatpole::ConfigError("cannot open config file " + path);
    kv = scatpole::KeyValueConfig::from_stream(is);
  }
  kv.apply_env_overrides();
  if (!out_csv.empty()) kv.set("out.csv", out_csv);
  if (!out_summary.empty()) kv.set("out.summary", out_summary);
  if (threads > 0) kv.set("threads", std::to_string(threads));
  if (seed >= 0) kv.set("seed", std::to_string(seed));
  return scatpole::RunConfig::from_kv(kv);
}

void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
  if (path.empty()) {
    fallback << content;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw scatpole::ConfigError("cannot open output file " + path);
  os << content;
}

void write_summary(const scatpole::RunConfig& cfg, const std::map<std::string, double>& timings,
                   int n_dofs, const std::string& kind) {
  if (cfg.out_summary.empty()) return;
  std::ofstream os(cfg.out_summary, std::ios::binary);
  if (!os) throw scatpole::ConfigError("cannot open summary file " + cfg.out_summary);
  os << scatpole::summary_json(cfg, timings, n_dofs, kind).dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scatpole: electromagnetic scattering pole solver"};
  app.require_subcommand(1);

  std::string config_path, out_path, summary_path;
  int threads = 0;
  long seed = -1;
  app.add_option("--config", config_path, "configuration file");
  app.add_option("--out", out_path, "result CSV path (default: stdout)");
  app.add_option("--summary", summary_path, "summary JSON path");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--seed", seed, "probe vector seed");

  auto* solve = app.add_subcommand("solve", "assemble and search the region for poles");
  auto* oracle = app.add_subcommand("oracle", "exact unit-ball resonances in the region");
  auto* converge = app.add_subcommand("converge", "pole search across a mesh sequence");
  long nmax_flag = -1;
  oracle->add_option("--nmax", nmax_flag, "largest harmonic order");

  CLI11_PARSE(app, argc, argv);

  try {
    scatpole::RunConfig cfg = load_config(config_path, out_path, summary_path, threads, seed);
    if (solve->parsed()) {
      auto out = scatpole::run_solve(cfg);
      std::ostringstream csv;
      scatpole::write_solve_csv(csv, out);
      emit(cfg.out_csv, csv.str(), std::cout);
      write_summary(cfg, out.timings_ms, out.n_free, "solve");
    } else if (oracle->parsed()) {
      if (nmax_flag > 0) cfg.oracle_n_max = int(nmax_flag);
      auto out = scatpole::run_oracle(cfg);
      std::ostringstream csv;
      scatpole::write_oracle_csv(csv, out);
      emit(cfg.out_csv, csv.str(), std::cout);
      write_summary(cfg, out.timings_ms, -1, "oracle");
    } else if (converge->parsed()) {
      auto out = scatpole::run_converge(cfg);
      std::ostringstream csv;
      scatpole::write_converge_csv(csv, out);
      emit(cfg.out_csv, csv.str(), std::cout);
      write_summary(cfg, out.timings_ms,
                    out.dof_counts.empty() ? -1 : out.dof_counts.back(), "converge");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
