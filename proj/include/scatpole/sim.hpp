#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "scatpole/errors.hpp"
#include "scatpole/linalg.hpp"
#include "scatpole/parallel.hpp"
#include "scatpole/rng.hpp"

namespace scatpole {

/// Rectangle [a_min, a_max) x (b_min, b_max) in the complex plane.
struct SearchRegion {
  double a_min, a_max, b_min, b_max;

  bool valid() const { return a_min < a_max && b_min < b_max; }

  /// Half-open membership with snapping at the closed left edge, so roots
  /// that sit on a_min up to rounding are kept.
  bool contains(Complex z) const {
    double re = z.real(), im = z.imag();
    double snap = 1e-12 * std::max({1.0, std::abs(a_min), std::abs(a_max)});
    if (std::abs(re - a_min) <= snap) re = a_min;
    return re >= a_min && re < a_max && im > b_min && im < b_max;
  }

  Complex center() const { return {0.5 * (a_min + a_max), 0.5 * (b_min + b_max)}; }
};

struct SimParams {
  int quad_points = 16;       // M, contour nodes (even)
  int max_depth = 32;
  double box_tol = 1e-4;      // final box half-width
  double tau_abs = 1e-3;
  double tau_rel = 10.0;
  int probe_count = 8;        // columns for the rank probe
  int newton_max = 20;
  double cluster_radius = 0.02;
  int initial_grid = 8;       // initial_grid^2 level-0 boxes
};

struct Box {
  Complex center;
  double hw_re = 0, hw_im = 0;
  int depth = 0;
  bool suspect = false;

  double circumradius() const { return std::hypot(hw_re, hw_im); }
  bool contains(Complex z) const {
    return std::abs(z.real() - center.real()) <= hw_re &&
           std::abs(z.imag() - center.imag()) <= hw_im;
  }
};

using FBuilder = std::function<ComplexSparseMatrix(Complex)>;

namespace detail {

/// Factorization at a contour node with the pole/singularity jitter: the
/// node is pushed radially outward by r*1e-6 at most three times.
template <class Use>
bool with_contour_node(const FBuilder& builder, Complex z0, double r, double angle, Use&& use) {
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Complex z = z0 + r * (1.0 + attempt * 1e-6) * Complex(std::cos(angle), std::sin(angle));
    try {
      Factorization fact(builder(z));
      use(z, fact);
      return true;
    } catch (const CoefficientPoleError&) {
    } catch (const SingularMatrixError&) {
    }
  }
  return false;
}

}  // namespace detail

/// Trapezoid discretization of (1/2 pi i) contour integral of F(z)^{-1} f
/// over the circumcircle of the box: delta = || (1/M) sum (z_q - z_0)
/// F(z_q)^{-1} f ||. Large delta flags an eigenvalue nearby; for an analytic
/// resolvent the sum decays geometrically in M.
inline double indicator(const FBuilder& builder, const Box& box, const Eigen::VectorXcd& f, int M,
                        bool* suspect = nullptr) {
  const double two_pi = 6.28318530717958647692;
  double r = box.circumradius();
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(f.size());
  bool bad = false;
  for (int q = 0; q < M; ++q) {
    bool ok = detail::with_contour_node(builder, box.center, r, two_pi * q / M,
                                        [&](Complex z, const Factorization& fact) {
                                          acc += (z - box.center) * fact.solve(f);
                                        });
    if (!ok) bad = true;
  }
  if (suspect) *suspect = bad;
  return acc.norm() / M;
}

struct Candidate {
  Complex kappa;            // final box center
  Box final_box;
  double indicator_value = 0;
  std::vector<Complex> trail;  // box centers, coarse to fine
};

/// Recursive box subdivision driven by the indicator. Boxes are kept when
/// their indicator clears max(tau_abs, min(tau_rel * median, max/tau_rel));
/// the cap keeps root-straddling sibling boxes alive when every box at a
/// level sees the eigenvalue.
inline std::vector<Candidate> sim_search(const FBuilder& builder, const SearchRegion& region,
                                         const SimParams& params, std::uint64_t seed,
                                         int threads = 1) {
  if (!region.valid()) throw DomainError("sim_search: empty region");
  const Eigen::Index dim = builder(region.center()).n;
  const Eigen::VectorXcd f = probe_vector(dim, seed);

  struct WorkBox {
    Box box;
    std::vector<Complex> trail;
  };
  std::vector<WorkBox> level;
  {
    int g = params.initial_grid;
    double hw_re = (region.a_max - region.a_min) / (2.0 * g);
    double hw_im = (region.b_max - region.b_min) / (2.0 * g);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        Box b;
        b.center = Complex(region.a_min + (2 * i + 1) * hw_re, region.b_min + (2 * j + 1) * hw_im);
        b.hw_re = hw_re;
        b.hw_im = hw_im;
        b.depth = 0;
        level.push_back({b, {}});
      }
  }

  std::vector<Candidate> out;
  for (int depth = 0; depth <= params.max_depth && !level.empty(); ++depth) {
    std::vector<double> delta(level.size(), 0.0);
    parallel_for(level.size(), threads, [&](std::size_t i) {
      bool bad = false;
      delta[i] = indicator(builder, level[i].box, f, params.quad_points, &bad);
      level[i].box.suspect = bad;
    });

    std::vector<double> sorted = delta;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted.empty() ? 0.0
                                   : (sorted.size() % 2 ? sorted[sorted.size() / 2]
                                                        : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                                                 sorted[sorted.size() / 2]));
    double dmax = sorted.empty() ? 0.0 : sorted.back();
    double tau =
        std::max(params.tau_abs, std::min(params.tau_rel * median, dmax / params.tau_rel));

    std::vector<WorkBox> kept;
    std::vector<double> kept_delta;
    for (std::size_t i = 0; i < level.size(); ++i)
      if (delta[i] >= tau || level[i].box.suspect) {
        kept.push_back(std::move(level[i]));
        kept_delta.push_back(delta[i]);
      }
    if (kept.empty()) return out;

    bool final_level = std::max(kept[0].box.hw_re, kept[0].box.hw_im) <= params.box_tol ||
                       depth == params.max_depth;
    if (final_level) {
      for (std::size_t i = 0; i < kept.size(); ++i) {
        Candidate c;
        c.kappa = kept[i].box.center;
        c.final_box = kept[i].box;
        c.indicator_value = kept_delta[i];
        c.trail = kept[i].trail;
        c.trail.push_back(kept[i].box.center);
        out.push_back(std::move(c));
      }
      return out;
    }

    std::vector<WorkBox> next;
    next.reserve(kept.size() * 4);
    for (auto& wb : kept) {
      auto trail = wb.trail;
      trail.push_back(wb.box.center);
      for (int si = -1; si <= 1; si += 2)
        for (int sj = -1; sj <= 1; sj += 2) {
          Box b;
          b.hw_re = wb.box.hw_re / 2;
          b.hw_im = wb.box.hw_im / 2;
          b.center = wb.box.center + Complex(si * b.hw_re, sj * b.hw_im);
          b.depth = wb.box.depth + 1;
          next.push_back({b, trail});
        }
    }
    level = std::move(next);
  }
  return out;
}

struct RefinedPair {
  Complex kappa;
  Eigen::VectorXcd v;
  double residual = 0;
  bool converged = false;
  int iterations = 0;
};

/// Nonlinear inverse iteration with the complex-symmetric Rayleigh
/// functional: v <- F(k)^{-1} F'(k) v, k <- k - (v^T F v)/(v^T F' v).
inline RefinedPair refine_eigenpair(const FBuilder& builder, const FBuilder& d_builder,
                                    Complex kappa0, const SimParams& params, std::uint64_t seed) {
  Complex kappa = kappa0;
  ComplexSparseMatrix F = builder(kappa);
  Eigen::VectorXcd v = probe_vector(F.n, seed ^ 0x5851f42d4c957f2dULL);
  RefinedPair best;
  best.kappa = kappa;
  best.v = v;
  best.residual = std::numeric_limits<double>::infinity();

  for (int it = 0; it < params.newton_max; ++it) {
    ComplexSparseMatrix Fp = d_builder(kappa);
    std::optional<Factorization> fact;
    try {
      fact.emplace(F);
    } catch (const SingularMatrixError&) {
      // kappa is numerically an eigenvalue; nudge and refactor
      kappa += 1e-10 * (1.0 + std::abs(kappa));
      F = builder(kappa);
      fact.emplace(F);
    }
    Eigen::VectorXcd w = fact->solve(Fp.apply(v));
    v = w / w.norm();
    double res = F.apply(v).norm();
    ++best.iterations;
    if (res < best.residual) {
      best.kappa = kappa;
      best.v = v;
      best.residual = res;
    }
    if (res <= 1e-10) {
      best.converged = true;
      return best;
    }
    Complex num = v.cwiseProduct(F.apply(v)).sum();   // v^T F v (no conjugation)
    Complex den = v.cwiseProduct(Fp.apply(v)).sum();
    if (den == 0.0) break;
    kappa -= num / den;
    F = builder(kappa);
  }
  // report the residual at the returned pair
  best.residual = builder(best.kappa).apply(best.v).norm();
  best.converged = best.residual <= 1e-10;
  return best;
}

struct CountResult {
  int count = 0;
  bool saturated = false;  // rank hit the probe count; increase probes
};

/// Rank of the zeroth contour moment A_0 = (1/M) sum (z_q - z_0) F^{-1} V
/// with ell random probe columns: the number of eigenvalues (with
/// multiplicity) enclosed by the box circumcircle.
inline CountResult count_in_box(const FBuilder& builder, const Box& box, int ell, int M,
                                std::uint64_t seed) {
  const double two_pi = 6.28318530717958647692;
  const Eigen::Index dim = builder(box.center).n;
  Rng rng(seed ^ 0x2545f4914f6cdd1dULL);
  Eigen::MatrixXcd V(dim, ell);
  for (int j = 0; j < ell; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) V(i, j) = rng.normal_complex();
    V.col(j) /= V.col(j).norm();
  }
  double r = box.circumradius();
  Eigen::MatrixXcd A0 = Eigen::MatrixXcd::Zero(dim, ell);
  for (int q = 0; q < M; ++q) {
    bool ok = detail::with_contour_node(builder, box.center, r, two_pi * q / M,
                                        [&](Complex z, const Factorization& fact) {
                                          A0 += (z - box.center) * fact.solve(V);
                                        });
    if (!ok) throw SingularMatrixError("count_in_box: persistent singular contour node");
  }
  A0 /= double(M);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A0);
  const auto& sv = svd.singularValues();
  CountResult res;
  if (sv.size() == 0 || sv[0] <= 0) return res;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] >= 1e-8 * sv[0]) ++res.count;
  res.saturated = res.count == ell;
  return res;
}

struct Cluster {
  Complex mean;
  std::vector<int> members;  // indices into the input list
};

/// Single-linkage clustering at the given radius; cluster value is the
/// arithmetic mean of its members.
inline std::vector<Cluster> cluster_and_average(const std::vector<Complex>& points,
                                                double radius) {
  const int n = int(points.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(points[i] - points[j]) <= radius) parent[find(i)] = find(j);
  std::vector<Cluster> out;
  std::vector<int> cluster_of(n, -1);
  for (int i = 0; i < n; ++i) {
    int root = find(i);
    int& c = cluster_of[root];
    if (c < 0) {
      c = int(out.size());
      out.push_back({});
    }
    out[c].members.push_back(i);
  }
  for (auto& c : out) {
    Complex s = 0;
    for (int i : c.members) s += points[i];
    c.mean = s / double(c.members.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search -> refine -> cluster pipeline shared by the driver and the tests.

struct ResonanceEntry {
  Complex kappa;
  double residual = 0;
  bool converged = false;
  Box final_box;
  std::vector<Complex> trail;
  int cluster_id = -1;
  int cluster_size = 0;
  Complex cluster_mean;
  int count_probe = -1;  // -1 when the probe was not run
};

struct ResonanceReport {
  struct ClusterInfo {
    Complex mean;
    int size = 0;
    int count_probe = -1;
    bool count_saturated = false;
  };
  std::vector<ResonanceEntry> entries;
  std::vector<ClusterInfo> clusters;
  int n_candidates = 0;
  int n_converged = 0;
};

inline ResonanceReport run_pole_search(const FBuilder& builder, const FBuilder& d_builder,
                                       const SearchRegion& region, const SimParams& params,
                                       std::uint64_t seed, int threads = 1,
                                       bool run_count_probe = true) {
  ResonanceReport report;
  auto candidates = sim_search(builder, region, params, seed, threads);
  report.n_candidates = int(candidates.size());
  if (candidates.empty()) return report;

  std::vector<RefinedPair> refined(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    refined[i] = refine_eigenpair(builder, d_builder, candidates[i].kappa, params, seed);
  });

  // converged, in-region, deduplicated (several final boxes usually land on
  // one root; prefer the candidate whose box contains it, then best residual)
  std::vector<int> selected;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    if (!refined[i].converged || refined[i].residual > 1e-8) continue;
    if (!region.contains(refined[i].kappa)) continue;
    auto rank = [&](std::size_t k) {
      return std::make_pair(!candidates[k].final_box.contains(refined[k].kappa),
                            refined[k].residual);
    };
    bool dup = false;
    for (int& s : selected) {
      if (std::abs(refined[i].kappa - refined[std::size_t(s)].kappa) < 1e-6) {
        dup = true;
        if (rank(i) < rank(std::size_t(s))) s = int(i);
        break;
      }
    }
    if (!dup) selected.push_back(int(i));
  }
  report.n_converged = int(selected.size());

  std::vector<Complex> kappas;
  for (int s : selected) kappas.push_back(refined[std::size_t(s)].kappa);
  auto clusters = cluster_and_average(kappas, params.cluster_radius);

  report.clusters.resize(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    report.clusters[c].mean = clusters[c].mean;
    report.clusters[c].size = int(clusters[c].members.size());
  }
  if (run_count_probe) {
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      double spread = 0;
      for (int i : clusters[c].members)
        spread = std::max(spread, std::abs(kappas[std::size_t(i)] - clusters[c].mean));
      Box probe_box;
      probe_box.center = clusters[c].mean;
      double hw = std::min(std::max(2.0 * spread, 5e-3), 0.012);
      probe_box.hw_re = probe_box.hw_im = hw;
      try {
        CountResult cr =
            count_in_box(builder, probe_box, params.probe_count, params.quad_points, seed);
        report.clusters[c].count_probe = cr.count;
        report.clusters[c].count_saturated = cr.saturated;
      } catch (const SingularMatrixError&) {
        report.clusters[c].count_probe = -1;
      }
    }
  }

  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (int i : clusters[c].members) {
      const auto& rp = refined[std::size_t(selected[std::size_t(i)])];
      const auto& cand = candidates[std::size_t(selected[std::size_t(i)])];
      ResonanceEntry e;
      e.kappa = rp.kappa;
      e.residual = rp.residual;
      e.converged = rp.converged;
      e.final_box = cand.final_box;
      e.trail = cand.trail;
      e.cluster_id = int(c);
      e.cluster_size = int(clusters[c].members.size());
      e.cluster_mean = clusters[c].mean;
      e.count_probe = report.clusters[c].count_probe;
      report.entries.push_back(std::move(e));
    }
  }
  std::sort(report.entries.begin(), report.entries.end(),
            [](const ResonanceEntry& a, const ResonanceEntry& b) {
              if (a.cluster_id != b.cluster_id) return a.cluster_id < b.cluster_id;
              if (a.kappa.real() != b.kappa.real()) return a.kappa.real() < b.kappa.real();
              return a.kappa.imag() < b.kappa.imag();
            });
  return report;
}

}  // namespace scatpole
