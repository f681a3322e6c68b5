#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <map>
#include <vector>

#include "scatpole/dtn.hpp"
#include "scatpole/errors.hpp"
#include "scatpole/mesh.hpp"
#include "scatpole/parallel.hpp"
#include "scatpole/quadrature.hpp"
#include "scatpole/specfun.hpp"

namespace scatpole {

/// Lowest-order Nedelec DOF bookkeeping. Global edges are the sorted vertex
/// pairs in lexicographic order; the DOF orientation is lo -> hi, and the
/// per-tet sign reconciles the local edge direction with it. Edges in any
/// GammaD face are eliminated (PEC).
struct EdgeDofMap {
  struct TetIncidence {
    std::array<int, 6> edge;
    std::array<int, 6> sign;
  };
  // local edge order within a tet: (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
  static constexpr std::array<std::array<int, 2>, 6> kLocalEdges = {
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

  std::vector<std::array<int, 2>> edges;  // (lo, hi)
  std::vector<TetIncidence> tets;
  std::vector<char> pec;       // per edge
  std::vector<char> gamma_r;   // per edge
  std::vector<int> free_index; // per edge, -1 when PEC
  int n_free = 0;
  std::map<std::array<int, 2>, int> edge_ids;

  int edge_id(int a, int b) const {
    auto it = edge_ids.find(detail::sorted_edge(a, b));
    return it == edge_ids.end() ? -1 : it->second;
  }
};

inline EdgeDofMap build_dof_map(const TetMesh& mesh) {
  EdgeDofMap d;
  for (const auto& t : mesh.tets)
    for (const auto& le : EdgeDofMap::kLocalEdges)
      d.edge_ids.emplace(detail::sorted_edge(t[le[0]], t[le[1]]), 0);
  int id = 0;
  for (auto& [e, v] : d.edge_ids) {
    v = id++;
    d.edges.push_back(e);
  }
  d.tets.resize(mesh.tets.size());
  for (std::size_t k = 0; k < mesh.tets.size(); ++k) {
    const auto& t = mesh.tets[k];
    for (int i = 0; i < 6; ++i) {
      int a = t[EdgeDofMap::kLocalEdges[i][0]], b = t[EdgeDofMap::kLocalEdges[i][1]];
      d.tets[k].edge[i] = d.edge_ids.at(detail::sorted_edge(a, b));
      d.tets[k].sign[i] = a < b ? 1 : -1;
    }
  }
  d.pec.assign(d.edges.size(), 0);
  d.gamma_r.assign(d.edges.size(), 0);
  for (const auto& bf : mesh.boundary_faces) {
    for (int i = 0; i < 3; ++i) {
      int e = d.edge_id(bf.v[i], bf.v[(i + 1) % 3]);
      if (bf.tag == FaceTag::GammaD)
        d.pec[e] = 1;
      else
        d.gamma_r[e] = 1;
    }
  }
  d.free_index.assign(d.edges.size(), -1);
  int nf = 0;
  for (std::size_t e = 0; e < d.edges.size(); ++e)
    if (!d.pec[e]) d.free_index[e] = nf++;
  d.n_free = nf;
  return d;
}

namespace detail {

struct TetGeometry {
  std::array<Eigen::Vector3d, 4> grad_lambda;
  double volume;
};

inline TetGeometry tet_geometry(const TetMesh& mesh, std::size_t k) {
  const auto& t = mesh.tets[k];
  Eigen::Matrix3d J;
  J.col(0) = mesh.vertices[t[1]] - mesh.vertices[t[0]];
  J.col(1) = mesh.vertices[t[2]] - mesh.vertices[t[0]];
  J.col(2) = mesh.vertices[t[3]] - mesh.vertices[t[0]];
  double det = J.determinant();
  if (!(det > 0.0))
    throw ValidationError("assembly: degenerate or misoriented tet " + std::to_string(k));
  TetGeometry g;
  g.volume = det / 6.0;
  Eigen::Matrix3d Jinv = J.inverse();
  for (int i = 0; i < 3; ++i) g.grad_lambda[i + 1] = Jinv.row(i);
  g.grad_lambda[0] = -(g.grad_lambda[1] + g.grad_lambda[2] + g.grad_lambda[3]);
  return g;
}

template <class ElementFn>
Eigen::SparseMatrix<double> assemble_edge_matrix(const TetMesh& mesh, const EdgeDofMap& dofs,
                                                 ElementFn&& element, int threads) {
  using Trip = Eigen::Triplet<double>;
  const std::size_t chunk = 512;
  const std::size_t n_chunks = (mesh.tets.size() + chunk - 1) / chunk;
  std::vector<std::vector<Trip>> buf(n_chunks);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    std::size_t lo = c * chunk, hi = std::min(lo + chunk, mesh.tets.size());
    auto& out = buf[c];
    Eigen::Matrix<double, 6, 6> ke;
    for (std::size_t k = lo; k < hi; ++k) {
      element(k, ke);
      const auto& inc = dofs.tets[k];
      for (int i = 0; i < 6; ++i) {
        int gi = dofs.free_index[inc.edge[i]];
        if (gi < 0) continue;
        for (int j = 0; j < 6; ++j) {
          int gj = dofs.free_index[inc.edge[j]];
          if (gj < 0) continue;
          out.emplace_back(gi, gj, double(inc.sign[i] * inc.sign[j]) * ke(i, j));
        }
      }
    }
  });
  std::vector<Trip> all;
  std::size_t total = 0;
  for (const auto& b : buf) total += b.size();
  all.reserve(total);
  for (const auto& b : buf) all.insert(all.end(), b.begin(), b.end());
  Eigen::SparseMatrix<double> A(dofs.n_free, dofs.n_free);
  A.setFromTriplets(all.begin(), all.end());
  A.makeCompressed();
  return A;
}

}  // namespace detail

/// S_ij = (curl phi_j, curl phi_i); curl of the lowest-order basis is the
/// constant 2 grad(lambda_a) x grad(lambda_b) per tet.
inline Eigen::SparseMatrix<double> assemble_stiffness(const TetMesh& mesh, const EdgeDofMap& dofs,
                                                      int threads = 1) {
  return detail::assemble_edge_matrix(
      mesh, dofs,
      [&](std::size_t k, Eigen::Matrix<double, 6, 6>& ke) {
        auto g = detail::tet_geometry(mesh, k);
        std::array<Eigen::Vector3d, 6> curl;
        for (int i = 0; i < 6; ++i)
          curl[i] = 2.0 * g.grad_lambda[EdgeDofMap::kLocalEdges[i][0]].cross(
                              g.grad_lambda[EdgeDofMap::kLocalEdges[i][1]]);
        for (int i = 0; i < 6; ++i)
          for (int j = i; j < 6; ++j) ke(i, j) = ke(j, i) = g.volume * curl[i].dot(curl[j]);
      },
      threads);
}

/// M_ij = (phi_j, phi_i), exact for the degree-2 integrand through
/// int lambda_p lambda_q = vol (1 + delta_pq)/20.
inline Eigen::SparseMatrix<double> assemble_mass(const TetMesh& mesh, const EdgeDofMap& dofs,
                                                 int threads = 1) {
  return detail::assemble_edge_matrix(
      mesh, dofs,
      [&](std::size_t k, Eigen::Matrix<double, 6, 6>& ke) {
        auto g = detail::tet_geometry(mesh, k);
        Eigen::Matrix4d gram;  // grad(lambda_p) . grad(lambda_q)
        for (int p = 0; p < 4; ++p)
          for (int q = 0; q < 4; ++q) gram(p, q) = g.grad_lambda[p].dot(g.grad_lambda[q]);
        auto ii = [&](int p, int q) { return g.volume * (p == q ? 2.0 : 1.0) / 20.0; };
        for (int i = 0; i < 6; ++i) {
          int a = EdgeDofMap::kLocalEdges[i][0], b = EdgeDofMap::kLocalEdges[i][1];
          for (int j = i; j < 6; ++j) {
            int c = EdgeDofMap::kLocalEdges[j][0], dd = EdgeDofMap::kLocalEdges[j][1];
            double v = gram(b, dd) * ii(a, c) - gram(b, c) * ii(a, dd) -
                       gram(a, dd) * ii(b, c) + gram(a, c) * ii(b, dd);
            ke(i, j) = ke(j, i) = v;
          }
        }
      },
      threads);
}

/// Q_{(W,n,m), j} = integral over GammaR of the tangential trace of phi_j
/// against conj(W_n^m(x/|x|)), by the degree-5 7-point rule per flat
/// boundary triangle with the harmonics sampled at the radially projected
/// direction. The optional correction reweights each sample by
/// R^2/|x|^2 (x_hat . n_hat) to emulate exact spherical area.
inline TraceMatrix assemble_trace_matrix(const TetMesh& mesh, const EdgeDofMap& dofs, int N,
                                         double R, int threads = 1,
                                         bool spherical_area_correction = false) {
  if (N < 1) throw DomainError("assemble_trace_matrix: N must be >= 1");
  std::vector<const TetMesh::BFace*> faces;
  for (const auto& bf : mesh.boundary_faces)
    if (bf.tag == FaceTag::GammaR) faces.push_back(&bf);
  if (faces.empty()) throw ValidationError("assemble_trace_matrix: mesh has no GammaR faces");

  TraceMatrix Q;
  Q.N = N;
  Q.R = R;
  std::vector<int> col_of_free(dofs.n_free, -1);
  for (std::size_t e = 0; e < dofs.edges.size(); ++e)
    if (dofs.gamma_r[e] && dofs.free_index[e] >= 0) Q.support.push_back(dofs.free_index[e]);
  std::sort(Q.support.begin(), Q.support.end());
  for (std::size_t c = 0; c < Q.support.size(); ++c) col_of_free[Q.support[c]] = int(c);

  const int n_rows = TraceMatrix::row_count(N);
  const auto& rule = triangle_rule_deg5();
  const std::size_t chunk = 64;
  const std::size_t n_chunks = (faces.size() + chunk - 1) / chunk;
  std::vector<Eigen::MatrixXcd> partial(n_chunks);

  parallel_for(n_chunks, threads, [&](std::size_t c) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n_rows, Eigen::Index(Q.support.size()));
    std::size_t lo = c * chunk, hi = std::min(lo + chunk, faces.size());
    for (std::size_t fidx = lo; fidx < hi; ++fidx) {
      const auto& bf = *faces[fidx];
      const Eigen::Vector3d p0 = mesh.vertices[bf.v[0]];
      const Eigen::Vector3d p1 = mesh.vertices[bf.v[1]];
      const Eigen::Vector3d p2 = mesh.vertices[bf.v[2]];
      Eigen::Vector3d an = 0.5 * (p1 - p0).cross(p2 - p0);
      double area = an.norm();
      // in-plane barycentric gradients want the normal of the stored vertex
      // order (the formula is order-covariant); outwardness only matters for
      // the optional area correction
      Eigen::Vector3d nh = an / area;
      Eigen::Vector3d nout = nh.dot(p0 + p1 + p2) < 0 ? (-nh).eval() : nh;
      std::array<Eigen::Vector3d, 3> gmu = {nh.cross(p2 - p1) / (2 * area),
                                            nh.cross(p0 - p2) / (2 * area),
                                            nh.cross(p1 - p0) / (2 * area)};
      // the three face edges, endpoints as face-local indices ordered by
      // global vertex id (DOF direction lo -> hi)
      struct FaceEdge {
        int col;
        int la, lb;
      };
      std::array<FaceEdge, 3> fedges;
      const std::array<std::array<int, 2>, 3> local = {{{0, 1}, {0, 2}, {1, 2}}};
      for (int i = 0; i < 3; ++i) {
        int la = local[i][0], lb = local[i][1];
        if (bf.v[la] > bf.v[lb]) std::swap(la, lb);
        int e = dofs.edge_id(bf.v[la], bf.v[lb]);
        int fi = dofs.free_index[e];
        fedges[i] = {fi >= 0 ? col_of_free[fi] : -1, la, lb};
      }
      for (const auto& qp : rule) {
        Eigen::Vector3d x = qp.l0 * p0 + qp.l1 * p1 + qp.l2 * p2;
        double rr = x.norm();
        Eigen::Vector3d dir = x / rr;
        double w = qp.w * area;
        if (spherical_area_correction) w *= (R * R) / (rr * rr) * dir.dot(nout);
        HarmonicTable table(N, dir);
        std::array<double, 3> mu = {qp.l0, qp.l1, qp.l2};
        for (const auto& fe : fedges) {
          if (fe.col < 0) continue;
          Eigen::Vector3cd phi =
              (mu[fe.la] * gmu[fe.lb] - mu[fe.lb] * gmu[fe.la]).cast<Complex>();
          for (int n = 1; n <= N; ++n) {
            for (int m = -n; m <= n; ++m) {
              int iu = TraceMatrix::row_index('U', n, m, N);
              int iv = TraceMatrix::row_index('V', n, m, N);
              // .dot conjugates its left argument: phi . conj(W)
              acc(iu, fe.col) += w * table.U(n, m).dot(phi);
              acc(iv, fe.col) += w * table.V(n, m).dot(phi);
            }
          }
        }
      }
    }
    partial[c] = std::move(acc);
  });

  Q.values = Eigen::MatrixXcd::Zero(n_rows, Eigen::Index(Q.support.size()));
  for (const auto& p : partial) Q.values += p;
  return Q;
}

}  // namespace scatpole
