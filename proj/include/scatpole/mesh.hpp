#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scatpole/errors.hpp"

namespace scatpole {

enum class FaceTag { GammaD, GammaR };

inline const char* to_string(FaceTag t) { return t == FaceTag::GammaD ? "GammaD" : "GammaR"; }

struct TetMesh {
  struct BFace {
    std::array<int, 3> v;
    FaceTag tag;
  };
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 4>> tets;
  std::vector<BFace> boundary_faces;
};

struct MeshQualityReport {
  double min_dihedral_deg = 0;
  double max_dihedral_deg = 0;
  double min_volume = 0;
  double h = 0;  // max edge length
  std::size_t n_vertices = 0, n_edges = 0, n_faces = 0, n_tets = 0;
};

inline double signed_volume(const TetMesh& m, const std::array<int, 4>& t) {
  Eigen::Vector3d a = m.vertices[t[1]] - m.vertices[t[0]];
  Eigen::Vector3d b = m.vertices[t[2]] - m.vertices[t[0]];
  Eigen::Vector3d c = m.vertices[t[3]] - m.vertices[t[0]];
  return a.cross(b).dot(c) / 6.0;
}

/// Reorder each tet (swap of the last two vertices) so its signed volume is
/// positive. Used by all mesh producers; the validator reports rather than
/// fixes.
inline void canonicalize_orientation(TetMesh& m) {
  for (auto& t : m.tets)
    if (signed_volume(m, t) < 0.0) std::swap(t[2], t[3]);
}

namespace detail {

inline std::array<int, 3> sorted_tri(int a, int b, int c) {
  std::array<int, 3> f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

inline std::array<int, 2> sorted_edge(int a, int b) {
  return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
}

// Cubed-sphere template: unit directions plus a triangulation of the 6 face
// grids. Nodes shared between faces are deduplicated through exact integer
// lattice keys, so patch boundaries match without tolerance games.
struct SurfaceGrid {
  std::vector<Eigen::Vector3d> dirs;
  std::vector<std::array<int, 3>> tris;
};

inline SurfaceGrid cubed_sphere_surface(int n) {
  SurfaceGrid g;
  std::map<std::array<int, 3>, int> node_of;
  // Equiangular mapping: component k -> tan(pi/4 * k/n). Face-axis
  // components (|k| = n) map to +-1, so a key shared between patches gets
  // the same direction from either side.
  auto node = [&](std::array<int, 3> key) {
    auto it = node_of.find(key);
    if (it != node_of.end()) return it->second;
    int id = int(g.dirs.size());
    node_of.emplace(key, id);
    auto remap = [n](int k) { return std::tan(0.78539816339744830962 * k / n); };
    g.dirs.push_back(Eigen::Vector3d(remap(key[0]), remap(key[1]), remap(key[2])).normalized());
    return id;
  };
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      int b = (axis + 1) % 3, c = (axis + 2) % 3;
      if (b > c) std::swap(b, c);
      auto key = [&](int i, int j) {
        std::array<int, 3> k{};
        k[axis] = sign * n;
        k[b] = 2 * i - n;
        k[c] = 2 * j - n;
        return k;
      };
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          int q0 = node(key(i, j)), q1 = node(key(i + 1, j));
          int q2 = node(key(i + 1, j + 1)), q3 = node(key(i, j + 1));
          // split along the shorter diagonal (quads are patch-local, so the
          // choice is free; ties go to the smallest node id)
          double d02 = (g.dirs[q0] - g.dirs[q2]).squaredNorm();
          double d13 = (g.dirs[q1] - g.dirs[q3]).squaredNorm();
          bool use02 = d02 < d13;
          if (d02 == d13) {
            int mn = std::min(std::min(q0, q1), std::min(q2, q3));
            use02 = (mn == q0 || mn == q2);
          }
          if (use02) {
            g.tris.push_back({q0, q1, q2});
            g.tris.push_back({q0, q2, q3});
          } else {
            g.tris.push_back({q0, q1, q3});
            g.tris.push_back({q1, q2, q3});
          }
        }
      }
    }
  }
  return g;
}

/// Extrude a star-shaped inner surface radially out to the sphere |x| =
/// R_outer. Each (surface triangle, layer) prism is cut into 3 tets; the wall
/// diagonal always runs from the bottom copy of the triangle's largest node
/// to the top copy of its smallest, which makes neighbouring prisms agree.
inline TetMesh radial_shell(const SurfaceGrid& g,
                            const std::function<double(const Eigen::Vector3d&)>& inner_radius,
                            int n_rad, double R_outer) {
  TetMesh m;
  const int vs = int(g.dirs.size());
  m.vertices.reserve(std::size_t(vs) * (n_rad + 1));
  for (int l = 0; l <= n_rad; ++l) {
    double t = double(l) / n_rad;
    for (int s = 0; s < vs; ++s) {
      double r = (1.0 - t) * inner_radius(g.dirs[s]) + t * R_outer;
      m.vertices.push_back(r * g.dirs[s]);
    }
  }
  auto node = [vs](int l, int s) { return l * vs + s; };
  for (const auto& tri : g.tris) {
    std::array<int, 3> s = tri;
    std::sort(s.begin(), s.end());
    for (int l = 0; l < n_rad; ++l) {
      int b0 = node(l, s[0]), b1 = node(l, s[1]), b2 = node(l, s[2]);
      int t0 = node(l + 1, s[0]), t1 = node(l + 1, s[1]), t2 = node(l + 1, s[2]);
      m.tets.push_back({b0, b1, b2, t0});
      m.tets.push_back({b1, b2, t0, t1});
      m.tets.push_back({b2, t0, t1, t2});
    }
    m.boundary_faces.push_back({{node(0, s[0]), node(0, s[1]), node(0, s[2])}, FaceTag::GammaD});
    m.boundary_faces.push_back(
        {{node(n_rad, s[0]), node(n_rad, s[1]), node(n_rad, s[2])}, FaceTag::GammaR});
  }
  canonicalize_orientation(m);
  return m;
}

}  // namespace detail

/// Spherical shell between the unit sphere (GammaD) and |x| = R_outer
/// (GammaR). Every layer of nodes lies on an exact sphere.
inline TetMesh build_ball_shell(int n_tan, int n_rad, double R_outer) {
  if (n_tan < 1 || n_rad < 1) throw DomainError("build_ball_shell: divisions must be >= 1");
  if (R_outer <= 1.0) throw DomainError("build_ball_shell: R_outer must exceed 1");
  auto g = detail::cubed_sphere_surface(n_tan);
  return detail::radial_shell(
      g, [](const Eigen::Vector3d&) { return 1.0; }, n_rad, R_outer);
}

/// Shell between the axis-aligned cube of the given half width (GammaD) and
/// the sphere |x| = R_outer (GammaR). Fixture generator for the cube
/// benchmark geometry.
inline TetMesh build_cube_shell(double half_width, int n_tan, int n_rad, double R_outer) {
  if (n_tan < 1 || n_rad < 1) throw DomainError("build_cube_shell: divisions must be >= 1");
  double circum = half_width * std::sqrt(3.0);
  if (R_outer <= circum) throw DomainError("build_cube_shell: R_outer must exceed circumradius");
  auto g = detail::cubed_sphere_surface(n_tan);
  return detail::radial_shell(
      g,
      [half_width](const Eigen::Vector3d& d) {
        double mx = std::max({std::abs(d.x()), std::abs(d.y()), std::abs(d.z())});
        return half_width / mx;
      },
      n_rad, R_outer);
}

/// Check conformity, orientation, boundary tagging, GammaR sphericity, and
/// Euler-characteristic consistency; collect quality numbers.
inline MeshQualityReport validate(const TetMesh& m) {
  std::vector<std::string> defects;
  const int nv = int(m.vertices.size());
  if (m.tets.empty()) defects.push_back("mesh has no tetrahedra");

  for (std::size_t i = 0; i < m.tets.size(); ++i) {
    for (int k : m.tets[i])
      if (k < 0 || k >= nv) defects.push_back("tet " + std::to_string(i) + ": vertex out of range");
    double vol = signed_volume(m, m.tets[i]);
    if (!(vol > 0.0)) defects.push_back("tet " + std::to_string(i) + ": non-positive volume");
  }

  std::map<std::array<int, 3>, int> face_count;
  for (const auto& t : m.tets) {
    face_count[detail::sorted_tri(t[0], t[1], t[2])]++;
    face_count[detail::sorted_tri(t[0], t[1], t[3])]++;
    face_count[detail::sorted_tri(t[0], t[2], t[3])]++;
    face_count[detail::sorted_tri(t[1], t[2], t[3])]++;
  }
  for (const auto& [f, c] : face_count)
    if (c > 2)
      defects.push_back("face (" + std::to_string(f[0]) + "," + std::to_string(f[1]) + "," +
                        std::to_string(f[2]) + ") shared by " + std::to_string(c) + " tets");

  std::map<std::array<int, 3>, FaceTag> tagged;
  for (const auto& bf : m.boundary_faces) {
    auto key = detail::sorted_tri(bf.v[0], bf.v[1], bf.v[2]);
    if (tagged.count(key)) defects.push_back("boundary face tagged twice");
    tagged.emplace(key, bf.tag);
    auto it = face_count.find(key);
    if (it == face_count.end())
      defects.push_back("tagged face is not a face of any tet");
    else if (it->second != 1)
      defects.push_back("tagged face is interior (shared by 2 tets)");
  }
  for (const auto& [f, c] : face_count)
    if (c == 1 && !tagged.count(f))
      defects.push_back("untagged boundary face (" + std::to_string(f[0]) + "," +
                        std::to_string(f[1]) + "," + std::to_string(f[2]) + ")");

  // GammaR must form a closed surface of sphere vertices.
  std::map<std::array<int, 2>, int> gr_edge_count;
  std::vector<char> on_gr(nv, 0);
  bool have_gr = false;
  for (const auto& bf : m.boundary_faces) {
    if (bf.tag != FaceTag::GammaR) continue;
    have_gr = true;
    for (int k = 0; k < 3; ++k) {
      gr_edge_count[detail::sorted_edge(bf.v[k], bf.v[(k + 1) % 3])]++;
      on_gr[bf.v[k]] = 1;
    }
  }
  for (const auto& [e, c] : gr_edge_count)
    if (c != 2) defects.push_back("GammaR surface not closed at edge (" + std::to_string(e[0]) +
                                  "," + std::to_string(e[1]) + ")");
  if (have_gr) {
    double sum = 0;
    int cnt = 0;
    for (int v = 0; v < nv; ++v)
      if (on_gr[v]) {
        sum += m.vertices[v].norm();
        ++cnt;
      }
    double R = sum / cnt;
    for (int v = 0; v < nv; ++v)
      if (on_gr[v] && std::abs(m.vertices[v].norm() - R) > 1e-8 * R)
        defects.push_back("GammaR vertex " + std::to_string(v) + " off the sphere r = " +
                          std::to_string(R));
  }

  // Euler consistency: chi(M) = chi(boundary)/2 for a compact 3-manifold.
  std::map<std::array<int, 2>, char> edges;
  for (const auto& t : m.tets)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) edges[detail::sorted_edge(t[a], t[b])] = 1;
  std::vector<char> used(nv, 0);
  for (const auto& t : m.tets)
    for (int k : t) used[k] = 1;
  long V = std::count(used.begin(), used.end(), char(1));
  long E = long(edges.size());
  long F = long(face_count.size());
  long T = long(m.tets.size());
  {
    std::map<std::array<int, 2>, char> be;
    std::vector<char> bv(nv, 0);
    long Fb = 0;
    for (const auto& [f, c] : face_count)
      if (c == 1) {
        ++Fb;
        for (int k = 0; k < 3; ++k) {
          be[detail::sorted_edge(f[k], f[(k + 1) % 3])] = 1;
          bv[f[k]] = 1;
        }
      }
    long chi_b = std::count(bv.begin(), bv.end(), char(1)) - long(be.size()) + Fb;
    long chi = V - E + F - T;
    if (2 * chi != chi_b)
      defects.push_back("Euler characteristic mismatch: chi = " + std::to_string(chi) +
                        ", boundary chi = " + std::to_string(chi_b));
  }

  if (!defects.empty()) {
    std::string msg = "mesh validation failed:";
    for (const auto& d : defects) msg += "\n  " + d;
    throw ValidationError(msg);
  }

  MeshQualityReport rep;
  rep.n_vertices = std::size_t(V);
  rep.n_edges = std::size_t(E);
  rep.n_faces = std::size_t(F);
  rep.n_tets = std::size_t(T);
  rep.min_volume = std::numeric_limits<double>::infinity();
  rep.min_dihedral_deg = 180.0;
  rep.max_dihedral_deg = 0.0;
  rep.h = 0.0;
  for (const auto& t : m.tets) {
    rep.min_volume = std::min(rep.min_volume, signed_volume(m, t));
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        rep.h = std::max(rep.h, (m.vertices[t[a]] - m.vertices[t[b]]).norm());
    // dihedral angles from outward face normals
    std::array<Eigen::Vector3d, 4> fn;
    for (int k = 0; k < 4; ++k) {
      // face opposite vertex k
      std::array<int, 3> f;
      int idx = 0;
      for (int j = 0; j < 4; ++j)
        if (j != k) f[idx++] = t[j];
      Eigen::Vector3d n = (m.vertices[f[1]] - m.vertices[f[0]])
                              .cross(m.vertices[f[2]] - m.vertices[f[0]])
                              .normalized();
      if (n.dot(m.vertices[t[k]] - m.vertices[f[0]]) > 0) n = -n;  // outward
      fn[k] = n;
    }
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        double c = std::clamp(-fn[a].dot(fn[b]), -1.0, 1.0);
        double ang = std::acos(c) * 57.295779513082320877;
        rep.min_dihedral_deg = std::min(rep.min_dihedral_deg, ang);
        rep.max_dihedral_deg = std::max(rep.max_dihedral_deg, ang);
      }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// meshtxt v1: `v x y z`, `t a b c d`, `f a b c TAG`; 0-based, LF newlines.

inline void write_meshtxt(const TetMesh& m, std::ostream& os) {
  os << "meshtxt v1\n";
  char buf[128];
  for (const auto& v : m.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    os << buf;
  }
  for (const auto& t : m.tets) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  for (const auto& f : m.boundary_faces)
    os << "f " << f.v[0] << ' ' << f.v[1] << ' ' << f.v[2] << ' ' << to_string(f.tag) << '\n';
}

inline TetMesh read_meshtxt(std::istream& is) {
  TetMesh m;
  std::string line;
  long ln = 0;
  if (!std::getline(is, line) || line != "meshtxt v1") throw ParseError(1, "expected 'meshtxt v1' header");
  ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw ParseError(ln, "bad vertex line");
      m.vertices.emplace_back(x, y, z);
    } else if (kind == "t") {
      std::array<int, 4> t{};
      if (!(ss >> t[0] >> t[1] >> t[2] >> t[3])) throw ParseError(ln, "bad tet line");
      m.tets.push_back(t);
    } else if (kind == "f") {
      std::array<int, 3> f{};
      std::string tag;
      if (!(ss >> f[0] >> f[1] >> f[2] >> tag)) throw ParseError(ln, "bad face line");
      if (tag == "GammaD")
        m.boundary_faces.push_back({f, FaceTag::GammaD});
      else if (tag == "GammaR")
        m.boundary_faces.push_back({f, FaceTag::GammaR});
      else
        throw ParseError(ln, "unknown face tag '" + tag + "'");
    } else {
      throw ParseError(ln, "unknown record '" + kind + "'");
    }
  }
  int nv = int(m.vertices.size());
  for (const auto& t : m.tets)
    for (int k : t)
      if (k < 0 || k >= nv) throw ParseError(ln, "tet vertex index out of range");
  for (const auto& f : m.boundary_faces)
    for (int k : f.v)
      if (k < 0 || k >= nv) throw ParseError(ln, "face vertex index out of range");
  return m;
}

// ---------------------------------------------------------------------------
// Gmsh MSH reader (ASCII v2.2 and v4.1; Nodes/Elements/PhysicalNames/Entities
// subset, element types 2 and 4).

namespace detail {

struct MshLexer {
  std::istream& is;
  long line = 0;
  bool next_line(std::string& out) {
    while (std::getline(is, out)) {
      ++line;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  }
};

inline void drop_unreferenced_nodes(TetMesh& m) {
  std::vector<int> remap(m.vertices.size(), -1);
  for (const auto& t : m.tets)
    for (int k : t) remap[k] = 1;
  for (const auto& f : m.boundary_faces)
    for (int k : f.v) remap[k] = 1;
  std::vector<Eigen::Vector3d> kept;
  int id = 0;
  for (std::size_t i = 0; i < remap.size(); ++i)
    if (remap[i] == 1) {
      remap[i] = id++;
      kept.push_back(m.vertices[i]);
    }
  m.vertices = std::move(kept);
  for (auto& t : m.tets)
    for (int& k : t) k = remap[k];
  for (auto& f : m.boundary_faces)
    for (int& k : f.v) k = remap[k];
}

}  // namespace detail

inline TetMesh load_msh(std::istream& is, const std::map<int, FaceTag>& tag_map) {
  detail::MshLexer lx{is};
  std::string line;
  double version = 0;
  std::map<long, int> node_index;
  TetMesh m;
  // v4.1: (entityDim, entityTag) -> first physical tag
  std::map<std::pair<int, long>, int> entity_phys;

  auto map_tag = [&](int phys, long at_line) -> FaceTag {
    auto it = tag_map.find(phys);
    if (it == tag_map.end())
      throw ParseError(at_line, "physical tag " + std::to_string(phys) + " not in tag map");
    return it->second;
  };

  while (lx.next_line(line)) {
    if (line == "$MeshFormat") {
      if (!lx.next_line(line)) throw ParseError(lx.line, "truncated $MeshFormat");
      std::istringstream ss(line);
      int file_type = 0, data_size = 0;
      if (!(ss >> version >> file_type >> data_size))
        throw ParseError(lx.line, "bad $MeshFormat line");
      if (file_type != 0) throw ParseError(lx.line, "binary MSH not supported");
      if (std::abs(version - 2.2) > 1e-9 && std::abs(version - 4.1) > 1e-9)
        throw ParseError(lx.line, "unsupported MSH version " + std::to_string(version));
      lx.next_line(line);  // $EndMeshFormat
    } else if (line == "$PhysicalNames") {
      if (!lx.next_line(line)) throw ParseError(lx.line, "truncated $PhysicalNames");
      long k = std::stol(line);
      for (long i = 0; i < k; ++i) lx.next_line(line);
      lx.next_line(line);
    } else if (line == "$Entities") {
      if (!lx.next_line(line)) throw ParseError(lx.line, "truncated $Entities");
      std::istringstream hd(line);
      long np, nc, ns, nvx;
      if (!(hd >> np >> nc >> ns >> nvx)) throw ParseError(lx.line, "bad $Entities header");
      auto read_entity = [&](int dim, bool is_point) {
        if (!lx.next_line(line)) throw ParseError(lx.line, "truncated entity record");
        std::istringstream ss(line);
        long tag;
        double coord;
        ss >> tag;
        int ncoord = is_point ? 3 : 6;
        for (int c = 0; c < ncoord; ++c) ss >> coord;
        long nphys = 0;
        ss >> nphys;
        for (long p = 0; p < nphys; ++p) {
          long phys;
          ss >> phys;
          if (p == 0) entity_phys[{dim, tag}] = int(phys);
        }
      };
      for (long i = 0; i < np; ++i) read_entity(0, true);
      for (long i = 0; i < nc; ++i) read_entity(1, false);
      for (long i = 0; i < ns; ++i) read_entity(2, false);
      for (long i = 0; i < nvx; ++i) read_entity(3, false);
      lx.next_line(line);  // $EndEntities
    } else if (line == "$Nodes") {
      if (!lx.next_line(line)) throw ParseError(lx.line, "truncated $Nodes");
      if (std::abs(version - 2.2) < 1e-9) {
        long n = std::stol(line);
        for (long i = 0; i < n; ++i) {
          if (!lx.next_line(line)) throw ParseError(lx.line, "truncated node list");
          std::istringstream ss(line);
          long id;
          double x, y, z;
          if (!(ss >> id >> x >> y >> z)) throw ParseError(lx.line, "bad node line");
          node_index[id] = int(m.vertices.size());
          m.vertices.emplace_back(x, y, z);
        }
      } else {
        std::istringstream hd(line);
        long nblocks, nnodes, mn, mx;
        if (!(hd >> nblocks >> nnodes >> mn >> mx)) throw ParseError(lx.line, "bad $Nodes header");
        for (long b = 0; b < nblocks; ++b) {
          if (!lx.next_line(line)) throw ParseError(lx.line, "truncated node block");
          std::istringstream bh(line);
          int dim, parametric;
          long etag, nin;
          if (!(bh >> dim >> etag >> parametric >> nin))
            throw ParseError(lx.line, "bad node block header");
          std::vector<long> tags(nin);
          for (long i = 0; i < nin; ++i) {
            if (!lx.next_line(line)) throw ParseError(lx.line, "truncated node tags");
            tags[i] = std::stol(line);
          }
          for (long i = 0; i < nin; ++i) {
            if (!lx.next_line(line)) throw ParseError(lx.line, "truncated node coords");
            std::istringstream ss(line);
            double x, y, z;
            if (!(ss >> x >> y >> z)) throw ParseError(lx.line, "bad node coordinates");
            node_index[tags[i]] = int(m.vertices.size());
            m.vertices.emplace_back(x, y, z);
          }
        }
      }
      lx.next_line(line);  // $EndNodes
    } else if (line == "$Elements") {
      if (!lx.next_line(line)) throw ParseError(lx.line, "truncated $Elements");
      auto node_of = [&](long tag, long at_line) {
        auto it = node_index.find(tag);
        if (it == node_index.end())
          throw ParseError(at_line, "element references unknown node " + std::to_string(tag));
        return it->second;
      };
      if (std::abs(version - 2.2) < 1e-9) {
        long n = std::stol(line);
        for (long i = 0; i < n; ++i) {
          if (!lx.next_line(line)) throw ParseError(lx.line, "truncated element list");
          std::istringstream ss(line);
          long id;
          int type, ntags;
          if (!(ss >> id >> type >> ntags)) throw ParseError(lx.line, "bad element line");
          std::vector<long> tags(ntags);
          for (int k = 0; k < ntags; ++k) ss >> tags[k];
          if (type == 2) {
            long a, b, c;
            if (!(ss >> a >> b >> c)) throw ParseError(lx.line, "bad triangle");
            if (ntags < 1) throw ParseError(lx.line, "triangle without a physical tag");
            FaceTag t = map_tag(int(tags[0]), lx.line);
            m.boundary_faces.push_back(
                {{node_of(a, lx.line), node_of(b, lx.line), node_of(c, lx.line)}, t});
          } else if (type == 4) {
            long a, b, c, d;
            if (!(ss >> a >> b >> c >> d)) throw ParseError(lx.line, "bad tetrahedron");
            m.tets.push_back({node_of(a, lx.line), node_of(b, lx.line), node_of(c, lx.line),
                              node_of(d, lx.line)});
          }  // other element types ignored
        }
      } else {
        std::istringstream hd(line);
        long nblocks, nelems, mn, mx;
        if (!(hd >> nblocks >> nelems >> mn >> mx))
          throw ParseError(lx.line, "bad $Elements header");
        for (long b = 0; b < nblocks; ++b) {
          if (!lx.next_line(line)) throw ParseError(lx.line, "truncated element block");
          std::istringstream bh(line);
          int dim, type;
          long etag, nin;
          if (!(bh >> dim >> etag >> type >> nin))
            throw ParseError(lx.line, "bad element block header");
          for (long i = 0; i < nin; ++i) {
            if (!lx.next_line(line)) throw ParseError(lx.line, "truncated element block body");
            std::istringstream ss(line);
            long id;
            ss >> id;
            if (type == 2) {
              long a, bb, c;
              if (!(ss >> a >> bb >> c)) throw ParseError(lx.line, "bad triangle");
              auto it = entity_phys.find({2, etag});
              if (it == entity_phys.end())
                throw ParseError(lx.line, "surface entity " + std::to_string(etag) +
                                              " carries no physical tag");
              FaceTag t = map_tag(it->second, lx.line);
              m.boundary_faces.push_back(
                  {{node_of(a, lx.line), node_of(bb, lx.line), node_of(c, lx.line)}, t});
            } else if (type == 4) {
              long a, bb, c, d;
              if (!(ss >> a >> bb >> c >> d)) throw ParseError(lx.line, "bad tetrahedron");
              m.tets.push_back({node_of(a, lx.line), node_of(bb, lx.line), node_of(c, lx.line),
                                node_of(d, lx.line)});
            }
          }
        }
      }
      lx.next_line(line);  // $EndElements
    }
    // unrecognized sections are skipped lazily: the loop only reacts to known headers
  }
  if (version == 0) throw ParseError(lx.line, "missing $MeshFormat section");
  if (m.tets.empty()) throw ParseError(lx.line, "no tetrahedra in file");
  canonicalize_orientation(m);
  detail::drop_unreferenced_nodes(m);
  validate(m);
  return m;
}

}  // namespace scatpole
