#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "scatpole/mesh.hpp"

using namespace scatpole;

namespace {

const char* kSingleTetMsh22 = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
5
1 2 2 1 1 1 2 3
2 2 2 1 1 1 2 4
3 2 2 1 1 1 3 4
4 2 2 1 1 2 3 4
5 4 2 1 1 1 2 3 4
$EndElements
)";

const char* kSingleTetMsh41 = R"($MeshFormat
4.1 0 8
$EndMeshFormat
$Entities
0 0 1 1
1 0 0 0 1 1 1 1 1 0
1 0 0 0 1 1 1 0 0
$EndEntities
$Nodes
1 4 1 4
3 1 0 4
1
2
3
4
0 0 0
1 0 0
0 1 0
0 0 1
$EndNodes
$Elements
2 5 1 5
2 1 2 4
1 1 2 3
2 1 2 4
3 1 3 4
4 2 3 4
3 1 4 1
5 1 2 3 4
$EndElements
)";

}  // namespace

TEST_CASE("ball shell counts at (1,1)") {
  TetMesh m = build_ball_shell(1, 1, 1.3);
  CHECK(m.tets.size() == 36);
  CHECK(m.vertices.size() == (6 + 2) * 2);
  int gd = 0, gr = 0;
  for (const auto& f : m.boundary_faces) (f.tag == FaceTag::GammaD ? gd : gr)++;
  CHECK(gd == 12);
  CHECK(gr == 12);
  CHECK_NOTHROW(validate(m));
}

TEST_CASE("ball shell counts across resolutions") {
  for (auto [nt, nr] : {std::pair{1, 2}, {2, 1}, {2, 2}, {3, 2}}) {
    TetMesh m = build_ball_shell(nt, nr, 1.3);
    CHECK(m.vertices.size() == std::size_t(6 * nt * nt + 2) * (nr + 1));
    CHECK(m.tets.size() == std::size_t(36 * nt * nt) * nr);
    CHECK(m.boundary_faces.size() == std::size_t(24 * nt * nt));
    CHECK_NOTHROW(validate(m));
  }
}

TEST_CASE("shell layers project exactly to spheres") {
  TetMesh m = build_ball_shell(2, 1, 1.3);
  std::map<std::array<int, 3>, FaceTag> dummy;
  for (const auto& f : m.boundary_faces) {
    if (f.tag != FaceTag::GammaR) continue;
    for (int v : f.v) CHECK(std::abs(m.vertices[v].norm() - 1.3) < 1e-12);
  }
  for (const auto& f : m.boundary_faces) {
    if (f.tag != FaceTag::GammaD) continue;
    for (int v : f.v) CHECK(std::abs(m.vertices[v].norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("validator reports a quality summary on a good shell") {
  TetMesh m = build_ball_shell(2, 2, 1.3);
  MeshQualityReport rep = validate(m);
  CHECK(rep.n_tets == m.tets.size());
  CHECK(rep.n_vertices == m.vertices.size());
  CHECK(rep.h > 0);
  CHECK(rep.min_volume > 0);
  CHECK(rep.min_dihedral_deg > 0);
  CHECK(rep.max_dihedral_deg < 180);
  // Euler characteristic of the shell: V - E + F - T = 2
  long chi = long(rep.n_vertices) - long(rep.n_edges) + long(rep.n_faces) - long(rep.n_tets);
  CHECK(chi == 2);
}

TEST_CASE("refinement halves h") {
  double h1 = validate(build_ball_shell(2, 2, 1.3)).h;
  double h2 = validate(build_ball_shell(4, 4, 1.3)).h;
  CHECK(h2 > 0.5 * 0.85 * h1);
  CHECK(h2 < 0.5 * 1.15 * h1);
}

TEST_CASE("cube shell fixture geometry") {
  TetMesh m = build_cube_shell(0.5, 2, 2, 1.0);
  MeshQualityReport rep = validate(m);
  CHECK(rep.n_tets == 36 * 4 * 2);
  for (const auto& f : m.boundary_faces) {
    for (int v : f.v) {
      if (f.tag == FaceTag::GammaR) {
        CHECK(std::abs(m.vertices[v].norm() - 1.0) < 1e-12);
      } else {
        double mx = m.vertices[v].cwiseAbs().maxCoeff();
        CHECK(std::abs(mx - 0.5) < 1e-12);
      }
    }
  }
}

TEST_CASE("validator flags a flipped tet") {
  TetMesh m = build_ball_shell(1, 1, 1.3);
  std::swap(m.tets[7][0], m.tets[7][1]);
  try {
    validate(m);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("non-positive volume") != std::string::npos);
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("validator flags an untagged boundary face") {
  TetMesh m = build_ball_shell(1, 1, 1.3);
  m.boundary_faces.pop_back();
  CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("validator flags overshared faces") {
  TetMesh m = build_ball_shell(1, 1, 1.3);
  m.tets.push_back(m.tets[0]);  // duplicate tet: its faces now appear 2 or 3 times
  CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("meshtxt round-trip is bit exact") {
  TetMesh m = build_ball_shell(2, 1, 1.3);
  std::ostringstream os;
  write_meshtxt(m, os);
  std::istringstream is(os.str());
  TetMesh r = read_meshtxt(is);
  REQUIRE(r.vertices.size() == m.vertices.size());
  REQUIRE(r.tets.size() == m.tets.size());
  REQUIRE(r.boundary_faces.size() == m.boundary_faces.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    CHECK(r.vertices[i].x() == m.vertices[i].x());
    CHECK(r.vertices[i].y() == m.vertices[i].y());
    CHECK(r.vertices[i].z() == m.vertices[i].z());
  }
  for (std::size_t i = 0; i < m.tets.size(); ++i) CHECK(r.tets[i] == m.tets[i]);
  for (std::size_t i = 0; i < m.boundary_faces.size(); ++i) {
    CHECK(r.boundary_faces[i].v == m.boundary_faces[i].v);
    CHECK(r.boundary_faces[i].tag == m.boundary_faces[i].tag);
  }
  // second round trip reproduces the same bytes
  std::ostringstream os2;
  write_meshtxt(r, os2);
  CHECK(os2.str() == os.str());
}

TEST_CASE("meshtxt parse errors carry line numbers") {
  std::istringstream bad("meshtxt v1\nv 0 0 0\nt 0 1 2 9\n");
  CHECK_THROWS_AS(read_meshtxt(bad), ParseError);
  std::istringstream nohdr("v 0 0 0\n");
  CHECK_THROWS_AS(read_meshtxt(nohdr), ParseError);
}

TEST_CASE("gmsh v2.2 single tet") {
  std::istringstream is(kSingleTetMsh22);
  TetMesh m = load_msh(is, {{1, FaceTag::GammaD}});
  CHECK(m.tets.size() == 1);
  CHECK(m.boundary_faces.size() == 4);
  for (const auto& f : m.boundary_faces) CHECK(f.tag == FaceTag::GammaD);
}

TEST_CASE("gmsh v4.1 single tet") {
  std::istringstream is(kSingleTetMsh41);
  TetMesh m = load_msh(is, {{1, FaceTag::GammaD}});
  CHECK(m.tets.size() == 1);
  CHECK(m.boundary_faces.size() == 4);
}

TEST_CASE("gmsh reader reports unknown physical tags") {
  std::istringstream is(kSingleTetMsh22);
  try {
    load_msh(is, {{3, FaceTag::GammaD}});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("physical tag 1") != std::string::npos);
  }
}

TEST_CASE("gmsh reader rejects unsupported versions") {
  std::istringstream is("$MeshFormat\n3.0 0 8\n$EndMeshFormat\n");
  CHECK_THROWS_AS(load_msh(is, {}), ParseError);
}

TEST_CASE("gmsh reader drops unreferenced nodes") {
  std::string content = kSingleTetMsh22;
  content.replace(content.find("$Nodes\n4"), 8, "$Nodes\n5");
  content.insert(content.find("$EndNodes"), "9 5 5 5\n");
  std::istringstream is(content);
  TetMesh m = load_msh(is, {{1, FaceTag::GammaD}});
  CHECK(m.vertices.size() == 4);
}
