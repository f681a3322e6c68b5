// Fixture mesh generator: writes the built-in shell meshes as meshtxt or
// Gmsh v2.2 files (physical tag 1 = GammaD, 2 = GammaR).

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "scatpole/mesh.hpp"

namespace {

void write_msh22(const scatpole::TetMesh& m, std::ostream& os) {
  os << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  os << "$PhysicalNames\n2\n2 1 \"GammaD\"\n2 2 \"GammaR\"\n$EndPhysicalNames\n";
  os << "$Nodes\n" << m.vertices.size() << "\n";
  char buf[160];
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g\n", i + 1, m.vertices[i].x(),
                  m.vertices[i].y(), m.vertices[i].z());
    os << buf;
  }
  os << "$EndNodes\n$Elements\n" << m.boundary_faces.size() + m.tets.size() << "\n";
  std::size_t id = 1;
  for (const auto& f : m.boundary_faces) {
    int tag = f.tag == scatpole::FaceTag::GammaD ? 1 : 2;
    os << id++ << " 2 2 " << tag << ' ' << tag << ' ' << f.v[0] + 1 << ' ' << f.v[1] + 1 << ' '
       << f.v[2] + 1 << '\n';
  }
  for (const auto& t : m.tets)
    os << id++ << " 4 2 1 1 " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << ' '
       << t[3] + 1 << '\n';
  os << "$EndElements\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scatpole fixture mesh generator"};
  std::string shape = "ball";
  int n_tan = 2, n_rad = 2;
  double r_outer = 1.3, half_width = 0.5;
  std::string format = "meshtxt", out_path;
  app.add_option("--shape", shape, "ball | cube")->check(CLI::IsMember({"ball", "cube"}));
  app.add_option("--n-tan", n_tan, "tangential divisions per cube face");
  app.add_option("--n-rad", n_rad, "radial layers");
  app.add_option("--r-outer", r_outer, "outer sphere radius");
  app.add_option("--half-width", half_width, "cube half width (cube shape)");
  app.add_option("--format", format, "meshtxt | msh22")
      ->check(CLI::IsMember({"meshtxt", "msh22"}));
  app.add_option("--out", out_path, "output path (default: stdout)");
  CLI11_PARSE(app, argc, argv);

  try {
    scatpole::TetMesh m = shape == "ball"
                              ? scatpole::build_ball_shell(n_tan, n_rad, r_outer)
                              : scatpole::build_cube_shell(half_width, n_tan, n_rad, r_outer);
    scatpole::validate(m);
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
      file.open(out_path, std::ios::binary);
      if (!file) throw scatpole::ConfigError("cannot open " + out_path);
      os = &file;
    }
    if (format == "meshtxt")
      scatpole::write_meshtxt(m, *os);
    else
      write_msh22(m, *os);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
