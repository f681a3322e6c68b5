#include <catch2/catch_amalgamated.hpp>
#include <Eigen/SVD>

#include "scatpole/dtn.hpp"
#include "scatpole/edge_fem.hpp"
#include "scatpole/mesh.hpp"
#include "scatpole/quadrature.hpp"

using namespace scatpole;

namespace {

DtnHandle shell_handle(int n_tan, int n_rad, int N, double R = 1.3) {
  TetMesh m = build_ball_shell(n_tan, n_rad, R);
  EdgeDofMap d = build_dof_map(m);
  return make_dtn_handle(assemble_trace_matrix(m, d, N, R, 2));
}

/// Edge interpolant of a tangential harmonic field on the GammaR edges,
/// indexed by trace-matrix columns.
Eigen::VectorXcd interpolate_trace(const TetMesh& m, const EdgeDofMap& d, const TraceMatrix& Q,
                                   const std::function<Eigen::Vector3cd(const Eigen::Vector3d&)>& field) {
  auto rule3 = gauss_legendre(3);
  std::vector<int> col_of_free(d.n_free, -1);
  for (std::size_t c = 0; c < Q.support.size(); ++c) col_of_free[Q.support[c]] = int(c);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(Q.values.cols());
  for (std::size_t e = 0; e < d.edges.size(); ++e) {
    int fi = d.free_index[e];
    if (fi < 0 || !d.gamma_r[e]) continue;
    const Eigen::Vector3d a = m.vertices[std::size_t(d.edges[e][0])];
    const Eigen::Vector3d b = m.vertices[std::size_t(d.edges[e][1])];
    Complex circ = 0;
    for (const auto& gp : rule3) {
      Eigen::Vector3d x = 0.5 * (a + b) + 0.5 * gp.x * (b - a);
      circ += 0.5 * gp.w * field(x.normalized()).cwiseProduct((b - a).cast<Complex>()).sum();
    }
    u[col_of_free[fi]] = circ;
  }
  return u;
}

}  // namespace

TEST_CASE("dtn coefficients: definitions and poles") {
  // at kappa = i, R = 1: c_U = -1/delta > 0, c_V = -delta > 0, both real
  DtnCoeffs c = dtn_coeffs(Complex(0, 1), 10, 1.0);
  for (int n = 1; n <= 10; ++n) {
    CHECK(std::abs(c.cU[n - 1].imag()) < 1e-13 * std::abs(c.cU[n - 1]));
    CHECK(std::abs(c.cV[n - 1].imag()) < 1e-13 * std::abs(c.cV[n - 1]));
    CHECK(c.cU[n - 1].real() > 0.0);
    CHECK(c.cV[n - 1].real() > 0.0);
  }

  // delta_1 vanishes at kappa = (sqrt(3) - i)/2, R = 1: c_U pole
  const Complex root1 = Complex(std::sqrt(3.0), -1.0) / 2.0;
  try {
    dtn_coeffs(root1, 2, 1.0);
    FAIL("expected pole");
  } catch (const CoefficientPoleError& e) {
    CHECK(e.n == 1);
    CHECK(e.factor == 'z');
  }

  // h_1 pole propagates with factor 'h'
  try {
    dtn_coeffs(Complex(0, -1), 2, 1.0);
    FAIL("expected pole");
  } catch (const CoefficientPoleError& e) {
    CHECK(e.n == 1);
    CHECK(e.factor == 'h');
  }
}

TEST_CASE("dtn coefficient asymptotics at n = 40") {
  Complex kappa(1.0, -0.5);
  double R = 1.3;
  DtnCoeffs c = dtn_coeffs(kappa, 40, R);
  Complex kR = kappa * R;
  Complex expect = (-40.0 + kR * kR / 79.0) / (kImag * kR);
  CHECK(std::abs(c.cV[39] - expect) < 0.02 * std::abs(c.cV[39]));
}

TEST_CASE("materialize_E: complex symmetry and low rank") {
  DtnHandle h = shell_handle(1, 1, 10);
  BoundaryBlock eb = materialize_E(h, Complex(0.9, -0.6));
  double asym = (eb.block - eb.block.transpose()).norm();
  CHECK(asym <= 1e-12 * eb.block.norm());

  // rank bounded by the number of retained harmonics
  DtnHandle h2 = shell_handle(2, 1, 2);  // 16 rows, 72 boundary DOFs
  BoundaryBlock eb2 = materialize_E(h2, Complex(0.9, -0.6));
  REQUIRE(eb2.block.rows() > 16);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(eb2.block);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
  CHECK(rank <= 2 * 2 * (2 + 2));
}

TEST_CASE("materialize_E agrees with the direct double sum") {
  DtnHandle h = shell_handle(1, 1, 3);
  Complex kappa(1.1, -0.7);
  BoundaryBlock eb = materialize_E(h, kappa);
  DtnCoeffs c = dtn_coeffs(kappa, h);
  const Eigen::Index ns = eb.block.rows();
  double scale = eb.block.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < ns; ++i)
    for (Eigen::Index j = 0; j < ns; ++j) {
      Complex sum = 0;
      for (int r = 0; r < h.Q.values.rows(); ++r) {
        char fam;
        int n, mm;
        TraceMatrix::row_key(r, h.N, fam, n, mm);
        Complex coef = fam == 'U' ? c.cU[n - 1] : c.cV[n - 1];
        sum += coef * std::conj(h.Q.values(r, i)) * h.Q.values(r, j);
      }
      sum /= h.R * h.R;
      CHECK(std::abs(eb.block(i, j) - sum) <= 1e-12 * scale);
    }
}

TEST_CASE("materialize_E pole propagation") {
  DtnHandle h = shell_handle(1, 1, 2, 1.3);
  // delta_1(kappa R) = 0 at kappa R = (sqrt(3) - i)/2
  const Complex pole = Complex(std::sqrt(3.0), -1.0) / 2.0 / 1.3;
  CHECK_THROWS_AS(materialize_E(h, pole), CoefficientPoleError);
}

TEST_CASE("materialize_dE matches central differences at second order") {
  DtnHandle h = shell_handle(1, 1, 4);
  const Complex kappas[] = {{0.9, -0.5}, {1.4, -1.1}, {0.5, -1.6}};
  for (Complex kappa : kappas) {
    Eigen::MatrixXcd dE = materialize_dE(h, kappa).block;
    auto fd_err = [&](double step) {
      Eigen::MatrixXcd fd = (materialize_E(h, kappa + step).block -
                             materialize_E(h, kappa - step).block) /
                            (2.0 * step);
      return (fd - dE).norm();
    };
    double e1 = fd_err(1e-4);
    double e2 = fd_err(1e-5);
    double ratio = e1 / e2;
    CHECK(ratio > 50.0);
    CHECK(ratio < 200.0);
  }
}

TEST_CASE("apply_T_to_harmonic returns the diagonal multiplier") {
  DtnHandle h = shell_handle(1, 1, 10);
  Complex kappa(1.0, -1.0);
  DtnRatio d1 = dtn_ratio(1, kappa, 1.3);
  Complex want = d1.delta / (kImag * kappa * 1.3);
  CHECK(std::abs(apply_T_to_harmonic(h, kappa, 'V', 1, 0) - want) < 1e-14 * std::abs(want));
  // m-independence
  for (int mm = -3; mm <= 3; ++mm)
    CHECK(apply_T_to_harmonic(h, kappa, 'U', 3, mm) == apply_T_to_harmonic(h, kappa, 'U', 3, 0));
  CHECK_THROWS_AS(apply_T_to_harmonic(h, kappa, 'U', 11, 0), DomainError);
}

TEST_CASE("full pipeline: interpolated V_1^0 sees its diagonal multiplier") {
  Complex kappa(1.0, -0.8);
  double prev_err = 1e30;
  for (int n : {2, 4}) {
    TetMesh m = build_ball_shell(n, n, 1.3);
    EdgeDofMap d = build_dof_map(m);
    DtnHandle h = make_dtn_handle(assemble_trace_matrix(m, d, 4, 1.3, 2));
    Eigen::VectorXcd u = interpolate_trace(m, d, h.Q, [](const Eigen::Vector3d& dir) {
      HarmonicTable t(1, dir);
      return t.V(1, 0);
    });
    BoundaryBlock eb = materialize_E(h, kappa);
    Complex energy = (u.adjoint() * eb.block * u)(0);
    Complex target = apply_T_to_harmonic(h, kappa, 'V', 1, 0) * (1.3 * 1.3);
    double err = std::abs(energy - target) / std::abs(target);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.4);
}

TEST_CASE("truncation decay of the duality pairing: exact coefficients") {
  // Trace given by exact Fourier data with an algebraic tail (the regime of
  // the truncation-error bound): a_n^m = b_n^m = n^{-3} for |m| <= min(n, 2).
  Complex kappa(1.0, -0.6);
  double R = 1.3;
  DtnCoeffs c = dtn_coeffs(kappa, 20, R);
  auto duality = [&](int N) {
    Complex s = 0;
    for (int n = 1; n <= N; ++n) {
      double coef = std::pow(double(n), -3.0);
      int mults = 2 * std::min(n, 2) + 1;
      s += double(mults) * R * R * coef * coef * (c.cU[n - 1] + c.cV[n - 1]);
    }
    return s;
  };
  double prev = 1e30;
  for (int N : {4, 6, 8, 10}) {
    double diff = std::abs(duality(2 * N) - duality(N));
    CHECK(diff < prev);
    prev = diff;
  }
}

TEST_CASE("truncation differences sit at the discretization floor on a mesh") {
  // For an interpolated band-limited trace all content beyond n = 2 is
  // discretization error; raising N cannot change the duality beyond that
  // floor (the paper's N = 10 observation).
  TetMesh m = build_ball_shell(6, 2, 1.3);
  EdgeDofMap d = build_dof_map(m);
  DtnHandle h = make_dtn_handle(assemble_trace_matrix(m, d, 20, 1.3, 2));
  Eigen::VectorXcd u = interpolate_trace(m, d, h.Q, [](const Eigen::Vector3d& dir) {
    HarmonicTable t(2, dir);
    return (t.V(1, 0) + 0.3 * t.U(2, 1)).eval();
  });
  Complex kappa(1.0, -0.6);
  DtnCoeffs c = dtn_coeffs(kappa, h);
  Eigen::VectorXcd qu = h.Q.values * u;
  auto duality = [&](int N) {
    Complex s = 0;
    for (int r = 0; r < qu.size(); ++r) {
      char fam;
      int n, mm;
      TraceMatrix::row_key(r, h.N, fam, n, mm);
      if (n > N) continue;
      Complex coef = fam == 'U' ? c.cU[n - 1] : c.cV[n - 1];
      s += coef * std::conj(qu[r]) * qu[r] / (h.R * h.R);
    }
    return s;
  };
  double base = std::abs(duality(10));
  for (int N : {4, 6, 8, 10})
    CHECK(std::abs(duality(2 * N) - duality(N)) < 1e-4 * base);
}
