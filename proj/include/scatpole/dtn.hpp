#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "scatpole/errors.hpp"
#include "scatpole/specfun.hpp"

namespace scatpole {

/// Dense factor of the DtN block: one row per harmonic (U block in (n, m)
/// lexicographic order, then the V block), one column per free DOF with
/// support on GammaR. Entry = integral over GammaR of the tangential edge
/// basis trace against the conjugated harmonic.
struct TraceMatrix {
  int N = 0;
  double R = 0;
  std::vector<int> support;  // free DOF ids, ascending
  Eigen::MatrixXcd values;   // 2 N (N+2) rows x support.size() columns

  static int rows_per_family(int N) { return N * (N + 2); }
  static int row_count(int N) { return 2 * rows_per_family(N); }

  /// family 'U' or 'V'; rows within a family ordered by HarmonicTable::index.
  static int row_index(char family, int n, int m, int N) {
    int base = family == 'V' ? rows_per_family(N) : 0;
    return base + HarmonicTable::index(n, m);
  }

  /// Inverse of row_index: (family, n, m) of a row.
  static void row_key(int row, int N, char& family, int& n, int& m) {
    int per = rows_per_family(N);
    family = row < per ? 'U' : 'V';
    int r = row % per;
    n = int(std::floor(std::sqrt(double(r + 1)) + 1e-12));
    m = r + 1 - n * n - n;
  }
};

struct DtnHandle {
  TraceMatrix Q;
  int N = 0;
  double R = 0;
};

inline DtnHandle make_dtn_handle(TraceMatrix Q) {
  DtnHandle h;
  h.N = Q.N;
  h.R = Q.R;
  h.Q = std::move(Q);
  return h;
}

/// Per-order Calderon coefficients c_{U,n} = i kappa R / delta_n and
/// c_{V,n} = delta_n / (i kappa R), n = 1..N, plus their kappa-derivatives.
struct DtnCoeffs {
  std::vector<Complex> cU, cV;    // index n-1
  std::vector<Complex> dcU, dcV;  // d/dkappa
};

inline DtnCoeffs dtn_coeffs(Complex kappa, int N, double R) {
  if (kappa == 0.0) throw DomainError("dtn_coeffs: kappa = 0");
  DtnCoeffs c;
  c.cU.resize(N);
  c.cV.resize(N);
  c.dcU.resize(N);
  c.dcV.resize(N);
  const Complex ikR = kImag * kappa * R;
  for (int n = 1; n <= N; ++n) {
    DtnRatio dr = dtn_ratio(n, kappa, R);
    if (std::abs(dr.delta) < 1e-12 * (1.0 + n))
      throw CoefficientPoleError(n, 'z',
                                 "dtn_coeffs: delta_n vanishes at n = " + std::to_string(n));
    c.cU[n - 1] = ikR / dr.delta;
    c.cV[n - 1] = dr.delta / ikR;
    c.dcU[n - 1] = kImag * R / dr.delta - ikR * dr.delta_prime / (dr.delta * dr.delta);
    c.dcV[n - 1] = dr.delta_prime / ikR + kImag * dr.delta / (kappa * kappa * R);
  }
  return c;
}

inline DtnCoeffs dtn_coeffs(Complex kappa, const DtnHandle& h) {
  return dtn_coeffs(kappa, h.N, h.R);
}

/// Dense boundary block over the GammaR-supported DOFs plus the support map.
struct BoundaryBlock {
  Eigen::MatrixXcd block;
  std::vector<int> support;
};

namespace detail {

inline Eigen::VectorXcd row_coefficients(const DtnHandle& h, const std::vector<Complex>& cU,
                                         const std::vector<Complex>& cV) {
  int rows = TraceMatrix::row_count(h.N);
  Eigen::VectorXcd d(rows);
  for (int r = 0; r < rows; ++r) {
    char fam;
    int n, m;
    TraceMatrix::row_key(r, h.N, fam, n, m);
    d[r] = fam == 'U' ? cU[n - 1] : cV[n - 1];
  }
  return d;
}

inline BoundaryBlock scaled_gram(const DtnHandle& h, const Eigen::VectorXcd& d) {
  BoundaryBlock out;
  out.support = h.Q.support;
  out.block = (h.Q.values.adjoint() * d.asDiagonal() * h.Q.values) / (h.R * h.R);
  return out;
}

}  // namespace detail

/// E(kappa) = (1/R^2) Q^H diag(c) Q restricted to the supported columns.
inline BoundaryBlock materialize_E(const DtnHandle& h, Complex kappa) {
  DtnCoeffs c = dtn_coeffs(kappa, h);
  return detail::scaled_gram(h, detail::row_coefficients(h, c.cU, c.cV));
}

/// dE/dkappa, same structure with the analytic coefficient derivatives.
inline BoundaryBlock materialize_dE(const DtnHandle& h, Complex kappa) {
  DtnCoeffs c = dtn_coeffs(kappa, h);
  return detail::scaled_gram(h, detail::row_coefficients(h, c.dcU, c.dcV));
}

/// Diagonal action of T^N on a pure (family, n, m) harmonic.
inline Complex apply_T_to_harmonic(const DtnHandle& h, Complex kappa, char family, int n, int m) {
  if (n < 1 || n > h.N || std::abs(m) > n)
    throw DomainError("apply_T_to_harmonic: harmonic order outside truncation range");
  DtnCoeffs c = dtn_coeffs(kappa, h);
  return family == 'U' ? c.cU[n - 1] : c.cV[n - 1];
}

}  // namespace scatpole
