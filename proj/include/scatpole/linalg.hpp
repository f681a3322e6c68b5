#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "scatpole/dtn.hpp"
#include "scatpole/errors.hpp"

namespace scatpole {

/// CSR complex matrix; rows hold sorted, duplicate-free column indices.
struct ComplexSparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col_idx;
  std::vector<Complex> vals;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const {
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < n; ++i)
      for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) y[i] += vals[p] * x[col_idx[p]];
    return y;
  }

  Eigen::SparseMatrix<Complex> to_eigen() const {
    Eigen::Map<const Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>> map(
        n, n, int(vals.size()), row_ptr.data(), col_idx.data(), vals.data());
    return Eigen::SparseMatrix<Complex>(map);
  }

  static ComplexSparseMatrix from_eigen(const Eigen::SparseMatrix<Complex>& A) {
    Eigen::SparseMatrix<Complex, Eigen::RowMajor, int> B(A);
    B.makeCompressed();
    ComplexSparseMatrix out;
    out.n = int(A.rows());
    out.row_ptr.assign(B.outerIndexPtr(), B.outerIndexPtr() + out.n + 1);
    out.col_idx.assign(B.innerIndexPtr(), B.innerIndexPtr() + B.nonZeros());
    out.vals.assign(B.valuePtr(), B.valuePtr() + B.nonZeros());
    return out;
  }

  /// `i j re im` per entry, for offline inspection.
  void write_triplets(std::ostream& os) const {
    char buf[160];
    for (int i = 0; i < n; ++i)
      for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", i, col_idx[p], vals[p].real(),
                      vals[p].imag());
        os << buf;
      }
  }

  static ComplexSparseMatrix read_triplets(std::istream& is, int n) {
    std::vector<Eigen::Triplet<Complex>> trips;
    std::string line;
    long ln = 0;
    while (std::getline(is, line)) {
      ++ln;
      if (line.empty()) continue;
      std::istringstream ss(line);
      int i, j;
      double re, im;
      if (!(ss >> i >> j >> re >> im)) throw ParseError(ln, "bad triplet line");
      trips.emplace_back(i, j, Complex(re, im));
    }
    Eigen::SparseMatrix<Complex> A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    return from_eigen(A);
  }
};

/// F(kappa) = S - kappa^2 M - i kappa E(kappa); the dense DtN block is
/// spliced into the sparse pattern through its support map and symmetrized to
/// the last bit, so F is complex-symmetric by construction.
inline ComplexSparseMatrix build_F(const Eigen::SparseMatrix<double>& S,
                                   const Eigen::SparseMatrix<double>& M, const DtnHandle& dtn,
                                   Complex kappa) {
  if (S.rows() != M.rows() || S.rows() != S.cols())
    throw DomainError("build_F: dimension mismatch");
  BoundaryBlock eb = materialize_E(dtn, kappa);
  const Complex ik = kImag * kappa;
  Eigen::SparseMatrix<Complex> A = S.cast<Complex>() - (kappa * kappa) * M.cast<Complex>();
  const Eigen::Index ns = eb.block.rows();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(std::size_t(ns) * std::size_t(ns));
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < ns; ++b) {
      Complex v = -ik * 0.5 * (eb.block(a, b) + eb.block(b, a));
      trips.emplace_back(eb.support[a], eb.support[b], v);
    }
  Eigen::SparseMatrix<Complex> Eb(S.rows(), S.cols());
  Eb.setFromTriplets(trips.begin(), trips.end());
  A += Eb;
  A.makeCompressed();
  return ComplexSparseMatrix::from_eigen(A);
}

/// F'(kappa) = -2 kappa M - i E(kappa) - i kappa dE(kappa).
inline ComplexSparseMatrix build_dF(const Eigen::SparseMatrix<double>& M, const DtnHandle& dtn,
                                    Complex kappa) {
  BoundaryBlock eb = materialize_E(dtn, kappa);
  BoundaryBlock deb = materialize_dE(dtn, kappa);
  Eigen::SparseMatrix<Complex> A = (-2.0 * kappa) * M.cast<Complex>();
  const Eigen::Index ns = eb.block.rows();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(std::size_t(ns) * std::size_t(ns));
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < ns; ++b) {
      Complex e = 0.5 * (eb.block(a, b) + eb.block(b, a));
      Complex de = 0.5 * (deb.block(a, b) + deb.block(b, a));
      trips.emplace_back(eb.support[a], eb.support[b], -kImag * (e + kappa * de));
    }
  Eigen::SparseMatrix<Complex> Eb(M.rows(), M.cols());
  Eb.setFromTriplets(trips.begin(), trips.end());
  A += Eb;
  A.makeCompressed();
  return ComplexSparseMatrix::from_eigen(A);
}

/// Direct sparse factorization (Eigen SparseLU, COLAMD ordering). Solves are
/// reentrant; an exactly singular pivot raises SingularMatrixError.
class Factorization {
 public:
  explicit Factorization(const ComplexSparseMatrix& F) {
    Eigen::SparseMatrix<Complex> A = F.to_eigen();
    lu_.analyzePattern(A);
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success)
      throw SingularMatrixError("factorize: singular or numerically unstable pivot");
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const {
    Eigen::VectorXcd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) throw SingularMatrixError("solve failed");
    return x;
  }

  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& b) const {
    Eigen::MatrixXcd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) throw SingularMatrixError("solve failed");
    return x;
  }

  /// Factor fill, for memory reporting.
  long factor_nonzeros() const { return long(lu_.nnzL()) + long(lu_.nnzU()); }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu_;
};

inline Factorization factorize(const ComplexSparseMatrix& F) { return Factorization(F); }

inline Eigen::VectorXcd solve(const Factorization& fact, const Eigen::VectorXcd& b) {
  return fact.solve(b);
}

}  // namespace scatpole
