// linalg.hpp — dense complex linear algebra: Hessenberg reduction, shifted QR
// eigenvalues, Hessenberg LU solves and inverse iteration. Self-contained so
// the exact-diagonalization oracle carries no external numerical dependency.

#pragma once

#include <vector>

#include "nhscatter/types.hpp"

namespace nhscatter::linalg {

// Dense row-major complex matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(long rows, long cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

  long rows() const { return rows_; }
  long cols() const { return cols_; }
  Complex& at(long i, long j) { return a_[i * cols_ + j]; }
  const Complex& at(long i, long j) const { return a_[i * cols_ + j]; }
  Complex* row(long i) { return a_.data() + i * cols_; }
  const Complex* row(long i) const { return a_.data() + i * cols_; }
  std::vector<Complex>& data() { return a_; }
  const std::vector<Complex>& data() const { return a_; }

  static Matrix identity(long n);

 private:
  long rows_ = 0;
  long cols_ = 0;
  std::vector<Complex> a_;
};

// y = A x
std::vector<Complex> matvec(const Matrix& A, const std::vector<Complex>& x);

double norm2(const std::vector<Complex>& v);

// Reduce A to upper Hessenberg form in place by unitary similarity; Q
// accumulates the transformation so that A_in = Q H Q^H.
void hessenberg(Matrix& A, Matrix& Q);

// Eigenvalues of an upper Hessenberg matrix via single-shift complex QR with
// deflation. The matrix is destroyed. Iteration order is fixed, so results
// are reproducible bit for bit. Throws Error(QRStall) if an eigenvalue fails
// to deflate within max_sweeps_per_n * n iterations.
std::vector<Complex> hessenberg_eigenvalues(Matrix& H, long max_sweeps_per_n = 30);

// LU factorization with partial pivoting of a Hessenberg matrix, kept in
// compact form for repeated solves.
struct HessenbergLU {
  Matrix lu;              // U in the upper triangle, L multipliers below
  std::vector<long> piv;  // row swap applied at step j (j or j+1)
};

HessenbergLU lu_hessenberg(const Matrix& H, Complex shift);
std::vector<Complex> lu_solve(const HessenbergLU& f, std::vector<Complex> b);

struct EigenSystem {
  std::vector<Complex> values;
  Matrix vectors;  // column i is the right eigenvector for values[i], unit norm
};

// Full dense nonsymmetric eigensolver: Hessenberg + QR for values, inverse
// iteration (with joint subspace extraction for near-degenerate clusters) for
// right eigenvectors. cluster_tol is relative to the spectral scale.
EigenSystem eigensystem(const Matrix& A, double cluster_tol = 1e-8);

// Roots of a polynomial sum_j c[j] y^j (c.back() != 0) via the companion
// matrix; used by the bath symbol machinery.
std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs);

}  // namespace nhscatter::linalg
