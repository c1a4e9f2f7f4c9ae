#include "nhscatter/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace nhscatter::linalg {

namespace {

double abs1(Complex z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Complex Givens rotation zeroing b in (a, b): returns (c, s) with c real,
// G = [[c, s], [-conj(s), c]], G^H [a; b] = [r; 0].
struct Givens {
  double c;
  Complex s;
};

Givens make_givens(Complex a, Complex b) {
  const double na = std::abs(a);
  const double nb = std::abs(b);
  if (nb == 0.0) return {1.0, Complex(0.0, 0.0)};
  if (na == 0.0) return {0.0, Complex(1.0, 0.0)};
  const double r = std::hypot(na, nb);
  const Complex unit_a = a / na;
  return {na / r, unit_a * std::conj(b) / r};
}

}  // namespace

Matrix Matrix::identity(long n) {
  Matrix m(n, n);
  for (long i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

std::vector<Complex> matvec(const Matrix& A, const std::vector<Complex>& x) {
  std::vector<Complex> y(A.rows());
  for (long i = 0; i < A.rows(); ++i) {
    const Complex* r = A.row(i);
    Complex acc = 0.0;
    for (long j = 0; j < A.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

double norm2(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const Complex& z : v) s += std::norm(z);
  return std::sqrt(s);
}

void hessenberg(Matrix& A, Matrix& Q) {
  const long n = A.rows();
  Q = Matrix::identity(n);
  if (n < 3) return;

  std::vector<Complex> v(n), w(n);
  for (long j = 0; j + 2 < n; ++j) {
    // Householder vector for column j, rows j+1..n-1.
    double colnorm = 0.0;
    for (long i = j + 1; i < n; ++i) colnorm += std::norm(A.at(i, j));
    colnorm = std::sqrt(colnorm);
    if (colnorm == 0.0) continue;

    const Complex a0 = A.at(j + 1, j);
    const Complex phase = (std::abs(a0) == 0.0) ? Complex(1.0, 0.0) : a0 / std::abs(a0);
    const Complex alpha = -phase * colnorm;

    double vnorm2 = 0.0;
    for (long i = j + 1; i < n; ++i) {
      v[i] = A.at(i, j);
      if (i == j + 1) v[i] -= alpha;
      vnorm2 += std::norm(v[i]);
    }
    if (vnorm2 == 0.0) continue;
    const double tau = 2.0 / vnorm2;

    // A <- (I - tau v v^H) A : rows j+1..n-1, all columns.
    for (long c = j; c < n; ++c) {
      Complex dot = 0.0;
      for (long i = j + 1; i < n; ++i) dot += std::conj(v[i]) * A.at(i, c);
      dot *= tau;
      for (long i = j + 1; i < n; ++i) A.at(i, c) -= dot * v[i];
    }
    // A <- A (I - tau v v^H) : columns j+1..n-1, all rows.
    for (long r = 0; r < n; ++r) {
      Complex* Ar = A.row(r);
      Complex dot = 0.0;
      for (long i = j + 1; i < n; ++i) dot += Ar[i] * v[i];
      dot *= tau;
      for (long i = j + 1; i < n; ++i) Ar[i] -= dot * std::conj(v[i]);
    }
    // Q <- Q (I - tau v v^H)
    for (long r = 0; r < n; ++r) {
      Complex* Qr = Q.row(r);
      Complex dot = 0.0;
      for (long i = j + 1; i < n; ++i) dot += Qr[i] * v[i];
      dot *= tau;
      for (long i = j + 1; i < n; ++i) Qr[i] -= dot * std::conj(v[i]);
    }
    // Clean the annihilated entries.
    A.at(j + 1, j) = alpha;
    for (long i = j + 2; i < n; ++i) A.at(i, j) = 0.0;
  }
}

std::vector<Complex> hessenberg_eigenvalues(Matrix& H, long max_sweeps_per_n) {
  const long n = H.rows();
  std::vector<Complex> eig(n);
  if (n == 0) return eig;
  if (n == 1) {
    eig[0] = H.at(0, 0);
    return eig;
  }

  const double eps = std::numeric_limits<double>::epsilon();
  double hnorm = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = std::max<long>(0, i - 1); j < n; ++j) hnorm = std::max(hnorm, abs1(H.at(i, j)));
  if (hnorm == 0.0) return eig;
  const double tiny = eps * hnorm;

  long hi = n - 1;
  long iter = 0;
  long total_iter = 0;
  const long iter_cap = max_sweeps_per_n * n;

  while (hi >= 0) {
    // Deflate converged eigenvalues at the bottom of the active block.
    if (hi == 0) {
      eig[0] = H.at(0, 0);
      break;
    }
    // Negligible subdiagonal scan for the active block end.
    {
      const double thresh =
          eps * (abs1(H.at(hi - 1, hi - 1)) + abs1(H.at(hi, hi))) + tiny;
      if (abs1(H.at(hi, hi - 1)) <= thresh) {
        H.at(hi, hi - 1) = 0.0;
        eig[hi] = H.at(hi, hi);
        --hi;
        iter = 0;
        continue;
      }
    }
    // Find the start of the active block.
    long lo = hi;
    while (lo > 0) {
      const double thresh =
          eps * (abs1(H.at(lo - 1, lo - 1)) + abs1(H.at(lo, lo))) + tiny;
      if (abs1(H.at(lo, lo - 1)) <= thresh) {
        H.at(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }

    if (++total_iter > iter_cap || iter > iter_cap) {
      throw Error(ErrorCode::QRStall,
                  "QR failed to deflate block [" + std::to_string(lo) + "," +
                      std::to_string(hi) + "] of order " + std::to_string(n));
    }

    // Shift selection: Wilkinson shift from the trailing 2x2; deterministic
    // exceptional shift every 16 iterations on the same block.
    Complex shift;
    ++iter;
    if (iter % 16 == 0) {
      shift = H.at(hi, hi) + Complex(0.75 * std::abs(H.at(hi, hi - 1).real()) +
                                         0.75 * std::abs(H.at(hi, hi - 1).imag()),
                                     0.0);
    } else {
      const Complex a = H.at(hi - 1, hi - 1);
      const Complex b = H.at(hi - 1, hi);
      const Complex c = H.at(hi, hi - 1);
      const Complex d = H.at(hi, hi);
      const Complex tr2 = 0.5 * (a + d);
      const Complex disc = std::sqrt(tr2 * tr2 - (a * d - b * c));
      const Complex l1 = tr2 + disc;
      const Complex l2 = tr2 - disc;
      shift = (std::abs(l1 - d) < std::abs(l2 - d)) ? l1 : l2;
    }

    // Implicit single-shift QR sweep on [lo, hi] via Givens chasing.
    Complex x = H.at(lo, lo) - shift;
    Complex y = H.at(lo + 1, lo);
    for (long k = lo; k < hi; ++k) {
      const Givens g = make_givens(x, y);
      // Apply G^H from the left to rows k, k+1.
      const long cstart = std::max(lo, k - 1);
      for (long c = cstart; c <= hi; ++c) {
        const Complex t1 = H.at(k, c);
        const Complex t2 = H.at(k + 1, c);
        H.at(k, c) = g.c * t1 + g.s * t2;
        H.at(k + 1, c) = -std::conj(g.s) * t1 + g.c * t2;
      }
      // Apply G from the right to columns k, k+1.
      const long rend = std::min(hi, k + 2);
      for (long r = lo; r <= rend; ++r) {
        const Complex t1 = H.at(r, k);
        const Complex t2 = H.at(r, k + 1);
        H.at(r, k) = g.c * t1 + t2 * std::conj(g.s);
        H.at(r, k + 1) = -t1 * g.s + g.c * t2;
      }
      if (k + 2 <= hi) {
        x = H.at(k + 1, k);
        y = H.at(k + 2, k);
      }
    }
  }
  return eig;
}

HessenbergLU lu_hessenberg(const Matrix& H, Complex shift) {
  const long n = H.rows();
  HessenbergLU f;
  f.lu = H;
  for (long i = 0; i < n; ++i) f.lu.at(i, i) -= shift;
  f.piv.assign(n, 0);

  for (long j = 0; j + 1 < n; ++j) {
    // Pivot between adjacent rows j and j+1 (Hessenberg structure).
    if (std::abs(f.lu.at(j + 1, j)) > std::abs(f.lu.at(j, j))) {
      f.piv[j] = j + 1;
      Complex* r1 = f.lu.row(j);
      Complex* r2 = f.lu.row(j + 1);
      for (long c = j; c < n; ++c) std::swap(r1[c], r2[c]);
    } else {
      f.piv[j] = j;
    }
    Complex d = f.lu.at(j, j);
    if (d == Complex(0.0, 0.0)) {
      d = Complex(std::numeric_limits<double>::min() * 1e3, 0.0);
      f.lu.at(j, j) = d;
    }
    const Complex m = f.lu.at(j + 1, j) / d;
    f.lu.at(j + 1, j) = m;  // store the multiplier
    Complex* rj = f.lu.row(j);
    Complex* rj1 = f.lu.row(j + 1);
    for (long c = j + 1; c < n; ++c) rj1[c] -= m * rj[c];
  }
  if (f.lu.at(n - 1, n - 1) == Complex(0.0, 0.0))
    f.lu.at(n - 1, n - 1) = Complex(std::numeric_limits<double>::min() * 1e3, 0.0);
  return f;
}

std::vector<Complex> lu_solve(const HessenbergLU& f, std::vector<Complex> b) {
  const long n = f.lu.rows();
  for (long j = 0; j + 1 < n; ++j) {
    if (f.piv[j] != j) std::swap(b[j], b[j + 1]);
    b[j + 1] -= f.lu.at(j + 1, j) * b[j];
  }
  for (long i = n - 1; i >= 0; --i) {
    Complex acc = b[i];
    const Complex* r = f.lu.row(i);
    for (long c = i + 1; c < n; ++c) acc -= r[c] * b[c];
    b[i] = acc / r[i];
  }
  return b;
}

namespace {

// Small dense eigensolver used for within-cluster problems; reuses the same
// Hessenberg + QR + inverse-iteration path.
void cluster_vectors(const Matrix& Hh, const Matrix& Q, const std::vector<Complex>& values,
                     const std::vector<long>& members, double scale, Matrix& vectors) {
  const long n = Hh.rows();
  const long g = static_cast<long>(members.size());

  Complex mean = 0.0;
  for (long idx : members) mean += values[idx];
  mean /= static_cast<double>(g);
  const Complex eps_shift(1e-10 * scale, 1e-10 * scale);

  const HessenbergLU f = lu_hessenberg(Hh, mean + eps_shift);

  // Orthogonal (inverse subspace) iteration with a fixed start basis.
  std::vector<std::vector<Complex>> W(g, std::vector<Complex>(n));
  for (long c = 0; c < g; ++c)
    for (long i = 0; i < n; ++i)
      W[c][i] = Complex(1.0 / std::sqrt(double(n)), 0.0) +
                (i % (c + 2) == 0 ? Complex(0.5 / std::sqrt(double(n)), 0.0) : Complex(0.0, 0.0));

  for (int sweep = 0; sweep < 3; ++sweep) {
    for (long c = 0; c < g; ++c) W[c] = lu_solve(f, W[c]);
    // Modified Gram-Schmidt.
    for (long c = 0; c < g; ++c) {
      for (long prev = 0; prev < c; ++prev) {
        Complex dot = 0.0;
        for (long i = 0; i < n; ++i) dot += std::conj(W[prev][i]) * W[c][i];
        for (long i = 0; i < n; ++i) W[c][i] -= dot * W[prev][i];
      }
      const double nv = norm2(W[c]);
      if (nv > 0.0)
        for (long i = 0; i < n; ++i) W[c][i] /= nv;
    }
  }

  // Small projected problem M = W^H Hh W.
  Matrix M(g, g);
  std::vector<std::vector<Complex>> HW(g);
  for (long c = 0; c < g; ++c) HW[c] = matvec(Hh, W[c]);
  for (long r = 0; r < g; ++r)
    for (long c = 0; c < g; ++c) {
      Complex dot = 0.0;
      for (long i = 0; i < n; ++i) dot += std::conj(W[r][i]) * HW[c][i];
      M.at(r, c) = dot;
    }

  Matrix Mq;
  hessenberg(M, Mq);
  Matrix Mcopy = M;
  std::vector<Complex> mvals = hessenberg_eigenvalues(Mcopy);

  // Vectors of M by inverse iteration on the small matrix.
  std::vector<std::vector<Complex>> small_vecs(g);
  for (long c = 0; c < g; ++c) {
    const HessenbergLU mf = lu_hessenberg(M, mvals[c] + Complex(1e-14 * scale, 1e-14 * scale));
    std::vector<Complex> w(g, Complex(1.0 / std::sqrt(double(g)), 0.0));
    for (int it = 0; it < 3; ++it) {
      w = lu_solve(mf, w);
      const double nv = norm2(w);
      if (nv > 0.0)
        for (auto& z : w) z /= nv;
    }
    // Back to Hessenberg coordinates through Mq.
    std::vector<Complex> wq(g, 0.0);
    for (long i = 0; i < g; ++i)
      for (long j = 0; j < g; ++j) wq[i] += Mq.at(i, j) * w[j];
    small_vecs[c] = wq;
  }

  // Match projected eigenvalues to cluster members by nearest distance.
  std::vector<bool> used(g, false);
  for (long idx_pos = 0; idx_pos < g; ++idx_pos) {
    const long idx = members[idx_pos];
    long best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (long c = 0; c < g; ++c) {
      if (used[c]) continue;
      const double d = std::abs(mvals[c] - values[idx]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    used[best] = true;
    // v = Q * (W * small_vec)
    std::vector<Complex> wfull(n, 0.0);
    for (long c = 0; c < g; ++c)
      for (long i = 0; i < n; ++i) wfull[i] += small_vecs[best][c] * W[c][i];
    std::vector<Complex> v(n, 0.0);
    for (long i = 0; i < n; ++i) {
      const Complex* Qr = Q.row(i);
      Complex acc = 0.0;
      for (long j = 0; j < n; ++j) acc += Qr[j] * wfull[j];
      v[i] = acc;
    }
    const double nv = norm2(v);
    for (long i = 0; i < n; ++i) vectors.at(i, idx) = v[i] / nv;
  }
}

}  // namespace

EigenSystem eigensystem(const Matrix& A, double cluster_tol) {
  const long n = A.rows();
  if (n != A.cols()) throw Error(ErrorCode::DimensionMismatch, "eigensystem needs a square matrix");

  Matrix Hh = A;
  Matrix Q;
  hessenberg(Hh, Q);

  Matrix Hcopy = Hh;
  EigenSystem es;
  es.values = hessenberg_eigenvalues(Hcopy);
  es.vectors = Matrix(n, n);

  double scale = 0.0;
  for (const Complex& z : es.values) scale = std::max(scale, std::abs(z));
  if (scale == 0.0) scale = 1.0;

  // Group near-degenerate eigenvalues; handled jointly to avoid
  // inverse-iteration cross talk.
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<long> cluster_of(n, -1);
  std::vector<std::vector<long>> clusters;
  const double gap = cluster_tol * scale;
  for (long i = 0; i < n; ++i) {
    if (cluster_of[i] >= 0) continue;
    std::vector<long> members{i};
    cluster_of[i] = static_cast<long>(clusters.size());
    for (long j = i + 1; j < n; ++j) {
      if (cluster_of[j] >= 0) continue;
      for (long m : members) {
        if (std::abs(es.values[j] - es.values[m]) < gap) {
          members.push_back(j);
          cluster_of[j] = cluster_of[i];
          break;
        }
      }
    }
    clusters.push_back(std::move(members));
  }

  const std::vector<Complex> start(n, Complex(1.0 / std::sqrt(double(n)), 0.0));
  for (const auto& members : clusters) {
    if (members.size() > 1) {
      cluster_vectors(Hh, Q, es.values, members, scale, es.vectors);
      continue;
    }
    const long idx = members[0];
    const Complex eps_shift(1e-10 * scale, 1e-10 * scale);
    const HessenbergLU f = lu_hessenberg(Hh, es.values[idx] + eps_shift);
    std::vector<Complex> w = start;
    for (int it = 0; it < 2; ++it) {
      w = lu_solve(f, w);
      const double nv = norm2(w);
      if (nv == 0.0) break;
      for (auto& z : w) z /= nv;
    }
    // v = Q w
    for (long i = 0; i < n; ++i) {
      const Complex* Qr = Q.row(i);
      Complex acc = 0.0;
      for (long j = 0; j < n; ++j) acc += Qr[j] * w[j];
      es.vectors.at(i, idx) = acc;
    }
    double nv = 0.0;
    for (long i = 0; i < n; ++i) nv += std::norm(es.vectors.at(i, idx));
    nv = std::sqrt(nv);
    for (long i = 0; i < n; ++i) es.vectors.at(i, idx) /= nv;
  }
  return es;
}

std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs) {
  long deg = static_cast<long>(coeffs.size()) - 1;
  while (deg > 0 && std::abs(coeffs[deg]) == 0.0) --deg;
  if (deg <= 0) throw Error(ErrorCode::DegenerateBath, "polynomial has no roots");

  Matrix C(deg, deg);
  const Complex lead = coeffs[deg];
  for (long i = 0; i < deg; ++i) {
    C.at(i, deg - 1) = -coeffs[i] / lead;
    if (i + 1 < deg) C.at(i + 1, i) = 1.0;
  }
  Matrix Q;
  hessenberg(C, Q);  // companion is already Hessenberg; cheap no-op pass
  return hessenberg_eigenvalues(C);
}

}  // namespace nhscatter::linalg
