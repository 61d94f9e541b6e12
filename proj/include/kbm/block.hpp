#pragma once

// Fourier momentum blocks of the kinetic generator on the flat-torus cosphere
// bundle. In the fiber basis e^{i n theta}, n = -N..N, the block for base
// momentum k = (k1,k2) is tridiagonal:
//   entry (n,n)   = -i eps n^2
//   entry (n,n+1) = (k1 - i k2)/2
//   entry (n,n-1) = (k1 + i k2)/2
// A unitary change to the real trig basis {1, sqrt2 cos m, sqrt2 sin m} makes
// the block complex symmetric; that basis backs the symmetry tests.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>

#include "kbm/common.hpp"
#include "kbm/errors.hpp"

namespace kbm {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

struct Momentum {
  int k1 = 0, k2 = 0;
  double norm() const { return std::hypot(double(k1), double(k2)); }
  bool operator==(const Momentum& o) const { return k1 == o.k1 && k2 == o.k2; }
};

// vertical damping must resolve the boundary layer of weakly damped modes
inline int default_mode_truncation(double eps) {
  if (eps <= 0.0) return 64;
  return std::max(64, int(std::ceil(8.0 / std::sqrt(eps))));
}

struct SpectralBlock {
  Momentum k{};
  double epsilon = 0.0;
  int N = 0;
  Complex up{}, dn{};  // entries (n,n+1) and (n,n-1)

  int dim() const { return 2 * N + 1; }
  Complex diag(int row) const {
    double n = row - N;
    return Complex(0.0, -epsilon * n * n);
  }
  CMat dense() const {
    CMat B = CMat::Zero(dim(), dim());
    for (int i = 0; i < dim(); ++i) {
      B(i, i) = diag(i);
      if (i + 1 < dim()) {
        B(i, i + 1) = up;
        B(i + 1, i) = dn;
      }
    }
    return B;
  }
  // d(block)/d(eps), the perturbation direction of the sweep formulas
  CMat epsilon_derivative() const {
    CMat D = CMat::Zero(dim(), dim());
    for (int i = 0; i < dim(); ++i) {
      double n = i - N;
      D(i, i) = Complex(0.0, -n * n);
    }
    return D;
  }
};

inline SpectralBlock assemble_torus_block(Momentum k, double eps, int N) {
  if (N < 1) throw DegenerateInput("mode truncation must be >= 1");
  if (eps < 0.0) throw DegenerateInput("assemble_torus_block wants eps >= 0");
  SpectralBlock b;
  b.k = k;
  b.epsilon = eps;
  b.N = N;
  b.up = Complex(k.k1 / 2.0, -k.k2 / 2.0);
  b.dn = Complex(k.k1 / 2.0, k.k2 / 2.0);
  return b;
}

// negative-eps companion used by the conjugation check
inline SpectralBlock assemble_torus_block_signed(Momentum k, double eps,
                                                 int N) {
  SpectralBlock b = assemble_torus_block(k, std::abs(eps), N);
  b.epsilon = eps;
  return b;
}

// matrix-free product, block-free form for the Krylov path
inline CVec apply_generator(Momentum k, double eps, const CVec& c, int N) {
  if (c.size() != 2 * N + 1)
    throw DegenerateInput("coefficient vector length mismatch");
  Complex up(k.k1 / 2.0, -k.k2 / 2.0), dn(k.k1 / 2.0, k.k2 / 2.0);
  CVec out(c.size());
  for (int i = 0; i < c.size(); ++i) {
    double n = i - N;
    Complex v = Complex(0.0, -eps * n * n) * c[i];
    if (i + 1 < c.size()) v += up * c[i + 1];
    if (i > 0) v += dn * c[i - 1];
    out[i] = v;
  }
  return out;
}

inline CVec apply_block(const SpectralBlock& b, const CVec& c) {
  return apply_generator(b.k, b.epsilon, c, b.N);
}

// ------------------------------------------------------- semiclassical norms

struct SobolevWeight {
  double s = 0.0;
  double epsilon = 0.0;
  Momentum k{};
  int N = 0;

  double weight(int row) const {
    double n = row - N;
    double k2 = double(k.k1) * k.k1 + double(k.k2) * k.k2;
    return std::pow(1.0 + epsilon * epsilon * (k2 + n * n), s / 2.0);
  }
  RVec diagonal() const {
    RVec w(2 * N + 1);
    for (int i = 0; i < 2 * N + 1; ++i) w[i] = weight(i);
    return w;
  }
};

inline double sobolev_norm(const SobolevWeight& w, const CVec& c) {
  if (c.size() != 2 * w.N + 1)
    throw DegenerateInput("coefficient vector length mismatch");
  double acc = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    double wi = w.weight(i);
    acc += wi * wi * std::norm(c[i]);
  }
  return std::sqrt(acc);
}

// -------------------------------------------------------- real trig basis

// unitary U with columns {1, sqrt2 cos m theta, sqrt2 sin m theta} expressed
// in the exponential basis
inline CMat trig_basis_unitary(int N) {
  int n = 2 * N + 1;
  CMat U = CMat::Zero(n, n);
  const double r = 1.0 / std::sqrt(2.0);
  U(N, 0) = 1.0;
  for (int m = 1; m <= N; ++m) {
    U(N + m, 2 * m - 1) = r;
    U(N - m, 2 * m - 1) = r;
    U(N + m, 2 * m) = Complex(0.0, -r);
    U(N - m, 2 * m) = Complex(0.0, r);
  }
  return U;
}

inline CMat to_trig_basis(const SpectralBlock& b) {
  CMat U = trig_basis_unitary(b.N);
  return U.adjoint() * b.dense() * U;
}

// Exact mirror similarity: with s_n = e^{-2 i n phi}, phi = arg(k1 + i k2),
// the conjugation S B_{-k} S^{-1} = -conj(B_k) holds entrywise, so the
// spectral mirror identity is independent of eigenvalue conditioning.
inline double mirror_similarity_defect(Momentum k, double eps, int N) {
  auto bp = assemble_torus_block(k, eps, N);
  auto bm = assemble_torus_block({-k.k1, -k.k2}, eps, N);
  double phi = std::atan2(double(k.k2), double(k.k1));
  Complex rot = std::polar(1.0, 2.0 * phi);
  double d = 0.0;
  d = std::max(d, std::abs(rot * bm.up + std::conj(bp.up)));
  d = std::max(d, std::abs(bm.dn / rot + std::conj(bp.dn)));
  for (int i = 0; i < bp.dim(); ++i)
    d = std::max(d, std::abs(bm.diag(i) + std::conj(bp.diag(i))));
  return d;
}

// ------------------------------------------------- textual serialization

// matrix-market coordinate form, 17 significant digits
inline void write_block(std::ostream& os, const SpectralBlock& b) {
  os << "%%MatrixMarket matrix coordinate complex general\n";
  os << "% kbmlab block k1=" << b.k.k1 << " k2=" << b.k.k2;
  char buf[128];
  std::snprintf(buf, sizeof buf, " eps=%.17g N=%d\n", b.epsilon, b.N);
  os << buf;
  int n = b.dim();
  os << n << " " << n << " " << (3 * n - 2) << "\n";
  auto emit = [&](int i, int j, Complex v) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", i + 1, j + 1,
                  v.real(), v.imag());
    os << buf;
  };
  for (int i = 0; i < n; ++i) {
    emit(i, i, b.diag(i));
    if (i + 1 < n) {
      emit(i, i + 1, b.up);
      emit(i + 1, i, b.dn);
    }
  }
}

inline CMat read_dense_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line.rfind("%%MatrixMarket", 0) != 0)
    throw DegenerateInput("not a matrix-market stream");
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream head(line);
  int rows = 0, cols = 0, nnz = 0;
  head >> rows >> cols >> nnz;
  if (rows <= 0 || cols <= 0) throw DegenerateInput("bad matrix-market header");
  CMat M = CMat::Zero(rows, cols);
  for (int e = 0; e < nnz; ++e) {
    int i, j;
    double re, im;
    if (!(is >> i >> j >> re >> im))
      throw DegenerateInput("truncated matrix-market body");
    M(i - 1, j - 1) = Complex(re, im);
  }
  return M;
}

}  // namespace kbm
