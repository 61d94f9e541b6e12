#pragma once

// Non-Hermitian eigensolvers. The dense path wraps Eigen's QR-based solver
// and augments it with left eigenvectors (transposed problem), residuals and
// the bilinear pairing <v,u> = v^T u; the iterative path is shift-invert
// Arnoldi on the tridiagonal blocks with a partial-pivot banded LU.

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "kbm/block.hpp"
#include "kbm/errors.hpp"

namespace kbm {

inline constexpr double kResidualGate = 1e-9;
inline constexpr double kDefectiveGate = 1e-10;

struct EigenPair {
  Complex lambda{};
  CVec right, left;
  double residual = 0.0;       // max of right/left relative residuals
  Complex pairing{};           // v^T u with |u| = |v| = 1
  bool defective = false;
};

// least-damped first: -Im ascending, then Re ascending
inline bool leading_order(const Complex& a, const Complex& b) {
  if (a.imag() != b.imag()) return a.imag() > b.imag();
  return a.real() < b.real();
}

inline void sort_leading(std::vector<EigenPair>& ps) {
  std::sort(ps.begin(), ps.end(), [](const EigenPair& x, const EigenPair& y) {
    return leading_order(x.lambda, y.lambda);
  });
}

inline std::vector<EigenPair> eig_dense(const CMat& B) {
  if (B.rows() > 2000)
    throw DegenerateInput("dense path capped at dimension 2000");
  Eigen::ComplexEigenSolver<CMat> right(B, true);
  if (right.info() != Eigen::Success)
    throw NumericalError("QR iteration failed on the right problem, dim=" +
                         std::to_string(B.rows()));
  Eigen::ComplexEigenSolver<CMat> left(B.transpose(), true);
  if (left.info() != Eigen::Success)
    throw NumericalError("QR iteration failed on the transposed problem");

  const int n = int(B.rows());
  std::vector<int> unused(n);
  for (int i = 0; i < n; ++i) unused[i] = i;
  std::vector<EigenPair> out(n);
  double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    EigenPair p;
    p.lambda = right.eigenvalues()[i];
    p.right = right.eigenvectors().col(i).normalized();
    // match the transposed eigenvalue nearest to lambda
    int best = 0;
    double bd = 1e300;
    for (size_t t = 0; t < unused.size(); ++t) {
      double d = std::abs(left.eigenvalues()[unused[t]] - p.lambda);
      if (d < bd) {
        bd = d;
        best = int(t);
      }
    }
    int j = unused[best];
    unused.erase(unused.begin() + best);
    p.left = left.eigenvectors().col(j).normalized();
    double rr = (B * p.right - p.lambda * p.right).norm();
    double lr = (B.transpose() * p.left - p.lambda * p.left).norm();
    p.residual = std::max(rr, lr) / scale;
    p.pairing = p.left.transpose() * p.right;
    p.defective = std::abs(p.pairing) <= kDefectiveGate;
    out[i] = std::move(p);
  }
  sort_leading(out);
  return out;
}

inline std::vector<EigenPair> eig_dense(const SpectralBlock& b) {
  return eig_dense(b.dense());
}

inline std::vector<Complex> eigenvalues_only(const CMat& B) {
  Eigen::ComplexEigenSolver<CMat> es(B, false);
  if (es.info() != Eigen::Success)
    throw NumericalError("QR iteration failed");
  std::vector<Complex> v(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end(), leading_order);
  return v;
}

// ------------------------------------------------- banded (tridiagonal) LU

// partial-pivot factorization of a tridiagonal matrix; pivoting introduces a
// second superdiagonal
struct TriLU {
  int n = 0;
  CVec dl, d, du, du2;
  std::vector<int> piv;
  double min_pivot = 0.0;

  void factor(CVec sub, CVec diag, CVec sup) {
    n = int(diag.size());
    dl = std::move(sub);
    d = std::move(diag);
    du = std::move(sup);
    du2 = CVec::Zero(std::max(0, n - 2));
    piv.assign(n, 0);
    min_pivot = 1e300;
    for (int i = 0; i < n - 1; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        piv[i] = 0;
        if (std::abs(d[i]) == 0.0) {
          min_pivot = 0.0;
          continue;
        }
        Complex m = dl[i] / d[i];
        dl[i] = m;
        d[i + 1] -= m * du[i];
        if (i + 2 < n) du2[i] = 0.0;
      } else {
        piv[i] = 1;
        Complex m = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = m;
        Complex t = d[i + 1];
        d[i + 1] = du[i] - m * t;
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -m * du[i + 1];
        }
        du[i] = t;
      }
      min_pivot = std::min(min_pivot, std::abs(d[i]));
    }
    min_pivot = std::min(min_pivot, std::abs(d[n - 1]));
  }

  bool nearly_singular(double scale) const {
    return min_pivot <= 1e-14 * std::max(1.0, scale);
  }

  CVec solve(CVec b) const {
    for (int i = 0; i < n - 1; ++i) {
      if (piv[i]) std::swap(b[i], b[i + 1]);
      b[i + 1] -= dl[i] * b[i];
    }
    for (int i = n - 1; i >= 0; --i) {
      Complex acc = b[i];
      if (i + 1 < n) acc -= du[i] * b[i + 1];
      if (i + 2 < n) acc -= du2[i] * b[i + 2];
      b[i] = acc / d[i];
    }
    return b;
  }
};

// factor (M - sigma I) for a spectral block
inline TriLU factor_shifted(const SpectralBlock& b, Complex sigma) {
  int n = b.dim();
  CVec sub = CVec::Constant(n - 1, b.dn);
  CVec sup = CVec::Constant(n - 1, b.up);
  CVec diag(n);
  for (int i = 0; i < n; ++i) diag[i] = b.diag(i) - sigma;
  TriLU lu;
  lu.factor(sub, diag, sup);
  return lu;
}

inline TriLU factor_shifted_transpose(const SpectralBlock& b, Complex sigma) {
  int n = b.dim();
  CVec sub = CVec::Constant(n - 1, b.up);
  CVec sup = CVec::Constant(n - 1, b.dn);
  CVec diag(n);
  for (int i = 0; i < n; ++i) diag[i] = b.diag(i) - sigma;
  TriLU lu;
  lu.factor(sub, diag, sup);
  return lu;
}

// --------------------------------------------------- shift-invert Arnoldi

struct ArnoldiResult {
  std::vector<EigenPair> pairs;
  Complex shift_used{};
  int retries = 0;
  std::string note;
};

namespace detail {

// Krylov basis with modified Gram-Schmidt and one reorthogonalization pass
inline void arnoldi_sweep(const TriLU& lu, int m, CMat& V, CMat& H) {
  int n = lu.n;
  V = CMat::Zero(n, m + 1);
  H = CMat::Zero(m + 1, m);
  CVec v0(n);
  // deterministic start vector
  for (int i = 0; i < n; ++i)
    v0[i] = Complex(std::cos(0.7 * i + 0.3), std::sin(1.3 * i + 0.1));
  V.col(0) = v0.normalized();
  for (int j = 0; j < m; ++j) {
    CVec w = lu.solve(V.col(j));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        Complex h = V.col(i).adjoint() * w;
        w -= h * V.col(i);
        H(i, j) += h;
      }
    double nw = w.norm();
    H(j + 1, j) = nw;
    if (nw < 1e-14) {
      // invariant subspace found
      for (int jj = j + 1; jj < m; ++jj) H(jj + 1, jj) = 0.0;
      break;
    }
    V.col(j + 1) = w / nw;
  }
}

}  // namespace detail

inline ArnoldiResult shift_invert_arnoldi(const SpectralBlock& b,
                                          Complex sigma, int subspace,
                                          int count) {
  ArnoldiResult res;
  res.shift_used = sigma;
  if (count == 0) return res;
  if (subspace < count + 2)
    throw DegenerateInput("subspace must exceed count + 2");
  int n = b.dim();
  subspace = std::min(subspace, n);
  double scale = std::max({1.0, std::abs(b.up), b.epsilon * b.N * double(b.N)});

  TriLU lu;
  for (;;) {
    lu = factor_shifted(b, res.shift_used);
    if (!lu.nearly_singular(scale)) break;
    if (++res.retries > 4)
      throw NumericalError("shift factorization kept failing after retries");
    double bump = 1e-6 * std::max(1.0, std::abs(res.shift_used));
    res.shift_used += Complex(bump, bump);
    res.note = "shift perturbed away from spectrum";
  }

  int m = subspace;
  for (int round = 0;; ++round) {
    CMat V, H;
    detail::arnoldi_sweep(lu, m, V, H);
    CMat Hm = H.topLeftCorner(m, m);
    Eigen::ComplexEigenSolver<CMat> small(Hm, true);
    if (small.info() != Eigen::Success)
      throw NumericalError("Hessenberg eigensolve failed");
    // Ritz values nearest the shift come from the largest |theta|
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int c) {
      return std::abs(small.eigenvalues()[a]) > std::abs(small.eigenvalues()[c]);
    });
    std::vector<EigenPair> got;
    CMat Bd;  // lazily built dense for residuals of modest blocks
    for (int idx : order) {
      if (int(got.size()) >= count) break;
      Complex theta = small.eigenvalues()[idx];
      if (std::abs(theta) < 1e-13) continue;
      EigenPair p;
      p.lambda = res.shift_used + 1.0 / theta;
      p.right = (V.leftCols(m) * small.eigenvectors().col(idx)).normalized();
      CVec r = apply_block(b, p.right) - p.lambda * p.right;
      p.residual = r.norm() / scale;
      if (p.residual < kResidualGate) got.push_back(std::move(p));
    }
    if (int(got.size()) >= count) {
      // left vectors by two inverse-power passes on the transposed problem
      SpectralBlock bt = b;
      std::swap(bt.up, bt.dn);
      for (auto& p : got) {
        TriLU lt =
            factor_shifted_transpose(b, p.lambda + Complex(1e-11, 1e-11));
        CVec w = lt.solve(p.right.conjugate()).normalized();
        w = lt.solve(w).normalized();
        double lres = (apply_block(bt, w) - p.lambda * w).norm() / scale;
        p.residual = std::max(p.residual, lres);
        p.left = w;
        p.pairing = p.left.transpose() * p.right;
        p.defective = std::abs(p.pairing) <= kDefectiveGate;
      }
      res.pairs = std::move(got);
      sort_leading(res.pairs);
      return res;
    }
    if (round >= 2)
      throw NumericalError("Arnoldi stagnated: " + std::to_string(got.size()) +
                           " of " + std::to_string(count) +
                           " pairs converged at m=" + std::to_string(m));
    m = std::min(2 * m, n);
  }
}

}  // namespace kbm
