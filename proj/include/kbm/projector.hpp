#pragma once

// Riesz spectral projector by trapezoid quadrature on a circle. The contour
// integral of the resolvent is oriented so that Pi^2 = Pi and trace(Pi) equals
// the enclosed multiplicity:  Pi = (1/2 pi i) oint (lambda - B)^{-1} dlambda.
// Quadrature nodes are independent tridiagonal solves, summed in node order.

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "kbm/block.hpp"
#include "kbm/eig.hpp"

namespace kbm {

struct ProjectorEstimate {
  Complex center{};
  double radius = 0.0;
  int quadrature_order = 0;
  CMat matrix;
  Complex trace{};
  int rank_estimate = 0;
  double idempotency_defect = 0.0;
  double min_contour_distance = 0.0;
};

// admissibility: no eigenvalue within 0.05 r0 of the contour
inline double contour_clearance(const std::vector<Complex>& spectrum,
                                Complex center, double radius) {
  double dmin = 1e300;
  for (auto& v : spectrum) dmin = std::min(dmin, std::abs(std::abs(v - center) - radius));
  return dmin;
}

inline ProjectorEstimate contour_projector(const SpectralBlock& b,
                                           Complex center, double radius,
                                           int order = 64) {
  if (order < 4) throw DegenerateInput("quadrature order too small");
  auto spectrum = eigenvalues_only(b.dense());
  double clearance = contour_clearance(spectrum, center, radius);
  if (clearance < 0.05 * radius)
    throw DomainError(
        "eigenvalue too close to the contour: min distance " +
        std::to_string(clearance) + " < " + std::to_string(0.05 * radius));

  const int n = b.dim();
  CMat acc = CMat::Zero(n, n);
  CMat rhs = CMat::Identity(n, n);
  for (int q = 0; q < order; ++q) {
    double t = kTwoPi * q / order;
    Complex node = center + std::polar(radius, t);
    // (node - B) is tridiagonal
    CVec sub = CVec::Constant(n - 1, -b.dn);
    CVec sup = CVec::Constant(n - 1, -b.up);
    CVec diag(n);
    for (int i = 0; i < n; ++i) diag[i] = node - b.diag(i);
    TriLU lu;
    lu.factor(sub, diag, sup);
    if (lu.nearly_singular(std::max(1.0, std::abs(node))))
      throw NumericalError("resolvent solve hit a singular node");
    Complex wq = std::polar(radius, t) / double(order);
    for (int c = 0; c < n; ++c) acc.col(c) += wq * lu.solve(rhs.col(c));
  }
  ProjectorEstimate est;
  est.center = center;
  est.radius = radius;
  est.quadrature_order = order;
  est.matrix = std::move(acc);
  est.trace = est.matrix.trace();
  est.idempotency_defect =
      (est.matrix * est.matrix - est.matrix).norm();
  est.min_contour_distance = clearance;
  Eigen::JacobiSVD<CMat> svd(est.matrix);
  est.rank_estimate = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 0.5) ++est.rank_estimate;
  return est;
}

struct ProjectorDerivative {
  CMat derivative;          // central difference at the finer step
  double richardson_ratio;  // ||D(h)-D(h/2)|| / ||D(h/2)-D(h/4)||, ~4
  bool consistent = false;
  bool zero_derivative = false;
};

inline ProjectorDerivative projector_derivative(Momentum k, double eps,
                                                int N, Complex center,
                                                double radius, double step,
                                                int order = 64) {
  if (step <= 0 || eps - step <= 0)
    throw DegenerateInput("derivative step must satisfy 0 < step < eps");
  auto proj = [&](double e) {
    return contour_projector(assemble_torus_block(k, e, N), center, radius,
                             order)
        .matrix;
  };
  auto central = [&](double h) {
    return ((proj(eps + h) - proj(eps - h)) / (2.0 * h)).eval();
  };
  CMat d1 = central(step);
  CMat d2 = central(step / 2);
  CMat d4 = central(step / 4);
  ProjectorDerivative out;
  out.derivative = d2;
  double num = (d1 - d2).norm();
  double den = (d2 - d4).norm();
  double scale = std::max(1.0, d2.norm());
  if (d1.norm() < 1e-9 * scale && num < 1e-9) {
    out.zero_derivative = true;
    out.richardson_ratio = 4.0;
    out.consistent = true;
    return out;
  }
  out.richardson_ratio = den > 0 ? num / den : 0.0;
  out.consistent = std::abs(out.richardson_ratio - 4.0) <= 0.6;
  return out;
}

}  // namespace kbm
