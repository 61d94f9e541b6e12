#pragma once

// Scaling probe for the subelliptic constant. On the resolved momentum shell
// eps*|k| in [1,2] the constant is measured as the largest generalized
// singular value of the pencil (W_s, [eps(B - lambda); I]):
//
//   c(eps)^2 = max_u  ||W_s u||^2 / ( ||eps(B-lambda)u||^2 + ||u||^2 )
//
// with the order-s Sobolev weight W_s(n) = (1 + |k|^2 + n^2)^{s/2}. On the
// shell this weight equals eps^{-s} times its semiclassical counterpart up to
// bounded factors, so the fitted log-log slope measures the eps-power of the
// estimate's constant; the s=0 weight is the bounded control.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "kbm/block.hpp"
#include "kbm/stats.hpp"

namespace kbm {

struct ProbePoint {
  double eps = 0.0;
  int k1 = 0;
  int truncation = 0;
  double c = 0.0;
  bool regularized = false;
};

inline ProbePoint probe_constant(double eps, double s,
                                 Complex lambda = Complex(0, 0)) {
  if (!(eps > 0)) throw DegenerateInput("probe needs eps > 0");
  ProbePoint pt;
  pt.eps = eps;
  pt.k1 = std::max(1, int(std::ceil(1.0 / eps)));
  pt.truncation = default_mode_truncation(eps);
  auto b = assemble_torus_block({pt.k1, 0}, eps, pt.truncation);
  const int n = b.dim();
  CMat A = b.dense();
  for (int i = 0; i < n; ++i) A(i, i) -= lambda;
  A *= eps;
  CMat M = A.adjoint() * A + CMat::Identity(n, n);
  RVec w2(n);
  double k2 = double(pt.k1) * pt.k1;
  for (int i = 0; i < n; ++i) {
    double nn = i - pt.truncation;
    w2[i] = std::pow(1.0 + k2 + nn * nn, s);
  }
  CMat W = w2.asDiagonal().toDenseMatrix().cast<Complex>();
  Eigen::GeneralizedSelfAdjointEigenSolver<CMat> ges(W, M,
                                                     Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) {
    M += 1e-14 * CMat::Identity(n, n);
    ges.compute(W, M, Eigen::EigenvaluesOnly);
    if (ges.info() != Eigen::Success)
      throw NumericalError("generalized eigensolve failed even regularized");
    pt.regularized = true;
  }
  pt.c = std::sqrt(ges.eigenvalues().maxCoeff());
  if (!(pt.c > 0)) throw NumericalError("probe produced a nonpositive constant");
  return pt;
}

struct HypoProbeResult {
  std::vector<ProbePoint> points;
  double sobolev_order = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double ci_halfwidth = 0.0;  // 1.96 sigma
  bool any_regularized = false;
};

inline HypoProbeResult hypoelliptic_probe(double eps_min, double eps_max,
                                          int points, double s = 2.0 / 3.0,
                                          Complex lambda = Complex(0, 0)) {
  if (points < 4) throw DegenerateInput("probe needs >= 4 grid points");
  if (!(eps_min > 0 && eps_max > eps_min))
    throw DegenerateInput("probe grid must satisfy 0 < eps_min < eps_max");
  if (std::log10(eps_max / eps_min) < 1.5 - 1e-12)
    throw DegenerateInput("probe grid must span >= 1.5 decades");
  HypoProbeResult res;
  res.sobolev_order = s;
  double r = std::pow(eps_max / eps_min, 1.0 / (points - 1));
  std::vector<double> xs, ys;
  for (int i = 0; i < points; ++i) {
    double eps = eps_min * std::pow(r, i);
    auto pt = probe_constant(eps, s, lambda);
    res.any_regularized |= pt.regularized;
    xs.push_back(pt.eps);
    ys.push_back(pt.c);
    res.points.push_back(pt);
  }
  auto fit = loglog_fit(xs, ys);
  res.slope = fit.slope;
  res.slope_stderr = fit.slope_stderr;
  res.ci_halfwidth = 1.96 * fit.slope_stderr;
  return res;
}

}  // namespace kbm
