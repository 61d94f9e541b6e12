#pragma once

// Sum-of-squares realizations of the fiber Laplacian and their divergence
// reports. Two families are provided on the fiber sphere S^{d-1}:
//   - rotation (Killing) fields R_ij = zeta_i d_j - zeta_j d_i, which are
//     exactly divergence-free and satisfy Delta_S = -sum_{i<j} R_ij^2;
//   - tangential projections X_j of the ambient coordinate fields, which
//     satisfy the same sum-of-squares identity but are not individually
//     divergence-free (their defect is reported, not asserted).
// The divergence estimate is the worst integration-by-parts defect
// |mean_sigma(X f)| over the harmonic basis of degree <= 4.

#include <cmath>
#include <memory>
#include <vector>

#include "kbm/frame.hpp"

namespace kbm {

// Gauss-Legendre nodes/weights on [-1,1]
inline void gauss_legendre(int n, std::vector<double>& x,
                           std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

// quadrature over the fiber sphere, frame completed orthonormally
template <int d>
std::vector<std::pair<FramePt<d, double>, double>> fiber_quadrature();

template <>
inline std::vector<std::pair<FramePt<2, double>, double>> fiber_quadrature<2>() {
  std::vector<std::pair<FramePt<2, double>, double>> out;
  const int M = 64;
  for (int i = 0; i < M; ++i) {
    double th = kTwoPi * i / M;
    FramePt<2, double> p;
    p.zeta[0] = {std::cos(th), std::sin(th)};
    p.zeta[1] = {std::sin(th), -std::cos(th)};
    out.emplace_back(p, 1.0 / M);
  }
  return out;
}

template <>
inline std::vector<std::pair<FramePt<3, double>, double>> fiber_quadrature<3>() {
  std::vector<std::pair<FramePt<3, double>, double>> out;
  std::vector<double> gx, gw;
  const int NP = 24, NL = 48;
  gauss_legendre(NP, gx, gw);
  for (int i = 0; i < NP; ++i) {
    double cp = gx[i], sp = std::sqrt(1.0 - cp * cp);
    for (int j = 0; j < NL; ++j) {
      double lam = kTwoPi * j / NL;
      double cl = std::cos(lam), sl = std::sin(lam);
      FramePt<3, double> p;
      p.zeta[0] = {sp * cl, sp * sl, cp};
      p.zeta[1] = {cp * cl, cp * sl, -sp};
      p.zeta[2] = {-sl, cl, 0.0};
      out.emplace_back(p, gw[i] / (2.0 * NL));
    }
  }
  return out;
}

template <class Geom>
std::vector<FieldOp<Geom>> nash_rotation_family() {
  std::vector<FieldOp<Geom>> fields;
  for (int i = 0; i < Geom::dim; ++i)
    for (int j = i + 1; j < Geom::dim; ++j)
      fields.push_back(FieldOp<Geom>::nash_rot(i, j));
  return fields;
}

template <class Geom>
std::vector<FieldOp<Geom>> nash_projection_family() {
  std::vector<FieldOp<Geom>> fields;
  for (int j = 0; j < Geom::dim; ++j)
    fields.push_back(FieldOp<Geom>::nash_proj(j));
  return fields;
}

struct NashFieldReport {
  std::string field;
  double divergence_defect = 0.0;
};

struct NashReport {
  std::vector<NashFieldReport> fields;
  double sum_of_squares_residual = 0.0;
  double max_divergence() const {
    double m = 0.0;
    for (auto& f : fields) m = std::max(m, f.divergence_defect);
    return m;
  }
};

template <class Geom>
NashReport nash_verify(const std::vector<FieldOp<Geom>>& fields,
                       std::vector<std::string> labels = {}) {
  constexpr int d = Geom::dim;
  auto quad = fiber_quadrature<d>();
  auto basis = harmonic_basis<Geom>(4);
  NashReport rep;
  for (size_t j = 0; j < fields.size(); ++j) {
    NashFieldReport fr;
    fr.field = j < labels.size() ? labels[j] : "X" + std::to_string(j + 1);
    for (auto& h : basis) {
      AppliedFn<Geom> xf(fields[j], h);
      double integral = 0.0;
      for (auto& [p, w] : quad) integral += w * xf.eval(p);
      fr.divergence_defect = std::max(fr.divergence_defect, std::abs(integral));
    }
    rep.fields.push_back(fr);
  }
  for (auto& h : basis) {
    // Delta_S h = eigenvalue * h on the fiber, so the residual of
    // Delta_S h + sum X_j^2 h is evaluable pointwise
    std::vector<std::pair<double, FnPtr<Geom>>> terms;
    for (auto& X : fields) terms.emplace_back(1.0, apply_op(X, apply_op(X, FnPtr<Geom>(h))));
    auto ss = lincomb<Geom>(std::move(terms));
    for (auto& [p, w] : quad) {
      (void)w;
      double res = std::abs(h->eigenvalue * h->eval(p) + ss->eval(p));
      rep.sum_of_squares_residual = std::max(rep.sum_of_squares_residual, res);
    }
  }
  return rep;
}

// models with a built-in fiber embedding; the revolution surface has none
template <class Geom>
NashReport nash_fields_report(const Geom& geom) {
  if constexpr (!Geom::flat) {
    if (geom.model.kind == ModelKind::RevolutionSurface)
      throw DomainError("revolution surface has no built-in embedding");
  }
  auto fam = nash_rotation_family<Geom>();
  std::vector<std::string> labels;
  for (int i = 0; i < Geom::dim; ++i)
    for (int j = i + 1; j < Geom::dim; ++j)
      labels.push_back("R" + std::to_string(i + 1) + std::to_string(j + 1));
  return nash_verify<Geom>(fam, labels);
}

}  // namespace kbm
