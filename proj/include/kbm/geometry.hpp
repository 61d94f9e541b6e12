#pragma once

// Surface models: flat 2-torus, round 2-sphere (two polar charts), surface of
// revolution (r(u), u) with r a polynomial or 2+cos u. Components of covectors
// are stored in the convention of the frame calculus: row vectors that
// transform contravariantly, with |zeta|^2 = zeta^T G(z) zeta. Geodesics solve
// zdot = zeta, zetadot^m = -Gamma^m_ij zeta^i zeta^j, which is also the
// parallel-transport equation for the frame rows.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "kbm/common.hpp"
#include "kbm/errors.hpp"
#include "kbm/jet.hpp"

namespace kbm {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class ModelKind { FlatTorus2, Sphere2, RevolutionSurface };

struct RevolutionProfile {
  bool cosine = true;             // r(u) = 2 + cos u
  std::vector<double> poly;       // else r(u) = sum poly[i] u^i

  template <class S>
  S radius(const S& u) const {
    if (cosine) return 2.0 + cos(u);
    S r(0.0), p(1.0);
    for (double c : poly) {
      r += c * p;
      p = p * u;
    }
    return r;
  }
};

// charts: torus/revolution have one chart (id 0); the sphere has two polar
// charts, 0 = colatitude from the north pole, 1 = from the south pole, shared
// longitude. Handoff thresholds at colatitude pi/4 and 3pi/4.
struct ManifoldModel {
  ModelKind kind = ModelKind::FlatTorus2;
  int dim = 2;
  RevolutionProfile profile{};

  static ManifoldModel flat_torus() { return {ModelKind::FlatTorus2}; }
  static ManifoldModel sphere() { return {ModelKind::Sphere2}; }
  static ManifoldModel revolution(RevolutionProfile p = {}) {
    return {ModelKind::RevolutionSurface, 2, p};
  }
  static ManifoldModel from_name(const std::string& name,
                                 const std::vector<double>& poly = {}) {
    if (name == "flat_torus") return flat_torus();
    if (name == "sphere") return sphere();
    if (name == "revolution") return revolution();
    if (name == "revolution_poly") return revolution({false, poly});
    throw DegenerateInput("unknown model name: " + name);
  }
  std::string name() const {
    switch (kind) {
      case ModelKind::FlatTorus2: return "flat_torus";
      case ModelKind::Sphere2: return "sphere";
      default: return profile.cosine ? "revolution" : "revolution_poly";
    }
  }
  bool has_exact_geodesics() const {
    return kind != ModelKind::RevolutionSurface;
  }

  void check_domain(const Vec2& z, int chart) const {
    if (kind == ModelKind::Sphere2) {
      if (chart < 0 || chart > 1)
        throw DomainError("sphere chart id must be 0 or 1");
      constexpr double kMax = 3.0 * 3.14159265358979323846 / 4.0 + 0.2;
      if (!(z[0] > 1e-8 && z[0] < kMax))
        throw DomainError("sphere chart colatitude out of range: " +
                          std::to_string(z[0]));
    } else if (chart != 0) {
      throw DomainError("model has a single chart");
    }
  }

  template <class S>
  std::array<std::array<S, 2>, 2> metric_t(const std::array<S, 2>& z,
                                           int chart = 0) const {
    std::array<std::array<S, 2>, 2> g{};
    switch (kind) {
      case ModelKind::FlatTorus2:
        g[0][0] = S(1.0);
        g[1][1] = S(1.0);
        break;
      case ModelKind::Sphere2: {
        (void)chart;  // both polar charts share the metric form
        const S s = sin(z[0]);
        g[0][0] = S(1.0);
        g[1][1] = s * s;
        break;
      }
      case ModelKind::RevolutionSurface: {
        Jet<S, 1> u = Jet<S, 1>::variable(z[0], 0);
        Jet<S, 1> r = profile.radius(u);
        g[0][0] = S(1.0) + r.d[0] * r.d[0];
        g[1][1] = r.v * r.v;
        break;
      }
    }
    g[0][1] = S(0.0);
    g[1][0] = S(0.0);
    return g;
  }

  Mat2 metric(const Vec2& z, int chart = 0) const {
    check_domain(z, chart);
    return metric_t<double>(z, chart);
  }

  // Gamma^m_{ij} through exact derivatives of the metric
  template <class S>
  std::array<std::array<std::array<S, 2>, 2>, 2> christoffel_t(
      const std::array<S, 2>& z, int chart = 0) const {
    using J = Jet<S, 2>;
    std::array<J, 2> zj{J::variable(z[0], 0), J::variable(z[1], 1)};
    auto g = metric_t<J>(zj, chart);
    // inverse of the (diagonal for all bundled models) metric, kept general
    J det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    std::array<std::array<J, 2>, 2> gi;
    gi[0][0] = g[1][1] / det;
    gi[1][1] = g[0][0] / det;
    gi[0][1] = -g[0][1] / det;
    gi[1][0] = -g[1][0] / det;
    std::array<std::array<std::array<S, 2>, 2>, 2> gamma{};
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          S sum(0.0);
          for (int a = 0; a < 2; ++a)
            sum += gi[m][a].v *
                   (g[a][j].d[i] + g[a][i].d[j] - g[i][j].d[a]) * 0.5;
          gamma[m][i][j] = sum;
        }
    return gamma;
  }

  std::array<Mat2, 2> christoffel(const Vec2& z, int chart = 0) const {
    check_domain(z, chart);
    auto gm = christoffel_t<double>(z, chart);
    std::array<Mat2, 2> out{};
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out[m][i][j] = gm[m][i][j];
    return out;
  }

  double curvature(const Vec2& z, int chart = 0) const {
    switch (kind) {
      case ModelKind::FlatTorus2: return 0.0;
      case ModelKind::Sphere2: (void)chart; return 1.0;
      case ModelKind::RevolutionSurface: {
        using J2 = Jet<Jet<double, 1>, 1>;
        J2 u = J2::variable(Jet<double, 1>::variable(z[0], 0), 0);
        J2 r = profile.radius(u);
        double rv = r.v.v, rp = r.v.d[0], rpp = r.d[0].d[0];
        double w = 1.0 + rp * rp;
        return -rpp / (rv * w * w);
      }
    }
    return 0.0;
  }
};

struct CospherePoint {
  Vec2 z{};
  Vec2 zeta1{};
  int chart = 0;
};

inline double g_norm(const ManifoldModel& model, const Vec2& z,
                     const Vec2& v, int chart = 0) {
  auto g = model.metric(z, chart);
  double q = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) q += v[i] * g[i][j] * v[j];
  return std::sqrt(q);
}

inline Vec2 normalize(const ManifoldModel& model, const Vec2& z, const Vec2& v,
                      int chart = 0) {
  double n = g_norm(model, z, v, chart);
  if (!(n > 1e-300)) throw DegenerateInput("cannot normalize zero covector");
  return {v[0] / n, v[1] / n};
}

inline double wrap_angle(double x) {
  double y = std::fmod(x, kTwoPi);
  return y < 0 ? y + kTwoPi : y;
}

namespace detail {

using Vec3 = std::array<double, 3>;

inline Vec3 sphere_embed(const Vec2& z, int chart) {
  double sp = std::sin(z[0]), cp = std::cos(z[0]);
  double cl = std::cos(z[1]), sl = std::sin(z[1]);
  if (chart == 0) return {sp * cl, sp * sl, cp};
  return {sp * cl, sp * sl, -cp};
}

inline CospherePoint sphere_from_embedded(const Vec3& x, const Vec3& v) {
  // pick the polar chart away from its pole
  int chart = x[2] >= 0.0 ? 0 : 1;
  double zc = chart == 0 ? x[2] : -x[2];
  double phi = std::acos(std::min(1.0, std::max(-1.0, zc)));
  if (std::sin(phi) < 1e-12)
    throw NumericalError(
        "trajectory hit a polar chart singularity at z=(" +
        std::to_string(x[0]) + "," + std::to_string(x[1]) + "," +
        std::to_string(x[2]) + ")");
  double lam = std::atan2(x[1], x[0]);
  double sp = std::sin(phi), cp = std::cos(phi);
  double cl = std::cos(lam), sl = std::sin(lam);
  Vec3 e_phi = chart == 0 ? Vec3{cp * cl, cp * sl, -sp}
                          : Vec3{cp * cl, cp * sl, sp};
  Vec3 e_lam{-sp * sl, sp * cl, 0.0};
  double vphi = v[0] * e_phi[0] + v[1] * e_phi[1] + v[2] * e_phi[2];
  double vlam = (v[0] * e_lam[0] + v[1] * e_lam[1]) / (sp * sp);
  return {{phi, wrap_angle(lam)}, {vphi, vlam}, chart};
}

// one adaptive Dormand-Prince 5(4) step of the geodesic system
struct GeoState {
  Vec2 z, v;
};

inline GeoState geo_rhs(const ManifoldModel& m, const GeoState& s) {
  auto gamma = m.christoffel_t<double>(s.z, 0);
  GeoState d;
  d.z = s.v;
  for (int k = 0; k < 2; ++k) {
    double acc = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) acc -= gamma[k][i][j] * s.v[i] * s.v[j];
    d.v[k] = acc;
  }
  return d;
}

inline GeoState axpy(const GeoState& a, double c, const GeoState& b) {
  GeoState r;
  for (int i = 0; i < 2; ++i) {
    r.z[i] = a.z[i] + c * b.z[i];
    r.v[i] = a.v[i] + c * b.v[i];
  }
  return r;
}

inline GeoState dopri_integrate(const ManifoldModel& m, GeoState y, double t,
                                double abstol) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  (void)c2; (void)c3; (void)c4; (void)c5;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  double dir = t >= 0 ? 1.0 : -1.0;
  double remaining = std::abs(t);
  double h = std::min(remaining, 0.1);
  int rejected = 0;
  while (remaining > 0) {
    h = std::min(h, remaining);
    double hs = dir * h;
    GeoState k1 = geo_rhs(m, y);
    GeoState k2 = geo_rhs(m, axpy(y, hs * a21, k1));
    GeoState y3 = axpy(axpy(y, hs * a31, k1), hs * a32, k2);
    GeoState k3 = geo_rhs(m, y3);
    GeoState y4 = axpy(axpy(axpy(y, hs * a41, k1), hs * a42, k2), hs * a43, k3);
    GeoState k4 = geo_rhs(m, y4);
    GeoState y5 = axpy(
        axpy(axpy(axpy(y, hs * a51, k1), hs * a52, k2), hs * a53, k3),
        hs * a54, k4);
    GeoState k5 = geo_rhs(m, y5);
    GeoState y6 = axpy(
        axpy(axpy(axpy(axpy(y, hs * a61, k1), hs * a62, k2), hs * a63, k3),
             hs * a64, k4),
        hs * a65, k5);
    GeoState k6 = geo_rhs(m, y6);
    GeoState y7 = axpy(
        axpy(axpy(axpy(axpy(y, hs * b1, k1), hs * b3, k3), hs * b4, k4),
             hs * b5, k5),
        hs * b6, k6);
    GeoState k7 = geo_rhs(m, y7);
    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      double ez = hs * (e1 * k1.z[i] + e3 * k3.z[i] + e4 * k4.z[i] +
                        e5 * k5.z[i] + e6 * k6.z[i] + e7 * k7.z[i]);
      double ev = hs * (e1 * k1.v[i] + e3 * k3.v[i] + e4 * k4.v[i] +
                        e5 * k5.v[i] + e6 * k6.v[i] + e7 * k7.v[i]);
      err = std::max({err, std::abs(ez), std::abs(ev)});
    }
    if (err <= abstol || h < 1e-13) {
      if (h < 1e-13 && err > abstol * 100)
        throw NumericalError(
            "geodesic integrator step underflow, err=" + std::to_string(err) +
            " h=" + std::to_string(h));
      y = y7;
      remaining -= h;
    } else if (++rejected > 100000) {
      throw NumericalError("geodesic integrator stalled after 1e5 rejections");
    }
    double scale = err > 0 ? 0.9 * std::pow(abstol / err, 0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, scale));
  }
  return y;
}

}  // namespace detail

// exp(t H_1): exact on the torus and the sphere, adaptive RK elsewhere
inline CospherePoint geodesic_flow(const ManifoldModel& model,
                                   const CospherePoint& p, double t,
                                   double abstol = 1e-10) {
  if (!std::isfinite(t)) throw DegenerateInput("geodesic time must be finite");
  switch (model.kind) {
    case ModelKind::FlatTorus2:
      return {{wrap_angle(p.z[0] + t * p.zeta1[0]),
               wrap_angle(p.z[1] + t * p.zeta1[1])},
              p.zeta1,
              0};
    case ModelKind::Sphere2: {
      model.check_domain(p.z, p.chart);
      auto x0 = detail::sphere_embed(p.z, p.chart);
      double sp = std::sin(p.z[0]), cp = std::cos(p.z[0]);
      double cl = std::cos(p.z[1]), sl = std::sin(p.z[1]);
      double sgn = p.chart == 0 ? 1.0 : -1.0;
      detail::Vec3 e_phi{cp * cl, cp * sl, -sgn * sp};
      detail::Vec3 e_lam{-sp * sl, sp * cl, 0.0};
      detail::Vec3 v0;
      for (int i = 0; i < 3; ++i)
        v0[i] = p.zeta1[0] * e_phi[i] + p.zeta1[1] * e_lam[i];
      double w = std::sqrt(v0[0] * v0[0] + v0[1] * v0[1] + v0[2] * v0[2]);
      if (!(w > 1e-300)) throw DegenerateInput("zero velocity on sphere");
      double ct = std::cos(w * t), st = std::sin(w * t);
      detail::Vec3 x, v;
      for (int i = 0; i < 3; ++i) {
        x[i] = ct * x0[i] + st * v0[i] / w;
        v[i] = -w * st * x0[i] + ct * v0[i];
      }
      return detail::sphere_from_embedded(x, v);
    }
    case ModelKind::RevolutionSurface: {
      detail::GeoState s{p.z, p.zeta1};
      s = detail::dopri_integrate(model, s, t, abstol);
      return {{s.z[0], wrap_angle(s.z[1])}, s.v, 0};
    }
  }
  throw DomainError("unreachable model kind");
}

}  // namespace kbm
