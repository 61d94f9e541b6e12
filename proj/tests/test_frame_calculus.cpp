#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "kbm/frame.hpp"
#include "kbm/nash.hpp"

using namespace kbm;

namespace {
constexpr double kPi = 3.14159265358979323846;

template <class Geom>
double flow_derivative(const FnPtr<Geom>& f,
                       const FramePt<Geom::dim, double>& p, int k, int l) {
  const double h = 1e-5;
  double fp = f->eval(frame_rotate<Geom::dim>(p, k, l, h));
  double fm = f->eval(frame_rotate<Geom::dim>(p, k, l, -h));
  return (fp - fm) / (2 * h);
}

FramePt<2, double> circle_frame(double th) {
  FramePt<2, double> p;
  p.z = {0.3, 1.9};
  p.zeta[0] = {std::cos(th), std::sin(th)};
  p.zeta[1] = {std::sin(th), -std::cos(th)};
  return p;
}
}  // namespace

TEST_CASE("vertical fields follow the frame rotation flow") {
  FlatGeom<3> geom;
  std::mt19937 rng(kTrialSeed);
  for (int t = 0; t < 10; ++t) {
    auto f = random_trig_poly<FlatGeom<3>>(rng);
    auto p = random_frame_point(geom, rng);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) {
        auto V = FieldOp<FlatGeom<3>>::vertical(k, l);
        double lhs = AppliedFn<FlatGeom<3>>(V, f).eval(p);
        double rhs = k == l ? 0.0 : flow_derivative(f, p, k, l);
        REQUIRE(std::abs(lhs - rhs) < 1e-7);
      }
  }
  REQUIRE_THROWS_AS(FieldOp<FlatGeom<3>>::vertical(0, 3), DegenerateInput);
}

TEST_CASE("V_kk is the zero operator") {
  FlatGeom<2> geom;
  std::mt19937 rng(kTrialSeed);
  auto f = random_trig_poly<FlatGeom<2>>(rng);
  auto p = random_frame_point(geom, rng);
  auto V = FieldOp<FlatGeom<2>>::vertical(1, 1);
  REQUIRE(AppliedFn<FlatGeom<2>>(V, f).eval(p) == 0.0);
}

TEST_CASE("disjoint-index vertical brackets vanish in d=4") {
  FlatGeom<4> geom;
  std::mt19937 rng(kTrialSeed);
  for (int t = 0; t < 5; ++t) {
    auto f = random_trig_poly<FlatGeom<4>>(rng);
    auto p = random_frame_point(geom, rng);
    auto V12 = FieldOp<FlatGeom<4>>::vertical(0, 1);
    auto V34 = FieldOp<FlatGeom<4>>::vertical(2, 3);
    REQUIRE(std::abs(lie_bracket(V12, V34, f, p)) < 1e-9);
  }
}

TEST_CASE("circle-fiber chart: V_12 acts as d/dtheta") {
  auto f = std::make_shared<TrigPoly<FlatGeom<2>>>();
  using TP = TrigPoly<FlatGeom<2>>;
  f->terms.push_back({1.0,
                      {{slot_zeta<2>(0, 0), TP::Fac::Pow1},
                       {slot_zeta<2>(1, 1), TP::Fac::Pow1}}});
  f->terms.push_back({1.0, {{slot_zeta<2>(0, 1), TP::Fac::Sin}}});
  auto V = FieldOp<FlatGeom<2>>::vertical(0, 1);
  for (double th : {0.1, 1.0, 2.5, 4.4}) {
    auto p = circle_frame(th);
    double lhs = AppliedFn<FlatGeom<2>>(V, f).eval(p);
    const double h = 1e-5;
    double rhs =
        (f->eval(circle_frame(th + h)) - f->eval(circle_frame(th - h))) /
        (2 * h);
    REQUIRE(std::abs(lhs - rhs) < 1e-7);
  }
}

TEST_CASE("flat horizontal field reduces to zeta-weighted base derivatives") {
  SurfaceGeom geom{ManifoldModel::flat_torus(), 0};
  auto f = std::make_shared<TrigPoly<SurfaceGeom>>();
  f->terms.push_back({1.0, {{slot_z<2>(0), TrigPoly<SurfaceGeom>::Fac::Pow1}}});
  std::mt19937 rng(kTrialSeed);
  auto p = random_frame_point(geom, rng);
  auto H1 = FieldOp<SurfaceGeom>::horizontal(geom, 0);
  REQUIRE(AppliedFn<SurfaceGeom>(H1, f).eval(p) == p.zeta[0][0]);
}

TEST_CASE("sphere: Htilde_1 integral curve projects onto the geodesic flow") {
  SurfaceGeom geom{ManifoldModel::sphere(), 0};
  FramePt<2, double> p;
  p.z = {kPi / 2, 0.7};
  double th = 0.9;
  auto g = geom.model.metric(p.z);
  double s1 = 1.0 / std::sqrt(g[0][0]), s2 = 1.0 / std::sqrt(g[1][1]);
  p.zeta[0] = {std::cos(th) * s1, std::sin(th) * s2};
  p.zeta[1] = {std::sin(th) * s1, -std::cos(th) * s2};
  CospherePoint q{p.z, p.zeta[0], 0};
  double sup = 0.0;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    auto fr = frame_geodesic_rk4(geom, p, t, 4000);
    auto ge = geodesic_flow(geom.model, q, t);
    double phi = ge.chart == 0 ? ge.z[0] : kPi - ge.z[0];
    sup = std::max(sup, std::abs(fr.z[0] - phi));
    sup = std::max(sup, std::abs(std::remainder(fr.z[1] - ge.z[1], kTwoPi)));
  }
  REQUIRE(sup < 1e-6);
}

TEST_CASE("revolution: parallel transport preserves the frame Gram matrix") {
  SurfaceGeom geom{ManifoldModel::revolution(), 0};
  std::mt19937 rng(kTrialSeed);
  auto p = random_frame_point(geom, rng);
  REQUIRE(gram_defect(geom, p) < 1e-12);
  auto q = frame_geodesic_rk4(geom, p, 1.0, 4000);
  REQUIRE(gram_defect(geom, q) < 1e-8);
}

TEST_CASE("self-brackets vanish") {
  FlatGeom<2> geom;
  std::mt19937 rng(kTrialSeed);
  auto f = random_trig_poly<FlatGeom<2>>(rng);
  auto p = random_frame_point(geom, rng);
  auto V = FieldOp<FlatGeom<2>>::vertical(0, 1);
  REQUIRE(lie_bracket(V, V, f, p) == 0.0);
}

TEST_CASE("bracket [V12,V23] = V13 on 20 random pairs in d=3") {
  FlatGeom<3> geom;
  std::mt19937 rng(kTrialSeed ^ 0x11);
  for (int t = 0; t < 20; ++t) {
    auto f = random_trig_poly<FlatGeom<3>>(rng);
    auto p = random_frame_point(geom, rng);
    auto V12 = FieldOp<FlatGeom<3>>::vertical(0, 1);
    auto V23 = FieldOp<FlatGeom<3>>::vertical(1, 2);
    auto V13 = FieldOp<FlatGeom<3>>::vertical(0, 2);
    double lhs = lie_bracket(V12, V23, f, p);
    double rhs = AppliedFn<FlatGeom<3>>(V13, f).eval(p);
    REQUIRE(std::abs(lhs - rhs) < 1e-7);
  }
}

TEST_CASE("bracket [V12,H2] = H1 on the flat torus") {
  SurfaceGeom geom{ManifoldModel::flat_torus(), 0};
  std::mt19937 rng(kTrialSeed ^ 0x22);
  for (int t = 0; t < 10; ++t) {
    auto f = random_trig_poly<SurfaceGeom>(rng);
    auto p = random_frame_point(geom, rng);
    auto V12 = FieldOp<SurfaceGeom>::vertical(0, 1);
    auto H2 = FieldOp<SurfaceGeom>::horizontal(geom, 1);
    auto H1 = FieldOp<SurfaceGeom>::horizontal(geom, 0);
    double lhs = lie_bracket(V12, H2, f, p);
    double rhs = AppliedFn<SurfaceGeom>(H1, f).eval(p);
    REQUIRE(std::abs(lhs - rhs) < 1e-7);
  }
}

TEST_CASE("commutation suite: flat torus, 50 trials") {
  SurfaceGeom geom{ManifoldModel::flat_torus(), 0};
  auto rep = verify_commutation_suite(geom, 50);
  CAPTURE(rep.items[0].max_residual, rep.items[1].max_residual,
          rep.items[2].max_residual);
  REQUIRE(rep.max_residual() < 1e-6);
  REQUIRE(rep.items.size() == 4);
}

TEST_CASE("commutation suite: curved surfaces") {
  for (auto name : {"sphere", "revolution"}) {
    SurfaceGeom geom{ManifoldModel::from_name(name), 0};
    auto rep = verify_commutation_suite(geom, 10);
    CAPTURE(name);
    REQUIRE(rep.max_residual() < 1e-6);
  }
}

TEST_CASE("commutation suite: abstract flat d=3") {
  FlatGeom<3> geom;
  auto rep = verify_commutation_suite(geom, 10, false);
  REQUIRE(rep.max_residual() < 1e-6);
}

TEST_CASE("lifted Laplacians commute in d=3") {
  FlatGeom<3> geom;
  std::mt19937 rng(kTrialSeed ^ 0x33);
  for (int t = 0; t < 3; ++t) {
    auto f = random_trig_poly<FlatGeom<3>>(rng);
    auto p = random_frame_point(geom, rng);
    auto hv = horizontal_laplacian(geom, vertical_laplacian<FlatGeom<3>>(f));
    auto vh = vertical_laplacian<FlatGeom<3>>(horizontal_laplacian(geom, f));
    REQUIRE(std::abs(hv->eval(p) - vh->eval(p)) < 1e-6);
  }
}

TEST_CASE("constant functions have exactly zero residuals") {
  SurfaceGeom geom{ManifoldModel::flat_torus(), 0};
  auto f = std::make_shared<TrigPoly<SurfaceGeom>>();
  f->terms.push_back({0.75, {}});
  std::mt19937 rng(kTrialSeed);
  auto p = random_frame_point(geom, rng);
  auto V = FieldOp<SurfaceGeom>::vertical(0, 1);
  auto H = FieldOp<SurfaceGeom>::horizontal(geom, 0);
  REQUIRE(AppliedFn<SurfaceGeom>(V, f).eval(p) == 0.0);
  REQUIRE(AppliedFn<SurfaceGeom>(H, f).eval(p) == 0.0);
  REQUIRE(lie_bracket(V, H, f, p) == 0.0);
  REQUIRE(vertical_laplacian<SurfaceGeom>(f)->eval(p) == 0.0);
}

TEST_CASE("test functions differentiate consistently with finite differences") {
  FlatGeom<3> geom;
  std::mt19937 rng(kTrialSeed ^ 0x44);
  for (int t = 0; t < 10; ++t) {
    auto f = random_trig_poly<FlatGeom<3>>(rng);
    auto p = random_frame_point(geom, rng);
    auto lifted = lift_point<3, double>(p);
    auto val = f->eval(lifted);
    const double h = 1e-6;
    for (int s = 0; s < 12; ++s) {
      auto pp = p, pm = p;
      auto slot_ref = [](FramePt<3, double>& fp, int idx) -> double& {
        return idx < 3 ? fp.z[idx] : fp.zeta[(idx - 3) / 3][(idx - 3) % 3];
      };
      slot_ref(pp, s) += h;
      slot_ref(pm, s) -= h;
      double fd = (f->eval(pp) - f->eval(pm)) / (2 * h);
      REQUIRE(std::abs(val.d[s] - fd) < 1e-6);
    }
  }
}

TEST_CASE("solid harmonic table is harmonic") {
  FlatGeom<3> geom;
  std::mt19937 rng(kTrialSeed ^ 0x55);
  for (auto& h : harmonic_basis<FlatGeom<3>>(4)) {
    for (int t = 0; t < 3; ++t) {
      auto p = random_frame_point(geom, rng);
      auto l1 = lift_point<3, double>(p);
      auto l2 = lift_point<3, Jet<double, 12>>(l1);
      auto val = h->eval(l2);
      double lap = 0.0;
      for (int j = 0; j < 3; ++j) {
        int s = slot_zeta<3>(0, j);
        lap += val.d[s].d[s];
      }
      CAPTURE(h->label);
      REQUIRE(std::abs(lap) < 1e-9);
    }
  }
}

TEST_CASE("intertwining: circle harmonics through the lift") {
  FlatGeom<2> geom;
  auto rep = verify_intertwining(geom);
  for (auto& item : rep.items) {
    CAPTURE(item.identity);
    REQUIRE(item.max_residual < 1e-8);
  }
  auto basis = harmonic_basis<FlatGeom<2>>(1);
  REQUIRE(basis[0]->eigenvalue == 1.0);
}

TEST_CASE("intertwining: sphere harmonics through the lift, degree <= 4") {
  FlatGeom<3> geom;
  auto rep = verify_intertwining(geom);
  REQUIRE(rep.max_residual() < 1e-6);
  auto basis = harmonic_basis<FlatGeom<3>>(2);
  REQUIRE(basis[3]->eigenvalue == 6.0);
}

TEST_CASE("constant lift is annihilated") {
  FlatGeom<2> geom;
  auto f = std::make_shared<TrigPoly<FlatGeom<2>>>();
  f->terms.push_back({1.0, {}});
  std::mt19937 rng(kTrialSeed);
  auto p = random_frame_point(geom, rng);
  REQUIRE(vertical_laplacian<FlatGeom<2>>(f)->eval(p) == 0.0);
}

TEST_CASE("nash rotation family: divergence-free sum of squares") {
  SECTION("circle fiber") {
    auto rep = nash_fields_report(FlatGeom<2>{});
    REQUIRE(rep.sum_of_squares_residual < 1e-8);
    REQUIRE(rep.max_divergence() < 1e-8);
    REQUIRE(rep.fields.size() == 1);
  }
  SECTION("sphere fiber") {
    auto rep = nash_fields_report(FlatGeom<3>{});
    REQUIRE(rep.sum_of_squares_residual < 1e-7);
    REQUIRE(rep.max_divergence() < 1e-8);
    REQUIRE(rep.fields.size() == 3);
  }
  SECTION("unsupported model") {
    SurfaceGeom geom{ManifoldModel::revolution(), 0};
    REQUIRE_THROWS_AS(nash_fields_report(geom), DomainError);
  }
}

TEST_CASE("nash projection family: sum of squares only") {
  auto rep2 = nash_verify<FlatGeom<2>>(nash_projection_family<FlatGeom<2>>());
  REQUIRE(rep2.sum_of_squares_residual < 1e-8);
  REQUIRE(rep2.max_divergence() > 1e-3);
  auto rep3 = nash_verify<FlatGeom<3>>(nash_projection_family<FlatGeom<3>>());
  REQUIRE(rep3.sum_of_squares_residual < 1e-7);
}

TEST_CASE("orthonormality persists along the lifted geodesic flow") {
  SurfaceGeom geom{ManifoldModel::sphere(), 0};
  FramePt<2, double> p;
  p.z = {kPi / 2, 0.0};
  auto g = geom.model.metric(p.z);
  p.zeta[0] = {0.8, 0.6 / std::sqrt(g[1][1])};
  double n0 = std::sqrt(p.zeta[0][0] * p.zeta[0][0] * g[0][0] +
                        p.zeta[0][1] * p.zeta[0][1] * g[1][1]);
  p.zeta[0][0] /= n0;
  p.zeta[0][1] /= n0;
  p.zeta[1] = {p.zeta[0][1] * std::sqrt(g[1][1]),
               -p.zeta[0][0] / std::sqrt(g[1][1])};
  REQUIRE(gram_defect(geom, p) < 1e-12);
  auto q = frame_geodesic_rk4(geom, p, 1.0, 2000);
  REQUIRE(gram_defect(geom, q) < 1e-8);
}
