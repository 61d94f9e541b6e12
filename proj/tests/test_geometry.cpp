#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "kbm/geometry.hpp"

using namespace kbm;

namespace {
constexpr double kPi = 3.14159265358979323846;

double fd_christoffel(const ManifoldModel& m, const Vec2& z, int mm, int i,
                      int j, int chart) {
  // central finite differences of the metric, the independent in-code oracle
  const double h = 1e-6;
  auto dg = [&](int a) {
    Vec2 zp = z, zm = z;
    zp[a] += h;
    zm[a] -= h;
    auto gp = m.metric(zp, chart), gm = m.metric(zm, chart);
    Mat2 r;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q) r[p][q] = (gp[p][q] - gm[p][q]) / (2 * h);
    return r;
  };
  std::array<Mat2, 2> d{dg(0), dg(1)};
  auto g = m.metric(z, chart);
  double det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
  Mat2 gi{{{g[1][1] / det, -g[0][1] / det}, {-g[1][0] / det, g[0][0] / det}}};
  double sum = 0;
  for (int a = 0; a < 2; ++a)
    sum += 0.5 * gi[mm][a] * (d[i][a][j] + d[j][a][i] - d[a][i][j]);
  return sum;
}
}  // namespace

TEST_CASE("flat torus christoffel vanishes") {
  auto m = ManifoldModel::flat_torus();
  auto gamma = m.christoffel({1.1, 2.3});
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) REQUIRE(gamma[a][i][j] == 0.0);
  REQUIRE(m.curvature({0.4, 0.2}) == 0.0);
}

TEST_CASE("sphere christoffel matches the symbolic oracle") {
  auto m = ManifoldModel::sphere();
  SECTION("equator point") {
    auto g = m.christoffel({kPi / 2, 0.0});
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          REQUIRE(std::abs(g[a][i][j]) < 1e-14);
  }
  SECTION("generic point") {
    auto g = m.christoffel({kPi / 3, 0.7});
    CHECK(g[0][1][1] == Catch::Approx(-0.43301270189221932338).epsilon(1e-12));
    CHECK(g[1][0][1] == Catch::Approx(0.57735026918962576451).epsilon(1e-12));
    CHECK(g[1][1][0] == Catch::Approx(0.57735026918962576451).epsilon(1e-12));
    CHECK(std::abs(g[0][0][0]) < 1e-14);
    CHECK(std::abs(g[1][1][1]) < 1e-14);
  }
  REQUIRE(m.curvature({kPi / 3, 0.7}) == Catch::Approx(1.0));
}

TEST_CASE("revolution surface christoffel matches the symbolic oracle") {
  auto m = ManifoldModel::revolution();
  SECTION("u = 0 all vanish") {
    auto g = m.christoffel({0.0, 0.0});
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) REQUIRE(std::abs(g[a][i][j]) < 1e-13);
    CHECK(m.curvature({0.0, 0.0}) ==
          Catch::Approx(0.33333333333333333333).epsilon(1e-12));
  }
  SECTION("generic point") {
    auto g = m.christoffel({0.5, 1.2});
    CHECK(g[0][0][0] == Catch::Approx(0.34210341653586420505).epsilon(1e-11));
    CHECK(g[0][1][1] == Catch::Approx(1.1217529478550602109).epsilon(1e-11));
    CHECK(g[1][0][1] == Catch::Approx(-0.16660704890053739439).epsilon(1e-11));
    CHECK(m.curvature({0.5, 1.2}) ==
          Catch::Approx(0.20163072665957833720).epsilon(1e-11));
  }
  SECTION("polynomial profile") {
    auto mp = ManifoldModel::revolution({false, {2.0, 0.0, 0.25}});
    auto g = mp.christoffel({0.5, 1.2});
    CHECK(g[0][0][0] == Catch::Approx(2.0 / 17.0).epsilon(1e-12));
    CHECK(g[0][1][1] == Catch::Approx(-33.0 / 68.0).epsilon(1e-12));
    CHECK(g[1][0][1] == Catch::Approx(4.0 / 33.0).epsilon(1e-12));
    CHECK(mp.curvature({0.5, 1.2}) ==
          Catch::Approx(-0.21474258152458844500).epsilon(1e-11));
  }
}

TEST_CASE("christoffel is symmetric and consistent with metric differences") {
  std::mt19937 rng(42);
  auto draw = [&] { return (rng() >> 8) * (1.0 / 16777216.0); };
  for (auto kind : {ModelKind::Sphere2, ModelKind::RevolutionSurface}) {
    ManifoldModel m = kind == ModelKind::Sphere2
                          ? ManifoldModel::sphere()
                          : ManifoldModel::revolution();
    for (int t = 0; t < 20; ++t) {
      Vec2 z;
      if (kind == ModelKind::Sphere2)
        z = {0.4 + 1.5 * draw(), kTwoPi * draw()};
      else
        z = {2.0 * draw() - 1.0, kTwoPi * draw()};
      auto g = m.christoffel(z);
      for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            REQUIRE(g[a][i][j] == g[a][j][i]);
            REQUIRE(std::abs(g[a][i][j] - fd_christoffel(m, z, a, i, j, 0)) <
                    1e-6);
          }
    }
  }
}

TEST_CASE("chart domain violations raise domain errors") {
  auto m = ManifoldModel::sphere();
  REQUIRE_THROWS_AS(m.christoffel({0.0, 0.0}), DomainError);
  REQUIRE_THROWS_AS(m.christoffel({3.0, 0.0}), DomainError);
  REQUIRE_THROWS_AS(m.christoffel({1.0, 0.0}, 7), DomainError);
}

TEST_CASE("torus geodesics are straight lines") {
  auto m = ManifoldModel::flat_torus();
  CospherePoint p{{0.0, 0.0}, {1.0, 0.0}, 0};
  auto q = geodesic_flow(m, p, 0.5);
  REQUIRE(q.z[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(q.z[1] == 0.0);
  REQUIRE(q.zeta1[0] == 1.0);
  REQUIRE(q.zeta1[1] == 0.0);
}

TEST_CASE("equatorial sphere geodesic closes after 2 pi") {
  auto m = ManifoldModel::sphere();
  CospherePoint p{{kPi / 2, 0.3}, {0.0, 1.0}, 0};
  REQUIRE(g_norm(m, p.z, p.zeta1) == Catch::Approx(1.0));
  auto q = geodesic_flow(m, p, kTwoPi);
  REQUIRE(std::abs(q.z[0] - p.z[0]) < 1e-8);
  REQUIRE(std::abs(q.z[1] - p.z[1]) < 1e-8);
  REQUIRE(std::abs(q.zeta1[0] - p.zeta1[0]) < 1e-8);
  REQUIRE(std::abs(q.zeta1[1] - p.zeta1[1]) < 1e-8);
}

TEST_CASE("sphere geodesics cross the polar chart handoff") {
  auto m = ManifoldModel::sphere();
  // start near the equator heading due south; ends in the south chart
  CospherePoint p{{kPi / 2, 1.0}, {1.0, 0.0}, 0};
  auto q = geodesic_flow(m, p, 1.2);
  REQUIRE(q.chart == 1);
  REQUIRE(g_norm(m, q.z, q.zeta1, q.chart) == Catch::Approx(1.0).margin(1e-10));
  // flow back; the equator lies in the chart overlap, so compare embedded
  auto r = geodesic_flow(m, q, -1.2);
  double phi = r.chart == 0 ? r.z[0] : kPi - r.z[0];
  REQUIRE(std::abs(phi - p.z[0]) < 1e-10);
  REQUIRE(std::abs(std::remainder(r.z[1] - p.z[1], kTwoPi)) < 1e-10);
}

TEST_CASE("revolution geodesics conserve energy over t=10") {
  auto m = ManifoldModel::revolution();
  CospherePoint p{{0.2, 0.0}, normalize(m, {0.2, 0.0}, {0.6, 0.4}), 0};
  auto q = geodesic_flow(m, p, 10.0);
  REQUIRE(std::abs(g_norm(m, q.z, q.zeta1) - 1.0) < 1e-8);
}

TEST_CASE("geodesic flow is a one-parameter group") {
  std::mt19937 rng(7);
  auto draw = [&] { return (rng() >> 8) * (1.0 / 16777216.0); };
  for (auto name : {"flat_torus", "sphere", "revolution"}) {
    auto m = ManifoldModel::from_name(name);
    for (int t = 0; t < 10; ++t) {
      Vec2 z = m.kind == ModelKind::Sphere2
                   ? Vec2{0.6 + 0.9 * draw(), kTwoPi * draw()}
                   : (m.kind == ModelKind::RevolutionSurface
                          ? Vec2{draw() - 0.5, kTwoPi * draw()}
                          : Vec2{kTwoPi * draw(), kTwoPi * draw()});
      Vec2 v{2 * draw() - 1, 2 * draw() - 1};
      CospherePoint p{z, normalize(m, z, v), 0};
      double t1 = 0.7 * draw(), t2 = 0.7 * draw();
      auto a = geodesic_flow(m, geodesic_flow(m, p, t1), t2);
      auto b = geodesic_flow(m, p, t1 + t2);
      // compare in the embedding-free chart sense; charts may differ on the
      // sphere only if the point lands in the overlap, where both are valid
      if (a.chart == b.chart) {
        REQUIRE(std::abs(a.z[0] - b.z[0]) < 1e-8);
        REQUIRE(std::abs(std::remainder(a.z[1] - b.z[1], kTwoPi)) < 1e-8);
        REQUIRE(std::abs(a.zeta1[0] - b.zeta1[0]) < 1e-7);
        REQUIRE(std::abs(a.zeta1[1] - b.zeta1[1]) < 1e-7);
      }
      REQUIRE(std::abs(g_norm(m, a.z, a.zeta1, a.chart) - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("normalize") {
  auto m = ManifoldModel::flat_torus();
  auto v = normalize(m, {0, 0}, {2.0, 0.0});
  REQUIRE(v[0] == 1.0);
  REQUIRE(v[1] == 0.0);
  REQUIRE_THROWS_AS(normalize(m, {0, 0}, {0.0, 0.0}), DegenerateInput);
  // oracle: direct metric evaluation on the sphere chart
  auto s = ManifoldModel::sphere();
  Vec2 z{1.1, 0.4};
  Vec2 w{0.3, -0.8};
  auto g = s.metric(z);
  double n = std::sqrt(w[0] * g[0][0] * w[0] + w[1] * g[1][1] * w[1]);
  auto u = normalize(s, z, w);
  REQUIRE(u[0] == Catch::Approx(w[0] / n).epsilon(1e-14));
  REQUIRE(u[1] == Catch::Approx(w[1] / n).epsilon(1e-14));
  REQUIRE(g_norm(s, z, u) == Catch::Approx(1.0).margin(1e-12));
}
