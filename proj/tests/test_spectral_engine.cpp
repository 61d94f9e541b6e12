#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "kbm/block.hpp"
#include "kbm/eig.hpp"
#include "kbm/projector.hpp"

using namespace kbm;

TEST_CASE("dense solver on the diagonal k=0 block") {
  auto b = assemble_torus_block({0, 0}, 0.2, 3);
  auto pairs = eig_dense(b);
  REQUIRE(pairs.size() == 7);
  for (int n = -3; n <= 3; ++n) {
    Complex target(0.0, -0.2 * n * n);
    double best = 1e300;
    for (auto& p : pairs) best = std::min(best, std::abs(p.lambda - target));
    REQUIRE(best < 1e-13);
  }
  for (auto& p : pairs) {
    REQUIRE(p.residual < kResidualGate);
    REQUIRE(!p.defective);
  }
}

TEST_CASE("2x2 toy matches the quadratic-formula oracle") {
  CMat toy(2, 2);
  toy << Complex(0, 0), Complex(0.5, 0), Complex(0.5, 0), Complex(0, -0.1);
  auto pairs = eig_dense(toy);
  // frozen roots of lambda^2 + i eps lambda - 1/4 at eps = 0.1
  Complex r1(0.49749371855331, -0.05), r2(-0.49749371855331, -0.05);
  double b1 = std::min(std::abs(pairs[0].lambda - r1),
                       std::abs(pairs[0].lambda - r2));
  double b2 = std::min(std::abs(pairs[1].lambda - r1),
                       std::abs(pairs[1].lambda - r2));
  REQUIRE(b1 < 1e-14);
  REQUIRE(b2 < 1e-14);
}

TEST_CASE("complex-symmetric basis: left vectors are colinear with right") {
  auto b = assemble_torus_block({2, 1}, 0.3, 10);
  CMat T = to_trig_basis(b);
  REQUIRE((T - T.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  auto pairs = eig_dense(T);
  for (int i = 0; i < 5; ++i) {
    const auto& p = pairs[i];
    Complex ip = p.right.adjoint() * p.left;
    REQUIRE((p.left - ip * p.right).norm() < 1e-8);
  }
}

TEST_CASE("biorthogonality of the top pairs") {
  auto pairs = eig_dense(assemble_torus_block({1, 0}, 0.1, 24));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      if (i == j) continue;
      Complex ip = pairs[j].left.transpose() * pairs[i].right;
      REQUIRE(std::abs(ip) < 1e-8);
    }
}

TEST_CASE("dense path refuses oversized problems") {
  REQUIRE_THROWS_AS(eig_dense(CMat::Zero(2001, 2001)), DegenerateInput);
}

TEST_CASE("tridiagonal partial-pivot LU solves match dense solves") {
  std::mt19937 rng(99);
  auto draw = [&] { return (rng() >> 8) * (1.0 / 16777216.0) - 0.5; };
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + int(rng() % 40u);
    CVec sub(n - 1), diag(n), sup(n - 1), rhs(n);
    for (int i = 0; i < n; ++i) {
      diag[i] = Complex(draw(), draw());
      rhs[i] = Complex(draw(), draw());
    }
    for (int i = 0; i < n - 1; ++i) {
      sub[i] = Complex(draw(), draw());
      sup[i] = Complex(draw(), draw());
    }
    if (trial % 3 == 0) diag[rng() % unsigned(n)] = 0.0;  // force pivoting
    CMat D = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) D(i, i) = diag[i];
    for (int i = 0; i < n - 1; ++i) {
      D(i + 1, i) = sub[i];
      D(i, i + 1) = sup[i];
    }
    TriLU lu;
    lu.factor(sub, diag, sup);
    CVec x = lu.solve(rhs);
    REQUIRE((D * x - rhs).norm() < 1e-11 * (1.0 + x.norm()));
  }
}

TEST_CASE("shift-invert Arnoldi agrees with the dense oracle") {
  auto b = assemble_torus_block({1, 0}, 0.05, 256);
  auto iter = shift_invert_arnoldi(b, Complex(0.0, -0.01), 60, 10);
  auto dense = eig_dense(b);
  // the ten pairs nearest the shift match the dense run
  for (auto& p : iter.pairs) {
    double best = 1e300;
    for (auto& q : dense) best = std::min(best, std::abs(p.lambda - q.lambda));
    REQUIRE(best < 1e-8);
    REQUIRE(p.residual < kResidualGate);
  }
  REQUIRE(iter.pairs.size() == 10);
}

TEST_CASE("exact-eigenvalue shift triggers the perturbed retry") {
  auto b = assemble_torus_block({0, 0}, 0.2, 16);
  auto res = shift_invert_arnoldi(b, Complex(0.0, -0.2), 20, 3);
  REQUIRE(res.retries >= 1);
  REQUIRE(res.note.find("perturbed") != std::string::npos);
  for (auto& p : res.pairs) {
    double best = 1e300;
    for (int n = -16; n <= 16; ++n)
      best = std::min(best, std::abs(p.lambda - Complex(0, -0.2 * n * n)));
    REQUIRE(best < 1e-9);
  }
}

TEST_CASE("count=0 returns an empty list") {
  auto b = assemble_torus_block({1, 0}, 0.1, 16);
  REQUIRE(shift_invert_arnoldi(b, Complex(0, -0.05), 12, 0).pairs.empty());
}

TEST_CASE("contour with no eigenvalue gives the zero projector") {
  auto b = assemble_torus_block({1, 0}, 0.1, 32);
  auto est = contour_projector(b, Complex(0.0, 2.0), 0.3, 64);
  REQUIRE(est.matrix.norm() <= 1e-9);
  REQUIRE(est.rank_estimate == 0);
}

TEST_CASE("k=0 circle around -0.2i captures the n=+-1 pair") {
  auto b = assemble_torus_block({0, 0}, 0.2, 16);
  auto est = contour_projector(b, Complex(0.0, -0.2), 0.1, 64);
  REQUIRE(std::abs(est.trace - Complex(2.0, 0.0)) < 1e-6);
  REQUIRE(est.rank_estimate == 2);
  REQUIRE(est.idempotency_defect < 1e-8);
}

TEST_CASE("rank-1 projector matches the dense outer product") {
  auto b = assemble_torus_block({1, 0}, 0.1, 64);
  auto pairs = eig_dense(b);
  const auto& lead = pairs[0];
  auto est = contour_projector(b, lead.lambda, 0.15, 64);
  REQUIRE(est.rank_estimate == 1);
  REQUIRE(std::abs(est.trace - Complex(1.0, 0.0)) < 1e-6);
  REQUIRE(est.idempotency_defect < 1e-8);
  Complex pairing = lead.left.transpose() * lead.right;
  CMat outer = (lead.right * lead.left.transpose()) / pairing;
  REQUIRE((est.matrix - outer).norm() < 1e-7);
}

TEST_CASE("projector quadrature is converged at Q=64") {
  auto b = assemble_torus_block({1, 0}, 0.1, 32);
  auto pairs = eig_dense(b);
  auto a = contour_projector(b, pairs[0].lambda, 0.15, 64);
  auto c = contour_projector(b, pairs[0].lambda, 0.15, 128);
  REQUIRE((a.matrix - c.matrix).norm() < 1e-9);
}

TEST_CASE("near-contour eigenvalue is refused with a distance report") {
  auto b = assemble_torus_block({0, 0}, 0.2, 8);
  // radius puts the n=0 eigenvalue right on the contour
  REQUIRE_THROWS_AS(contour_projector(b, Complex(0.0, -0.2), 0.2, 64),
                    DomainError);
}

TEST_CASE("projector derivative passes the Richardson ratio test") {
  auto b = assemble_torus_block({1, 0}, 0.1, 64);
  auto lead = eig_dense(b)[0].lambda;
  auto d = projector_derivative({1, 0}, 0.1, 64, lead, 0.15, 1e-3);
  REQUIRE(d.consistent);
  REQUIRE(std::abs(d.richardson_ratio - 4.0) <= 0.6);
  REQUIRE(!d.zero_derivative);
}

TEST_CASE("diagonal family has zero projector derivative") {
  auto d = projector_derivative({0, 0}, 0.2, 16, Complex(0.0, -0.2), 0.1, 1e-3);
  REQUIRE(d.zero_derivative);
  REQUIRE(d.consistent);
}

TEST_CASE("oversized derivative step fails the consistency score") {
  auto b = assemble_torus_block({1, 0}, 0.1, 64);
  auto lead = eig_dense(b)[0].lambda;
  auto d = projector_derivative({1, 0}, 0.1, 64, lead, 0.15, 0.08);
  REQUIRE(!d.consistent);
}
