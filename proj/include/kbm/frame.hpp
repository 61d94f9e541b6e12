#pragma once

// Orthonormal-coframe-bundle calculus. Frame points carry base coordinates
// z_m and a d x d matrix zeta with zeta(e_i) stored in row i; the flow of the
// coordinate fields preserves the Gram identity Z G(z) Z^T = I. Vector fields
// are first-order operators with exactly evaluable coefficients; applying one
// to a function bumps the evaluation one level up a jet tower, so nested
// applications (brackets, lifted Laplacians) are exact to rounding.

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kbm/errors.hpp"
#include "kbm/geometry.hpp"
#include "kbm/jet.hpp"

namespace kbm {

template <int d, class S>
struct FramePt {
  std::array<S, d> z{};
  std::array<std::array<S, d>, d> zeta{};
};

// base geometries feeding Christoffel symbols to the horizontal fields
template <int D>
struct FlatGeom {
  static constexpr int dim = D;
  static constexpr bool flat = true;
  bool is_flat_model() const { return true; }
  template <class S>
  void gamma(const std::array<S, D>&,
             std::array<std::array<std::array<S, D>, D>, D>&) const {}
};

struct SurfaceGeom {
  static constexpr int dim = 2;
  static constexpr bool flat = false;
  ManifoldModel model;
  int chart = 0;
  bool is_flat_model() const { return model.kind == ModelKind::FlatTorus2; }
  template <class S>
  void gamma(const std::array<S, 2>& z,
             std::array<std::array<std::array<S, 2>, 2>, 2>& out) const {
    out = model.christoffel_t<S>(z, chart);
  }
};

template <class Geom>
struct Levels {
  static constexpr int d = Geom::dim;
  static constexpr int NV = d + d * d;
  using L0 = double;
  using L1 = Jet<L0, NV>;
  using L2 = Jet<L1, NV>;
  using L3 = Jet<L2, NV>;
  using L4 = Jet<L3, NV>;
};

template <int d>
constexpr int slot_z(int m) { return m; }
template <int d>
constexpr int slot_zeta(int i, int j) { return d + i * d + j; }

template <int d, class S>
FramePt<d, Jet<S, d + d * d>> lift_point(const FramePt<d, S>& p) {
  constexpr int NV = d + d * d;
  FramePt<d, Jet<S, NV>> q;
  for (int m = 0; m < d; ++m)
    q.z[m] = Jet<S, NV>::variable(p.z[m], slot_z<d>(m));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      q.zeta[i][j] = Jet<S, NV>::variable(p.zeta[i][j], slot_zeta<d>(i, j));
  return q;
}

// ---------------------------------------------------------------- field ops

template <class Geom>
struct FieldOp {
  enum class Tag { V, Htilde, NashRot, NashProj };
  Tag tag = Tag::V;
  int a = 0, b = 0;       // V(a,b), Htilde(a), NashRot(a,b), NashProj(a)
  const Geom* geom = nullptr;

  static constexpr int d = Geom::dim;
  static constexpr int NV = Levels<Geom>::NV;

  static FieldOp vertical(int k, int l) {
    if (k < 0 || l < 0 || k >= d || l >= d)
      throw DegenerateInput("vertical field index out of range");
    return {Tag::V, k, l, nullptr};
  }
  static FieldOp horizontal(const Geom& g, int m) {
    if (m < 0 || m >= d)
      throw DegenerateInput("horizontal field index out of range");
    return {Tag::Htilde, m, 0, &g};
  }
  static FieldOp nash_rot(int i, int j) { return {Tag::NashRot, i, j, nullptr}; }
  static FieldOp nash_proj(int j) { return {Tag::NashProj, j, 0, nullptr}; }

  template <class S>
  void coeffs(const FramePt<d, S>& p, std::array<S, NV>& c) const {
    for (auto& x : c) x = S(0.0);
    switch (tag) {
      case Tag::V:
        for (int j = 0; j < d; ++j) {
          c[slot_zeta<d>(b, j)] += p.zeta[a][j];
          c[slot_zeta<d>(a, j)] -= p.zeta[b][j];
        }
        break;
      case Tag::Htilde: {
        for (int i = 0; i < d; ++i) c[slot_z<d>(i)] = p.zeta[a][i];
        if constexpr (!Geom::flat) {
          std::array<std::array<std::array<S, d>, d>, d> gm;
          geom->gamma(p.z, gm);
          for (int kk = 0; kk < d; ++kk)
            for (int ll = 0; ll < d; ++ll) {
              S acc(0.0);
              for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                  acc += gm[ll][i][j] * p.zeta[a][i] * p.zeta[kk][j];
              c[slot_zeta<d>(kk, ll)] -= acc;
            }
        }
        break;
      }
      case Tag::NashRot:
        c[slot_zeta<d>(0, b)] += p.zeta[0][a];
        c[slot_zeta<d>(0, a)] -= p.zeta[0][b];
        break;
      case Tag::NashProj: {
        c[slot_zeta<d>(0, a)] += S(1.0);
        for (int k = 0; k < d; ++k)
          c[slot_zeta<d>(0, k)] -= p.zeta[0][a] * p.zeta[0][k];
        break;
      }
    }
  }
};

// ------------------------------------------------------------ scalar fields

template <class Geom>
struct FrameFn {
  using Lv = Levels<Geom>;
  static constexpr int d = Geom::dim;
  virtual ~FrameFn() = default;
  virtual typename Lv::L0 eval(const FramePt<d, typename Lv::L0>&) const = 0;
  virtual typename Lv::L1 eval(const FramePt<d, typename Lv::L1>&) const = 0;
  virtual typename Lv::L2 eval(const FramePt<d, typename Lv::L2>&) const = 0;
  virtual typename Lv::L3 eval(const FramePt<d, typename Lv::L3>&) const = 0;
  virtual typename Lv::L4 eval(const FramePt<d, typename Lv::L4>&) const = 0;
};

template <class Geom>
using FnPtr = std::shared_ptr<const FrameFn<Geom>>;

template <class Geom, class Derived>
struct FrameFnCRTP : FrameFn<Geom> {
  using Lv = Levels<Geom>;
  static constexpr int d = Geom::dim;
  typename Lv::L0 eval(const FramePt<d, typename Lv::L0>& p) const override {
    return static_cast<const Derived*>(this)->template ev<typename Lv::L0>(p);
  }
  typename Lv::L1 eval(const FramePt<d, typename Lv::L1>& p) const override {
    return static_cast<const Derived*>(this)->template ev<typename Lv::L1>(p);
  }
  typename Lv::L2 eval(const FramePt<d, typename Lv::L2>& p) const override {
    return static_cast<const Derived*>(this)->template ev<typename Lv::L2>(p);
  }
  typename Lv::L3 eval(const FramePt<d, typename Lv::L3>& p) const override {
    return static_cast<const Derived*>(this)->template ev<typename Lv::L3>(p);
  }
  typename Lv::L4 eval(const FramePt<d, typename Lv::L4>& p) const override {
    return static_cast<const Derived*>(this)->template ev<typename Lv::L4>(p);
  }
};

// X f as a function; evaluation lifts one jet level, so the tower below the
// top supports four nested field applications
template <class Geom>
struct AppliedFn final : FrameFn<Geom> {
  using Lv = Levels<Geom>;
  static constexpr int d = Geom::dim;
  static constexpr int NV = Lv::NV;
  FieldOp<Geom> op;
  FnPtr<Geom> inner;

  AppliedFn(FieldOp<Geom> o, FnPtr<Geom> f) : op(o), inner(std::move(f)) {}

  template <class S>
  S ev(const FramePt<d, S>& p) const {
    auto lifted = lift_point<d, S>(p);
    auto val = inner->eval(lifted);
    std::array<S, NV> c;
    op.coeffs(p, c);
    S out(0.0);
    for (int i = 0; i < NV; ++i) out += c[i] * val.d[i];
    return out;
  }

  typename Lv::L0 eval(const FramePt<d, typename Lv::L0>& p) const override {
    return ev<typename Lv::L0>(p);
  }
  typename Lv::L1 eval(const FramePt<d, typename Lv::L1>& p) const override {
    return ev<typename Lv::L1>(p);
  }
  typename Lv::L2 eval(const FramePt<d, typename Lv::L2>& p) const override {
    return ev<typename Lv::L2>(p);
  }
  typename Lv::L3 eval(const FramePt<d, typename Lv::L3>& p) const override {
    return ev<typename Lv::L3>(p);
  }
  typename Lv::L4 eval(const FramePt<d, typename Lv::L4>&) const override {
    throw std::logic_error("jet tower exhausted: five nested applications");
  }
};

template <class Geom>
struct LinCombFn final : FrameFnCRTP<Geom, LinCombFn<Geom>> {
  static constexpr int d = Geom::dim;
  std::vector<std::pair<double, FnPtr<Geom>>> terms;
  template <class S>
  S ev(const FramePt<d, S>& p) const {
    S out(0.0);
    for (auto& [c, f] : terms) out += c * f->eval(p);
    return out;
  }
};

template <class Geom>
FnPtr<Geom> apply_op(const FieldOp<Geom>& op, FnPtr<Geom> f) {
  return std::make_shared<AppliedFn<Geom>>(op, std::move(f));
}

template <class Geom>
FnPtr<Geom> lincomb(std::vector<std::pair<double, FnPtr<Geom>>> terms) {
  auto r = std::make_shared<LinCombFn<Geom>>();
  r->terms = std::move(terms);
  return r;
}

// Delta_O^V = -sum_{i<j} V_ij^2 applied to f (unordered pair sum; the ordered
// double sum double-counts and breaks the fiber eigenvalues)
template <class Geom>
FnPtr<Geom> vertical_laplacian(FnPtr<Geom> f) {
  std::vector<std::pair<double, FnPtr<Geom>>> terms;
  for (int i = 0; i < Geom::dim; ++i)
    for (int j = i + 1; j < Geom::dim; ++j) {
      auto V = FieldOp<Geom>::vertical(i, j);
      terms.emplace_back(-1.0, apply_op(V, apply_op(V, f)));
    }
  return lincomb<Geom>(std::move(terms));
}

template <class Geom>
FnPtr<Geom> horizontal_laplacian(const Geom& g, FnPtr<Geom> f) {
  std::vector<std::pair<double, FnPtr<Geom>>> terms;
  for (int m = 0; m < Geom::dim; ++m) {
    auto H = FieldOp<Geom>::horizontal(g, m);
    terms.emplace_back(-1.0, apply_op(H, apply_op(H, f)));
  }
  return lincomb<Geom>(std::move(terms));
}

// (XY - YX) f at p through exact nested derivatives
template <class Geom>
double lie_bracket(const FieldOp<Geom>& X, const FieldOp<Geom>& Y,
                   std::type_identity_t<FnPtr<Geom>> f,
                   const FramePt<Geom::dim, double>& p) {
  auto Yf = apply_op(Y, f);
  auto Xf = apply_op(X, f);
  return AppliedFn<Geom>(X, Yf).eval(p) - AppliedFn<Geom>(Y, Xf).eval(p);
}

// ------------------------------------------------------------ test functions

// sparse trigonometric polynomials in the frame coordinates with exact
// derivatives at every jet level
template <class Geom>
struct TrigPoly final : FrameFnCRTP<Geom, TrigPoly<Geom>> {
  static constexpr int d = Geom::dim;
  static constexpr int NV = Levels<Geom>::NV;
  enum class Fac { Pow1, Pow2, Sin, Cos };
  struct Factor {
    int slot;
    Fac kind;
  };
  struct Term {
    double coef;
    std::vector<Factor> factors;
  };
  std::vector<Term> terms;

  template <class S>
  S ev(const FramePt<d, S>& p) const {
    S out(0.0);
    for (const auto& t : terms) {
      S prod(t.coef);
      for (const auto& f : t.factors) {
        S x = f.slot < d ? p.z[f.slot]
                         : p.zeta[(f.slot - d) / d][(f.slot - d) % d];
        switch (f.kind) {
          case Fac::Pow1: prod = prod * x; break;
          case Fac::Pow2: prod = prod * x * x; break;
          case Fac::Sin: prod = prod * sin(x); break;
          case Fac::Cos: prod = prod * cos(x); break;
        }
      }
      out += prod;
    }
    return out;
  }
};

// fixed seed for reproducible verification trials
inline constexpr unsigned kTrialSeed = 0xC0FFEE;

inline double unit_double(std::mt19937& rng) {
  return (rng() >> 8) * (1.0 / 16777216.0);  // [0,1) with 24 bits
}

template <class Geom>
FnPtr<Geom> random_trig_poly(std::mt19937& rng, int max_terms = 4) {
  auto f = std::make_shared<TrigPoly<Geom>>();
  constexpr int NV = Levels<Geom>::NV;
  int nterms = 2 + int(rng() % unsigned(max_terms - 1));
  for (int t = 0; t < nterms; ++t) {
    typename TrigPoly<Geom>::Term term;
    term.coef = 2.0 * unit_double(rng) - 1.0;
    int nf = 1 + int(rng() % 3u);
    for (int k = 0; k < nf; ++k) {
      typename TrigPoly<Geom>::Factor fac;
      fac.slot = int(rng() % unsigned(NV));
      fac.kind = static_cast<typename TrigPoly<Geom>::Fac>(rng() % 4u);
      term.factors.push_back(fac);
    }
    f->terms.push_back(std::move(term));
  }
  return f;
}

// random frame point: z in the chart box, rows = Euclidean-orthonormal matrix
// rescaled by G^{-1/2}, so Z G(z) Z^T = I holds at machine precision
template <class Geom>
FramePt<Geom::dim, double> random_frame_point(const Geom& geom,
                                              std::mt19937& rng) {
  constexpr int d = Geom::dim;
  FramePt<d, double> p;
  std::array<double, d> scale;
  if constexpr (Geom::flat) {
    for (int m = 0; m < d; ++m) p.z[m] = kTwoPi * unit_double(rng);
    scale.fill(1.0);
  } else {
    const auto& model = geom.model;
    if (model.kind == ModelKind::Sphere2) {
      p.z[0] = 0.4 + 1.5 * unit_double(rng);
      p.z[1] = kTwoPi * unit_double(rng);
    } else if (model.kind == ModelKind::RevolutionSurface) {
      p.z[0] = 2.0 * unit_double(rng) - 1.0;
      p.z[1] = kTwoPi * unit_double(rng);
    } else {
      p.z[0] = kTwoPi * unit_double(rng);
      p.z[1] = kTwoPi * unit_double(rng);
    }
    auto g = model.template metric_t<double>(p.z, geom.chart);
    for (int m = 0; m < d; ++m) scale[m] = 1.0 / std::sqrt(g[m][m]);
  }
  // Gram-Schmidt on a Gaussian matrix
  std::array<std::array<double, d>, d> q;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      // Box-Muller on two uniforms for platform-stable draws
      double u1 = std::max(unit_double(rng), 1e-12);
      double u2 = unit_double(rng);
      q[i][j] = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
    for (int k = 0; k < i; ++k) {
      double dot = 0;
      for (int j = 0; j < d; ++j) dot += q[i][j] * q[k][j];
      for (int j = 0; j < d; ++j) q[i][j] -= dot * q[k][j];
    }
    double nrm = 0;
    for (int j = 0; j < d; ++j) nrm += q[i][j] * q[i][j];
    nrm = std::sqrt(nrm);
    for (int j = 0; j < d; ++j) q[i][j] /= nrm;
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) p.zeta[i][j] = q[i][j] * scale[j];
  return p;
}

// Gram defect  max_ij |(Z G Z^T - I)_ij|
template <class Geom>
double gram_defect(const Geom& geom, const FramePt<Geom::dim, double>& p) {
  constexpr int d = Geom::dim;
  std::array<std::array<double, d>, d> g{};
  if constexpr (Geom::flat) {
    for (int i = 0; i < d; ++i) g[i][i] = 1.0;
  } else {
    auto gm = geom.model.template metric_t<double>(p.z, geom.chart);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g[i][j] = gm[i][j];
  }
  double worst = 0.0;
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) s += p.zeta[i][a] * g[a][b] * p.zeta[k][b];
      worst = std::max(worst, std::abs(s - (i == k ? 1.0 : 0.0)));
    }
  return worst;
}

// flow of V_{kl}: rows rotate as Z <- exp(-t A_{kl}) Z
template <int d>
FramePt<d, double> frame_rotate(FramePt<d, double> p, int k, int l, double t) {
  double c = std::cos(t), s = std::sin(t);
  for (int j = 0; j < d; ++j) {
    double rk = p.zeta[k][j], rl = p.zeta[l][j];
    p.zeta[k][j] = c * rk - s * rl;
    p.zeta[l][j] = s * rk + c * rl;
  }
  return p;
}

// RK4 transport along Htilde_1 for the frame system (tests and d>=3 paths)
template <class Geom>
FramePt<Geom::dim, double> frame_geodesic_rk4(const Geom& geom,
                                              FramePt<Geom::dim, double> p,
                                              double t, int nsteps) {
  constexpr int d = Geom::dim;
  using St = FramePt<d, double>;
  auto rhs = [&](const St& s) {
    St r{};
    for (int i = 0; i < d; ++i) r.z[i] = s.zeta[0][i];
    if constexpr (!Geom::flat) {
      std::array<std::array<std::array<double, d>, d>, d> gm;
      geom.gamma(s.z, gm);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double acc = 0.0;
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
              acc -= gm[b][i][j] * s.zeta[0][i] * s.zeta[a][j];
          r.zeta[a][b] = acc;
        }
    }
    return r;
  };
  auto add = [&](const St& a, double c, const St& b) {
    St r = a;
    for (int i = 0; i < d; ++i) {
      r.z[i] += c * b.z[i];
      for (int j = 0; j < d; ++j) r.zeta[i][j] += c * b.zeta[i][j];
    }
    return r;
  };
  double h = t / nsteps;
  for (int s = 0; s < nsteps; ++s) {
    St k1 = rhs(p);
    St k2 = rhs(add(p, h / 2, k1));
    St k3 = rhs(add(p, h / 2, k2));
    St k4 = rhs(add(p, h, k3));
    p = add(add(add(add(p, h / 6, k1), h / 3, k2), h / 3, k3), h / 6, k4);
  }
  return p;
}

// --------------------------------------------------------------- harmonics

// fiber harmonics as polynomials in the first frame row; deg <= 4
template <class Geom>
struct PullbackHarmonic final : FrameFnCRTP<Geom, PullbackHarmonic<Geom>> {
  static constexpr int d = Geom::dim;
  // list of monomials: coef * prod zeta[0][var]^pow
  struct Mono {
    double coef;
    std::array<int, 3> pows;
  };
  std::vector<Mono> monos;
  double eigenvalue = 0.0;  // Delta_{S^{d-1}} eigenvalue
  std::string label;

  template <class S>
  S ev(const FramePt<d, S>& p) const {
    S out(0.0);
    for (const auto& m : monos) {
      S prod(m.coef);
      for (int v = 0; v < d; ++v)
        for (int k = 0; k < m.pows[v]; ++k) prod = prod * p.zeta[0][v];
      out += prod;
    }
    return out;
  }
};

// circle: Re/Im (x+iy)^n ; sphere: real solid harmonics, both Delta_R^d
// harmonic so the restriction has eigenvalue n^2 resp. l(l+1)
template <class Geom>
std::vector<std::shared_ptr<PullbackHarmonic<Geom>>> harmonic_basis(
    int max_degree) {
  static_assert(Geom::dim == 2 || Geom::dim == 3);
  std::vector<std::shared_ptr<PullbackHarmonic<Geom>>> out;
  auto add = [&](double eig, std::string label,
                 std::vector<typename PullbackHarmonic<Geom>::Mono> ms) {
    auto h = std::make_shared<PullbackHarmonic<Geom>>();
    h->monos = std::move(ms);
    h->eigenvalue = eig;
    h->label = std::move(label);
    out.push_back(h);
  };
  if constexpr (Geom::dim == 2) {
    // binomial expansion of (x+iy)^n
    for (int n = 1; n <= max_degree; ++n) {
      std::vector<typename PullbackHarmonic<Geom>::Mono> re, im;
      double binom = 1.0;
      for (int k = 0; k <= n; ++k) {
        // i^k coefficient pattern
        double c = binom;
        if (k % 4 == 1) im.push_back({c, {n - k, k, 0}});
        else if (k % 4 == 2) re.push_back({-c, {n - k, k, 0}});
        else if (k % 4 == 3) im.push_back({-c, {n - k, k, 0}});
        else re.push_back({c, {n - k, k, 0}});
        binom = binom * (n - k) / (k + 1);
      }
      add(double(n) * n, "cos" + std::to_string(n), std::move(re));
      add(double(n) * n, "sin" + std::to_string(n), std::move(im));
    }
  } else {
    using M = typename PullbackHarmonic<Geom>::Mono;
    auto deg = [&](int l) { return double(l) * (l + 1); };
    if (max_degree >= 1) {
      add(deg(1), "Y1x", {M{1, {1, 0, 0}}});
      add(deg(1), "Y1y", {M{1, {0, 1, 0}}});
      add(deg(1), "Y1z", {M{1, {0, 0, 1}}});
    }
    if (max_degree >= 2) {
      add(deg(2), "Y2xy", {M{1, {1, 1, 0}}});
      add(deg(2), "Y2yz", {M{1, {0, 1, 1}}});
      add(deg(2), "Y2xz", {M{1, {1, 0, 1}}});
      add(deg(2), "Y2x2y2", {M{1, {2, 0, 0}}, M{-1, {0, 2, 0}}});
      add(deg(2), "Y2z2", {M{2, {0, 0, 2}}, M{-1, {2, 0, 0}}, M{-1, {0, 2, 0}}});
    }
    if (max_degree >= 3) {
      add(deg(3), "Y3z3",
          {M{2, {0, 0, 3}}, M{-3, {2, 0, 1}}, M{-3, {0, 2, 1}}});
      add(deg(3), "Y3xz2",
          {M{4, {1, 0, 2}}, M{-1, {3, 0, 0}}, M{-1, {1, 2, 0}}});
      add(deg(3), "Y3yz2",
          {M{4, {0, 1, 2}}, M{-1, {2, 1, 0}}, M{-1, {0, 3, 0}}});
      add(deg(3), "Y3zx2y2", {M{1, {2, 0, 1}}, M{-1, {0, 2, 1}}});
      add(deg(3), "Y3xyz", {M{1, {1, 1, 1}}});
      add(deg(3), "Y3x3", {M{1, {3, 0, 0}}, M{-3, {1, 2, 0}}});
      add(deg(3), "Y3y3", {M{3, {2, 1, 0}}, M{-1, {0, 3, 0}}});
    }
    if (max_degree >= 4) {
      add(deg(4), "Y4z4",
          {M{8, {0, 0, 4}}, M{-24, {2, 0, 2}}, M{-24, {0, 2, 2}},
           M{3, {4, 0, 0}}, M{6, {2, 2, 0}}, M{3, {0, 4, 0}}});
      add(deg(4), "Y4xz3",
          {M{4, {1, 0, 3}}, M{-3, {3, 0, 1}}, M{-3, {1, 2, 1}}});
      add(deg(4), "Y4yz3",
          {M{4, {0, 1, 3}}, M{-3, {2, 1, 1}}, M{-3, {0, 3, 1}}});
      add(deg(4), "Y4x2y2z2",
          {M{6, {2, 0, 2}}, M{-6, {0, 2, 2}}, M{-1, {4, 0, 0}},
           M{1, {0, 4, 0}}});
      add(deg(4), "Y4xyz2",
          {M{6, {1, 1, 2}}, M{-1, {3, 1, 0}}, M{-1, {1, 3, 0}}});
      add(deg(4), "Y4x3z", {M{1, {3, 0, 1}}, M{-3, {1, 2, 1}}});
      add(deg(4), "Y4y3z", {M{3, {2, 1, 1}}, M{-1, {0, 3, 1}}});
      add(deg(4), "Y4x4",
          {M{1, {4, 0, 0}}, M{-6, {2, 2, 0}}, M{1, {0, 4, 0}}});
      add(deg(4), "Y4xy3", {M{1, {3, 1, 0}}, M{-1, {1, 3, 0}}});
    }
  }
  return out;
}

// ------------------------------------------------------------- verification

struct IdentityReport {
  std::string identity;
  int trials = 0;
  double max_residual = 0.0;
  std::string witness;  // where the max occurred
};

struct SuiteReport {
  std::vector<IdentityReport> items;
  double max_residual() const {
    double m = 0.0;
    for (auto& r : items) m = std::max(m, r.max_residual);
    return m;
  }
};

template <class Geom>
std::string describe_point(const FramePt<Geom::dim, double>& p) {
  std::string s = "z=(";
  for (int i = 0; i < Geom::dim; ++i)
    s += (i ? "," : "") + std::to_string(p.z[i]);
  return s + ")";
}

// Eqs. of the bracket table, the vertical-Laplacian commutation, and (flat
// models only) the commutation of the two lifted Laplacians
template <class Geom>
SuiteReport verify_commutation_suite(const Geom& geom, int trials,
                                     bool include_laplacian_pair = true) {
  if (trials < 1) throw DegenerateInput("trials must be >= 1");
  constexpr int d = Geom::dim;
  std::mt19937 rng(kTrialSeed);
  IdentityReport vv{"[V_kl,V_mn] bracket table", trials, 0.0, ""};
  IdentityReport vh{"[V_kl,Htilde_m] bracket table", trials, 0.0, ""};
  IdentityReport lv{"[DeltaV,V_mn] = 0", trials, 0.0, ""};
  IdentityReport lh{"[DeltaH,DeltaV] = 0", trials, 0.0, ""};
  auto note = [&](IdentityReport& r, double res,
                  const FramePt<d, double>& p) {
    if (res > r.max_residual) {
      r.max_residual = res;
      r.witness = describe_point<Geom>(p);
    }
  };
  for (int t = 0; t < trials; ++t) {
    auto f = random_trig_poly<Geom>(rng);
    auto p = random_frame_point(geom, rng);
    // antisymmetric bracket table for the vertical family
    for (int k = 0; k < d; ++k)
      for (int l = k + 1; l < d; ++l)
        for (int m = 0; m < d; ++m)
          for (int n = m + 1; n < d; ++n) {
            auto Vkl = FieldOp<Geom>::vertical(k, l);
            auto Vmn = FieldOp<Geom>::vertical(m, n);
            double lhs = lie_bracket(Vkl, Vmn, f, p);
            auto term = [&](int a, int b) {
              return AppliedFn<Geom>(FieldOp<Geom>::vertical(a, b), f).eval(p);
            };
            double rhs = 0.0;
            if (l == m) rhs += term(k, n);
            if (n == k) rhs += term(l, m);
            if (k == m) rhs += term(n, l);
            if (l == n) rhs += term(m, k);
            note(vv, std::abs(lhs - rhs), p);
          }
    for (int k = 0; k < d; ++k)
      for (int l = k + 1; l < d; ++l)
        for (int m = 0; m < d; ++m) {
          auto Vkl = FieldOp<Geom>::vertical(k, l);
          auto Hm = FieldOp<Geom>::horizontal(geom, m);
          double lhs = lie_bracket(Vkl, Hm, f, p);
          double rhs = 0.0;
          if (l == m)
            rhs += AppliedFn<Geom>(FieldOp<Geom>::horizontal(geom, k), f).eval(p);
          if (k == m)
            rhs -= AppliedFn<Geom>(FieldOp<Geom>::horizontal(geom, l), f).eval(p);
          note(vh, std::abs(lhs - rhs), p);
        }
    {
      auto lap = vertical_laplacian<Geom>(f);
      for (int m = 0; m < d; ++m)
        for (int n = m + 1; n < d; ++n) {
          auto Vmn = FieldOp<Geom>::vertical(m, n);
          double a = AppliedFn<Geom>(Vmn, lap).eval(p);
          double b = vertical_laplacian<Geom>(apply_op(Vmn, f))->eval(p);
          note(lv, std::abs(a - b), p);
        }
    }
    if (include_laplacian_pair && geom.is_flat_model()) {
      auto hv = horizontal_laplacian(geom, vertical_laplacian<Geom>(f));
      auto vb = vertical_laplacian<Geom>(horizontal_laplacian(geom, f));
      note(lh, std::abs(hv->eval(p) - vb->eval(p)), p);
    }
  }
  SuiteReport rep;
  rep.items = {vv, vh, lv};
  if (include_laplacian_pair && geom.is_flat_model()) rep.items.push_back(lh);
  return rep;
}

// Delta_{O(d)} pi* u = pi* Delta_{S^{d-1}} u on harmonics of degree <= 4
template <class Geom>
SuiteReport verify_intertwining(const Geom& geom, int trials = 10) {
  static_assert(Geom::flat, "intertwining check runs on the flat frame model");
  std::mt19937 rng(kTrialSeed ^ 0x5151);
  SuiteReport rep;
  for (auto& h : harmonic_basis<Geom>(4)) {
    IdentityReport r{"lift " + h->label, trials, 0.0, ""};
    auto lap = vertical_laplacian<Geom>(h);
    for (int t = 0; t < trials; ++t) {
      auto p = random_frame_point(geom, rng);
      double lhs = lap->eval(p);
      double rhs = h->eigenvalue * h->eval(p);
      double res = std::abs(lhs - rhs);
      if (res > r.max_residual) {
        r.max_residual = res;
        r.witness = describe_point<Geom>(p);
      }
    }
    rep.items.push_back(r);
  }
  return rep;
}

}  // namespace kbm
