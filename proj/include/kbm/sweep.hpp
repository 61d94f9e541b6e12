#pragma once

// Eigenvalue continuation in eps. Branches are continued with linear velocity
// prediction and nearest-entry assignment; the matching gate is 3x the median
// consecutive step of the branch (window diameter / 10 on the first step).
// Two branches claiming the same spectrum entry are marked collided, except
// when the claimed value occurs with matching multiplicity. Limits at eps=0
// come from quadratic Richardson extrapolation of the last samples.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kbm/block.hpp"
#include "kbm/eig.hpp"

namespace kbm {

enum class BranchStatus { tracked, collided, defective };

inline const char* to_string(BranchStatus s) {
  switch (s) {
    case BranchStatus::tracked: return "tracked";
    case BranchStatus::collided: return "collided";
    default: return "defective";
  }
}

struct BranchSample {
  double eps = 0.0;
  Complex lambda{};
  double pairing_abs = 0.0;
};

struct Branch {
  int id = 0;
  Momentum k{};
  std::vector<BranchSample> samples;
  BranchStatus status = BranchStatus::tracked;
  bool active = true;

  Complex predict(double eps_next) const {
    const auto& last = samples.back();
    if (samples.size() < 2) return last.lambda;
    const auto& prev = samples[samples.size() - 2];
    Complex velocity = (last.lambda - prev.lambda) / (last.eps - prev.eps);
    return last.lambda + velocity * (eps_next - last.eps);
  }
  double gate(double window_diameter) const {
    if (samples.size() < 2) return window_diameter / 10.0;
    std::vector<double> steps;
    for (size_t i = 1; i < samples.size(); ++i)
      steps.push_back(std::abs(samples[i].lambda - samples[i - 1].lambda));
    std::sort(steps.begin(), steps.end());
    double median = steps[steps.size() / 2];
    if (steps.size() % 2 == 0)
      median = 0.5 * (median + steps[steps.size() / 2 - 1]);
    return 3.0 * std::max(median, 1e-14);
  }
};

struct Window {
  double re_min = -1e300, re_max = 1e300;
  double im_min = -1e300, im_max = 1e300;
  bool contains(Complex z) const {
    return z.real() >= re_min && z.real() <= re_max && z.imag() >= im_min &&
           z.imag() <= im_max;
  }
  double diameter() const { return std::hypot(re_max - re_min, im_max - im_min); }
};

struct SweepConfig {
  Momentum k{};
  double eps_max = 0.2;
  double eps_min = 1e-3;
  double ratio = 0.8;
  Window window{};
  int n_override = 0;  // 0 = default truncation rule per eps
};

inline std::vector<double> geometric_grid(double eps_max, double eps_min,
                                          double ratio) {
  if (!(ratio >= 0.5 && ratio <= 0.95))
    throw DegenerateInput("grid ratio must lie in [0.5, 0.95]");
  if (!(eps_min > 0.0 && eps_max > eps_min))
    throw DegenerateInput("need eps_max > eps_min > 0");
  std::vector<double> g;
  for (double e = eps_max; e >= eps_min * (1.0 - 1e-12); e *= ratio)
    g.push_back(e);
  return g;
}

inline std::vector<Branch> sweep(const SweepConfig& cfg) {
  auto grid = geometric_grid(cfg.eps_max, cfg.eps_min, cfg.ratio);
  auto truncation = [&](double eps) {
    return cfg.n_override > 0 ? cfg.n_override : default_mode_truncation(eps);
  };
  auto pairs0 = eig_dense(assemble_torus_block(cfg.k, grid[0], truncation(grid[0])));
  std::vector<Branch> branches;
  for (const auto& p : pairs0) {
    if (!cfg.window.contains(p.lambda)) continue;
    Branch b;
    b.id = int(branches.size());
    b.k = cfg.k;
    b.samples.push_back({grid[0], p.lambda, std::abs(p.pairing)});
    if (p.defective) b.status = BranchStatus::defective;
    branches.push_back(std::move(b));
  }
  if (branches.empty())
    throw DegenerateInput("spectral window contains no eigenvalue at eps_max");

  double diam = cfg.window.diameter();
  if (!std::isfinite(diam)) {
    // unbounded window: use the spread of the initial spectrum
    double lo_re = 1e300, hi_re = -1e300, lo_im = 1e300, hi_im = -1e300;
    for (const auto& p : pairs0) {
      lo_re = std::min(lo_re, p.lambda.real());
      hi_re = std::max(hi_re, p.lambda.real());
      lo_im = std::min(lo_im, p.lambda.imag());
      hi_im = std::max(hi_im, p.lambda.imag());
    }
    diam = std::hypot(hi_re - lo_re, hi_im - lo_im);
  }

  for (size_t step = 1; step < grid.size(); ++step) {
    double eps = grid[step];
    auto pairs = eig_dense(assemble_torus_block(cfg.k, eps, truncation(eps)));
    struct Claim {
      int branch;
      int entry;
      double dist;
    };
    std::vector<Claim> claims;
    for (auto& b : branches) {
      if (!b.active || b.status == BranchStatus::collided) continue;
      Complex pred = b.predict(eps);
      int best = -1;
      double bd = 1e300;
      for (size_t i = 0; i < pairs.size(); ++i) {
        double d = std::abs(pairs[i].lambda - pred);
        if (d < bd) {
          bd = d;
          best = int(i);
        }
      }
      claims.push_back({b.id, best, bd});
    }
    std::sort(claims.begin(), claims.end(), [](const Claim& a, const Claim& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.branch < b.branch;
    });
    // group claims by entry; degenerate eigenvalues provide as many copies
    std::map<int, std::vector<Claim>> by_entry;
    for (auto& c : claims) {
      if (c.dist > branches[c.branch].gate(diam)) {
        branches[c.branch].active = false;  // lost the branch; keep history
        continue;
      }
      by_entry[c.entry].push_back(c);
    }
    std::vector<bool> used(pairs.size(), false);
    for (auto& [entry, cs] : by_entry) {
      // copies of the claimed value up to matching tolerance
      std::vector<int> copies;
      for (size_t i = 0; i < pairs.size(); ++i)
        if (!used[i] &&
            std::abs(pairs[i].lambda - pairs[entry].lambda) < 1e-12)
          copies.push_back(int(i));
      if (cs.size() > copies.size()) {
        for (auto& c : cs) {
          branches[c.branch].status = BranchStatus::collided;
          branches[c.branch].active = false;
        }
        continue;
      }
      for (size_t j = 0; j < cs.size(); ++j) {
        const auto& p = pairs[copies[j]];
        used[copies[j]] = true;
        auto& b = branches[cs[j].branch];
        b.samples.push_back({eps, p.lambda, std::abs(p.pairing)});
        if (p.defective) b.status = BranchStatus::defective;
      }
    }
  }
  return branches;
}

// ------------------------------------------------------------- extrapolation

struct LimitEstimate {
  Complex limit{};
  double error = 0.0;
};

namespace detail {
inline Complex quadratic_at_zero(const BranchSample& a, const BranchSample& b,
                                 const BranchSample& c) {
  // Lagrange evaluation at eps = 0
  double xa = a.eps, xb = b.eps, xc = c.eps;
  Complex la = a.lambda * (xb * xc) / ((xa - xb) * (xa - xc));
  Complex lb = b.lambda * (xa * xc) / ((xb - xa) * (xb - xc));
  Complex lc = c.lambda * (xa * xb) / ((xc - xa) * (xc - xb));
  return la + lb + lc;
}
}  // namespace detail

inline LimitEstimate extrapolate_limit(const Branch& br) {
  if (br.status != BranchStatus::tracked)
    throw DegenerateInput(std::string("refusing to extrapolate a ") +
                          to_string(br.status) + " branch");
  const auto& s = br.samples;
  if (s.size() < 4)
    throw DegenerateInput("extrapolation needs at least 4 samples");
  if (s.back().eps > 1e-2 * (1.0 + 1e-12))
    throw DegenerateInput("extrapolation needs samples down to eps <= 1e-2");
  size_t m = s.size();
  Complex est_a = detail::quadratic_at_zero(s[m - 3], s[m - 2], s[m - 1]);
  Complex est_b = detail::quadratic_at_zero(s[m - 4], s[m - 3], s[m - 2]);
  return {est_a, std::abs(est_a - est_b)};
}

// ------------------------------------------------------- first-order formula

// d lambda / d eps = <B' u, v> / <v, u> with B' = -i diag(n^2); refuses
// near-defective pairs, where the first-order expansion assumes simplicity
inline Complex first_order_slope(const SpectralBlock& b, const EigenPair& p) {
  Complex pairing = p.left.transpose() * p.right;
  if (std::abs(pairing) <= kDefectiveGate)
    throw DegenerateInput(
        "pairing below the defectiveness gate: the first-order formula "
        "assumes a simple (m=1) eigenvalue");
  CVec bu = b.epsilon_derivative() * p.right;
  Complex num = p.left.transpose() * bu;
  return num / pairing;
}

struct PerturbationCheck {
  Complex lambda0{};
  Complex formula{};
  Complex fd_coarse{}, fd_fine{};
  double rel_residual = 0.0;   // |formula - fd_fine| / |fd_fine|
  double improvement = 0.0;    // |formula - fd_coarse| / |formula - fd_fine|
};

inline PerturbationCheck perturbation_check(Momentum k, double eps0, int N,
                                            Complex lambda_near,
                                            double fd_step = 1e-4) {
  auto blk = assemble_torus_block(k, eps0, N);
  auto pairs = eig_dense(blk);
  const EigenPair* best = nullptr;
  double bd = 1e300;
  for (auto& p : pairs) {
    double d = std::abs(p.lambda - lambda_near);
    if (d < bd) {
      bd = d;
      best = &p;
    }
  }
  PerturbationCheck out;
  out.lambda0 = best->lambda;
  out.formula = first_order_slope(blk, *best);

  auto nearest = [&](double eps, Complex hint) {
    auto vals = eigenvalues_only(assemble_torus_block(k, eps, N).dense());
    Complex bestv = vals[0];
    double dd = 1e300;
    for (auto& v : vals) {
      double d = std::abs(v - hint);
      if (d < dd) {
        dd = d;
        bestv = v;
      }
    }
    return bestv;
  };
  auto central = [&](double h) {
    Complex up = nearest(eps0 + h, out.lambda0 + h * out.formula);
    Complex dn = nearest(eps0 - h, out.lambda0 - h * out.formula);
    return (up - dn) / (2.0 * h);
  };
  out.fd_coarse = central(fd_step);
  out.fd_fine = central(fd_step / 2);
  out.rel_residual = std::abs(out.formula - out.fd_fine) / std::abs(out.fd_fine);
  double ec = std::abs(out.formula - out.fd_coarse);
  double ef = std::abs(out.formula - out.fd_fine);
  out.improvement = ef > 0 ? ec / ef : 4.0;
  return out;
}

// ---------------------------------------------------------- conjugation

// the negative-noise block is exactly the conjugate transpose of the
// positive one, so the spectral mirror identity holds entrywise; this defect
// is conditioning-free and should be exactly zero
inline double conjugation_structural_defect(Momentum k, double eps, int N) {
  auto bp = assemble_torus_block(k, std::abs(eps), N);
  SpectralBlock bm = bp;
  bm.epsilon = -std::abs(eps);
  double d = 0.0;
  d = std::max(d, std::abs(bm.up - std::conj(bp.dn)));
  d = std::max(d, std::abs(bm.dn - std::conj(bp.up)));
  for (int i = 0; i < bp.dim(); ++i)
    d = std::max(d, std::abs(bm.diag(i) - std::conj(bp.diag(i))));
  return d;
}

// spec(B(k,-eps)) versus the conjugated spec(B(k,eps)); the mirror image
// encodes the adjoint relation between the two signs of the noise
inline double conjugation_check(Momentum k, double eps, int N) {
  auto plus = eigenvalues_only(assemble_torus_block(k, std::abs(eps), N).dense());
  SpectralBlock bm = assemble_torus_block(k, std::abs(eps), N);
  bm.epsilon = -std::abs(eps);
  auto minus = eigenvalues_only(bm.dense());
  std::vector<bool> used(minus.size(), false);
  double worst = 0.0;
  for (auto& v : plus) {
    Complex target = std::conj(v);
    double best = 1e300;
    int bi = -1;
    for (size_t i = 0; i < minus.size(); ++i) {
      if (used[i]) continue;
      double d = std::abs(minus[i] - target);
      if (d < best) {
        best = d;
        bi = int(i);
      }
    }
    used[bi] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace kbm
