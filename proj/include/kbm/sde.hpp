#pragma once

// Kinetic Brownian motion sampler: Strang splitting with exact geodesic
// half-steps and a vertical Gaussian kick of variance 2 eps dt. Randomness
// comes from counter-based Philox4x32-10 streams keyed by (seed, path id),
// so ensembles are reproducible under any parallel schedule; statistics are
// accumulated per path block and reduced in fixed block order, which makes
// outputs bit-identical across thread counts.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "kbm/errors.hpp"
#include "kbm/geometry.hpp"
#include "kbm/stats.hpp"

namespace kbm {

// ------------------------------------------------------------------ RNG

namespace philox {

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = uint64_t(a) * b;
  hi = uint32_t(p >> 32);
  lo = uint32_t(p);
}

inline std::array<uint32_t, 4> round10(std::array<uint32_t, 4> ctr,
                                       std::array<uint32_t, 2> key) {
  constexpr uint32_t kWeylA = 0x9E3779B9u, kWeylB = 0xBB67AE85u;
  constexpr uint32_t kMulA = 0xD2511F53u, kMulB = 0xCD9E8D57u;
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMulA, ctr[0], hi0, lo0);
    mulhilo(kMulB, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

}  // namespace philox

// standard normals from one Philox block per pair (Box-Muller)
struct NormalStream {
  uint64_t seed = 0;
  uint64_t path = 0;
  uint64_t counter = 0;
  double cached = 0.0;
  bool has_cached = false;

  double next() {
    if (has_cached) {
      has_cached = false;
      return cached;
    }
    std::array<uint32_t, 4> ctr{uint32_t(counter), uint32_t(counter >> 32),
                                uint32_t(path), uint32_t(path >> 32)};
    std::array<uint32_t, 2> key{uint32_t(seed), uint32_t(seed >> 32)};
    auto out = philox::round10(ctr, key);
    ++counter;
    uint64_t a = (uint64_t(out[1]) << 32) | out[0];
    uint64_t b = (uint64_t(out[3]) << 32) | out[2];
    double u1 = double(a >> 11) * 0x1.0p-53;  // [0,1)
    double u2 = double(b >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1]
    double z0 = r * std::cos(kTwoPi * u2);
    cached = r * std::sin(kTwoPi * u2);
    has_cached = true;
    return z0;
  }
};

inline int kspec_threads() {
  int hw = int(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("KSPEC_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return std::min(v, hw);
  }
  return hw;
}

template <class Fn>
void parallel_blocks(int nblocks, Fn&& fn) {
  int nt = std::min(kspec_threads(), nblocks);
  if (nt <= 1) {
    for (int b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (int b = t; b < nblocks; b += nt) fn(b);
    });
  for (auto& th : pool) th.join();
}

// ------------------------------------------------------------ path states

struct PathState {
  const ManifoldModel* model = nullptr;
  Vec2 z{};        // chart position (wrapped on periodic charts)
  Vec2 disp{};     // unwrapped displacement, flat models
  double theta = 0.0;  // direction angle on flat models
  Vec2 zeta1{};    // unit direction, curved models
  int chart = 0;
  double t = 0.0;
  NormalStream rng;
};

inline PathState make_path(const ManifoldModel& model, uint64_t seed,
                           uint64_t path_id) {
  PathState s;
  s.model = &model;
  s.rng = NormalStream{seed, path_id, 0, 0.0, false};
  s.zeta1 = {1.0, 0.0};
  return s;
}

inline double unit_speed_defect(const PathState& s) {
  if (s.model->kind == ModelKind::FlatTorus2) return 0.0;
  return std::abs(g_norm(*s.model, s.z, s.zeta1, s.chart) - 1.0);
}

namespace detail {

inline void flat_half_step(PathState& s, double h) {
  double c = std::cos(s.theta), sn = std::sin(s.theta);
  s.z[0] = wrap_angle(s.z[0] + h * c);
  s.z[1] = wrap_angle(s.z[1] + h * sn);
  s.disp[0] += h * c;
  s.disp[1] += h * sn;
}

inline void curved_half_step(PathState& s, double h) {
  CospherePoint p{s.z, s.zeta1, s.chart};
  auto q = geodesic_flow(*s.model, p, h);
  s.z = q.z;
  s.zeta1 = q.zeta1;
  s.chart = q.chart;
}

}  // namespace detail

inline std::string dump_state(const PathState& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                " [state dump: z=(%.12g,%.12g) theta=%.12g zeta=(%.12g,%.12g) "
                "chart=%d t=%.12g]",
                s.z[0], s.z[1], s.theta, s.zeta1[0], s.zeta1[1], s.chart, s.t);
  return buf;
}

// Strang step: geodesic - vertical kick - geodesic, then renormalization
inline void step(PathState& s, double dt, double eps) {
  if (!(dt > 0)) throw DegenerateInput("step needs dt > 0");
  const double kick = std::sqrt(2.0 * eps * dt);
  if (s.model->kind == ModelKind::FlatTorus2) {
    detail::flat_half_step(s, dt / 2);
    if (eps > 0) s.theta += kick * s.rng.next();
    detail::flat_half_step(s, dt / 2);
  } else {
    try {
      detail::curved_half_step(s, dt / 2);
      if (eps > 0) {
        double delta = kick * s.rng.next();
        auto g = s.model->metric(s.z, s.chart);
        double a = s.zeta1[0], b = s.zeta1[1];
        Vec2 perp{-b * std::sqrt(g[1][1] / g[0][0]),
                  a * std::sqrt(g[0][0] / g[1][1])};
        double cd = std::cos(delta), sd = std::sin(delta);
        Vec2 rotated{cd * a + sd * perp[0], cd * b + sd * perp[1]};
        s.zeta1 = normalize(*s.model, s.z, rotated, s.chart);
      }
      detail::curved_half_step(s, dt / 2);
      s.zeta1 = normalize(*s.model, s.z, s.zeta1, s.chart);
    } catch (const std::runtime_error& e) {
      throw NumericalError(std::string("chart handoff failed: ") + e.what() +
                           dump_state(s));
    }
  }
  s.t += dt;
}

// flat R^3 frame path for the d=3 variant: the kick rotates the frame by
// exp(sum_k c_k A_{1k}) through the closed-form Rodrigues rotation
struct FramePathState {
  std::array<double, 3> z{};
  std::array<double, 3> disp{};
  std::array<std::array<double, 3>, 3> frame{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  double t = 0.0;
  NormalStream rng;
};

inline double frame_orthonormality_defect(const FramePathState& s) {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0;
      for (int a = 0; a < 3; ++a) dot += s.frame[i][a] * s.frame[j][a];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

inline void step3(FramePathState& s, double dt, double eps) {
  auto half = [&](double h) {
    for (int a = 0; a < 3; ++a) {
      s.z[a] += h * s.frame[0][a];
      s.disp[a] += h * s.frame[0][a];
    }
  };
  half(dt / 2);
  if (eps > 0) {
    double kick = std::sqrt(2.0 * eps * dt);
    double c2 = kick * s.rng.next();
    double c3 = kick * s.rng.next();
    // rotation exp(-(c2 A_12 + c3 A_13)) acting on rows: axis (0, -c3, c2)
    std::array<double, 3> w{0.0, -c3, c2};
    double ang = std::sqrt(w[1] * w[1] + w[2] * w[2]);
    if (ang > 0) {
      for (auto& x : w) x /= ang;
      double ca = std::cos(ang), sa = std::sin(ang);
      std::array<std::array<double, 3>, 3> R;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double cross = 0.0;
          // (I cos + sin [w]_x + (1-cos) w w^T)
          double wx[3][3] = {{0, -w[2], w[1]}, {w[2], 0, -w[0]}, {-w[1], w[0], 0}};
          cross = wx[i][j];
          R[i][j] = ca * (i == j ? 1.0 : 0.0) + sa * cross +
                    (1 - ca) * w[i] * w[j];
        }
      std::array<std::array<double, 3>, 3> nf{};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int a = 0; a < 3; ++a) nf[i][j] += R[i][a] * s.frame[a][j];
      s.frame = nf;
    }
    // modified Gram-Schmidt renormalization
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < i; ++k) {
        double dot = 0;
        for (int a = 0; a < 3; ++a) dot += s.frame[i][a] * s.frame[k][a];
        for (int a = 0; a < 3; ++a) s.frame[i][a] -= dot * s.frame[k][a];
      }
      double nrm = 0;
      for (int a = 0; a < 3; ++a) nrm += s.frame[i][a] * s.frame[i][a];
      nrm = std::sqrt(nrm);
      for (int a = 0; a < 3; ++a) s.frame[i][a] /= nrm;
    }
  }
  half(dt / 2);
  s.t += dt;
}

// ------------------------------------------------------------- observables

// mean-zero trig monomials on T^2 x S^1
struct Observable {
  std::string name;
  double operator()(const PathState& s) const {
    if (name == "cos_theta") return std::cos(s.theta);
    if (name == "sin_theta") return std::sin(s.theta);
    if (name == "cos_x1") return std::cos(s.z[0]);
    if (name == "cosx1_cos_theta") return std::cos(s.z[0]) * std::cos(s.theta);
    if (name == "sinx1_cos_theta") return std::sin(s.z[0]) * std::cos(s.theta);
    throw DegenerateInput("unknown observable: " + name);
  }
};

// closed form E|x_t|^2 = (2/eps) t - (2/eps^2)(1 - e^{-eps t}) for the flat
// plane, from integrating the velocity autocorrelation e^{-eps|s-u|}
inline double msd_reference_flat(double eps, double t) {
  if (!(eps > 0)) throw DegenerateInput("closed form needs eps > 0");
  return (2.0 / eps) * t - (2.0 / (eps * eps)) * (1.0 - std::exp(-eps * t));
}

// --------------------------------------------------------------- ensembles

struct SimulateConfig {
  ManifoldModel model = ManifoldModel::flat_torus();
  double eps = 1.0;
  double dt = 1e-2;
  double T = 10.0;
  int paths = 10000;
  uint64_t seed = 1;
  int record_every = 10;
  std::string observable_f;   // empty = skip correlations
  std::string observable_g;
  std::string observable_g2;  // optional quadrature partner
  bool uniform_start = false;  // draw (z, theta) from the flat measure
  int blocks = 40;
};

struct EnsembleStats {
  std::vector<double> time;
  std::vector<double> msd, msd_se;
  std::vector<double> vacf, vacf_se;
  std::vector<double> corr, corr_se;
  std::vector<double> corr2, corr2_se;
  int paths = 0;
  double dt = 0, eps = 0;
};

inline EnsembleStats simulate_ensemble(const SimulateConfig& cfg) {
  if (cfg.paths < 100) throw DegenerateInput("need at least 100 paths");
  if (cfg.model.kind != ModelKind::FlatTorus2)
    throw DegenerateInput(
        "ensemble statistics are chart-dependent off the flat model; "
        "use the step API for curved paths");
  if (cfg.blocks < 30) throw DegenerateInput("need >= 30 SE blocks");
  const int nsteps = int(std::llround(cfg.T / cfg.dt));
  const int nbins = nsteps / cfg.record_every + 1;
  const bool want_corr = !cfg.observable_f.empty();
  const bool want_corr2 = want_corr && !cfg.observable_g2.empty();
  Observable obf{cfg.observable_f}, obg{cfg.observable_g};
  Observable obg2{cfg.observable_g2};

  const int B = cfg.blocks;
  const int per_block = cfg.paths / B;
  if (per_block * B != cfg.paths)
    throw DegenerateInput("paths must divide evenly into SE blocks");

  struct Acc {
    std::vector<double> msd, vacf, corr, corr2;
  };
  std::vector<Acc> acc(B);
  for (auto& a : acc) {
    a.msd.assign(nbins, 0.0);
    a.vacf.assign(nbins, 0.0);
    a.corr.assign(nbins, 0.0);
    a.corr2.assign(nbins, 0.0);
  }

  parallel_blocks(B, [&](int b) {
    auto& a = acc[b];
    for (int pi = 0; pi < per_block; ++pi) {
      uint64_t pid = uint64_t(b) * per_block + pi;
      PathState s = make_path(cfg.model, cfg.seed, pid);
      double f0 = 0.0;
      if (cfg.uniform_start) {
        // distinct counter block, so starts never collide with step draws
        std::array<uint32_t, 4> ctr{0xFFFFFFFFu, 0xFFFFFFFFu, uint32_t(pid),
                                    uint32_t(pid >> 32)};
        std::array<uint32_t, 2> key{uint32_t(cfg.seed),
                                    uint32_t(cfg.seed >> 32)};
        auto out = philox::round10(ctr, key);
        s.z[0] = kTwoPi * (out[0] * 0x1.0p-32);
        s.z[1] = kTwoPi * (out[1] * 0x1.0p-32);
        s.theta = kTwoPi * (out[2] * 0x1.0p-32);
      }
      if (want_corr) f0 = obf(s);
      double v0c = std::cos(s.theta), v0s = std::sin(s.theta);
      int bin = 0;
      auto record = [&] {
        a.msd[bin] += s.disp[0] * s.disp[0] + s.disp[1] * s.disp[1];
        a.vacf[bin] +=
            v0c * std::cos(s.theta) + v0s * std::sin(s.theta);
        if (want_corr) a.corr[bin] += f0 * obg(s);
        if (want_corr2) a.corr2[bin] += f0 * obg2(s);
        ++bin;
      };
      record();
      for (int st = 1; st <= nsteps; ++st) {
        step(s, cfg.dt, cfg.eps);
        if (st % cfg.record_every == 0) record();
      }
    }
  });

  EnsembleStats out;
  out.paths = cfg.paths;
  out.dt = cfg.dt;
  out.eps = cfg.eps;
  out.time.resize(nbins);
  for (int j = 0; j < nbins; ++j)
    out.time[j] = j * cfg.record_every * cfg.dt;
  auto reduce = [&](auto sel, std::vector<double>& mean,
                    std::vector<double>& se) {
    mean.assign(nbins, 0.0);
    se.assign(nbins, 0.0);
    for (int j = 0; j < nbins; ++j) {
      double tot = 0;
      for (int b = 0; b < B; ++b) tot += sel(acc[b])[j];
      double m = tot / cfg.paths;
      mean[j] = m;
      double var = 0;
      for (int b = 0; b < B; ++b) {
        double bm = sel(acc[b])[j] / per_block;
        var += (bm - m) * (bm - m);
      }
      se[j] = std::sqrt(var / (double(B) * (B - 1)));
    }
  };
  reduce([](const Acc& a) -> const std::vector<double>& { return a.msd; },
         out.msd, out.msd_se);
  reduce([](const Acc& a) -> const std::vector<double>& { return a.vacf; },
         out.vacf, out.vacf_se);
  if (want_corr)
    reduce([](const Acc& a) -> const std::vector<double>& { return a.corr; },
           out.corr, out.corr_se);
  if (want_corr2)
    reduce([](const Acc& a) -> const std::vector<double>& { return a.corr2; },
           out.corr2, out.corr2_se);
  return out;
}

// refinement pair with a shared Brownian path: each coarse kick is the sum
// of the two fine kicks, so the difference isolates the splitting bias
struct CoupledRefinement {
  EnsembleStats coarse, fine;
  double max_shift_over_se = 0.0;
};

inline CoupledRefinement msd_refinement_pair(const SimulateConfig& cfg) {
  if (cfg.model.kind != ModelKind::FlatTorus2)
    throw DegenerateInput("refinement pair runs on the flat model");
  const int nsteps = int(std::llround(cfg.T / cfg.dt));
  const int nbins = nsteps / cfg.record_every + 1;
  const int B = cfg.blocks;
  const int per_block = cfg.paths / B;
  if (per_block * B != cfg.paths)
    throw DegenerateInput("paths must divide evenly into SE blocks");
  std::vector<std::vector<double>> msd_c(B), msd_f(B);
  for (int b = 0; b < B; ++b) {
    msd_c[b].assign(nbins, 0.0);
    msd_f[b].assign(nbins, 0.0);
  }
  const double half_kick = std::sqrt(cfg.eps * cfg.dt);  // per fine kick
  parallel_blocks(B, [&](int b) {
    for (int pi = 0; pi < per_block; ++pi) {
      uint64_t pid = uint64_t(b) * per_block + pi;
      NormalStream rng{cfg.seed, pid, 0, 0.0, false};
      double thc = 0.0, thf = 0.0;
      double xc = 0, yc = 0, xf = 0, yf = 0;
      int bin = 1;
      msd_c[b][0] += 0.0;
      for (int st = 1; st <= nsteps; ++st) {
        double e1 = half_kick * rng.next();
        double e2 = half_kick * rng.next();
        // fine: two Strang steps of dt/2
        double h = cfg.dt / 4;
        xf += h * std::cos(thf); yf += h * std::sin(thf);
        thf += e1;
        xf += h * std::cos(thf); yf += h * std::sin(thf);
        xf += h * std::cos(thf); yf += h * std::sin(thf);
        thf += e2;
        xf += h * std::cos(thf); yf += h * std::sin(thf);
        // coarse: one Strang step of dt with the summed kick
        double hc = cfg.dt / 2;
        xc += hc * std::cos(thc); yc += hc * std::sin(thc);
        thc += e1 + e2;
        xc += hc * std::cos(thc); yc += hc * std::sin(thc);
        if (st % cfg.record_every == 0) {
          msd_c[b][bin] += xc * xc + yc * yc;
          msd_f[b][bin] += xf * xf + yf * yf;
          ++bin;
        }
      }
    }
  });
  CoupledRefinement out;
  auto finish = [&](std::vector<std::vector<double>>& acc, EnsembleStats& st) {
    st.paths = cfg.paths;
    st.eps = cfg.eps;
    st.time.resize(nbins);
    st.msd.assign(nbins, 0.0);
    st.msd_se.assign(nbins, 0.0);
    for (int j = 0; j < nbins; ++j) {
      st.time[j] = j * cfg.record_every * cfg.dt;
      double tot = 0;
      for (int b = 0; b < B; ++b) tot += acc[b][j];
      double m = tot / cfg.paths;
      st.msd[j] = m;
      double var = 0;
      for (int b = 0; b < B; ++b) {
        double bm = acc[b][j] / per_block;
        var += (bm - m) * (bm - m);
      }
      st.msd_se[j] = std::sqrt(var / (double(B) * (B - 1)));
    }
  };
  finish(msd_c, out.coarse);
  out.coarse.dt = cfg.dt;
  finish(msd_f, out.fine);
  out.fine.dt = cfg.dt / 2;
  for (int j = 1; j < nbins; ++j) {
    double se = std::max(out.coarse.msd_se[j], 1e-300);
    out.max_shift_over_se = std::max(
        out.max_shift_over_se,
        std::abs(out.coarse.msd[j] - out.fine.msd[j]) / se);
  }
  return out;
}

// ------------------------------------------------------- correlation decay

struct DecayFit {
  double nu = 0.0;
  double stderr_ = 0.0;
  bool ok = false;
  std::string reason;
  double window_lo = 0.0, window_hi = 0.0;
};

// log-linear fit of |corr| over the window where it exceeds 3 SE. For mixed
// observables whose early-time correlation carries faster modes, a burn-in
// fraction of the window can be discarded before fitting.
inline DecayFit fit_decay(const std::vector<double>& time,
                          const std::vector<double>& corr,
                          const std::vector<double>& se,
                          double burn_in_fraction = 0.0) {
  DecayFit out;
  int last = -1;
  for (size_t j = 1; j < corr.size(); ++j)
    if (std::abs(corr[j]) > 3.0 * std::max(se[j], 1e-300)) last = int(j);
  if (last < 4) {
    out.reason = "correlation below the noise floor everywhere";
    return out;
  }
  double t_end = time[last];
  std::vector<double> xs, ys, ws;
  for (int j = 1; j <= last; ++j) {
    if (time[j] < burn_in_fraction * t_end) continue;
    if (std::abs(corr[j]) <= 3.0 * std::max(se[j], 1e-300)) continue;
    xs.push_back(time[j]);
    ys.push_back(std::log(std::abs(corr[j])));
    double snr = std::abs(corr[j]) / std::max(se[j], 1e-300);
    ws.push_back(std::min(snr * snr, 1e12));
  }
  if (xs.size() < 6) {
    out.reason = "too few tail samples above the noise floor";
    return out;
  }
  auto fit = weighted_linear_fit(xs, ys, ws);
  if (fit.slope >= 0.0) {
    out.reason = "no decay in the fit window";
    return out;
  }
  // exponential decays show one rate across the window; quasi-periodic or
  // algebraic correlations drift, so compare split-half rates
  if (xs.size() >= 12) {
    size_t h = xs.size() / 2;
    auto head = [&](const std::vector<double>& v) {
      return std::vector<double>(v.begin(), v.begin() + h);
    };
    auto tail = [&](const std::vector<double>& v) {
      return std::vector<double>(v.begin() + h, v.end());
    };
    auto fa = weighted_linear_fit(head(xs), head(ys), head(ws));
    auto fb = weighted_linear_fit(tail(xs), tail(ys), tail(ws));
    double drift = std::abs(fa.slope - fb.slope);
    double allow = std::max(0.35 * std::abs(fit.slope),
                            5.0 * (fa.slope_stderr_noise + fb.slope_stderr_noise));
    if (drift > allow || fb.slope >= 0.0) {
      out.reason = "rate drifts across the window (non-exponential decay)";
      return out;
    }
  }
  out.nu = -fit.slope;
  out.stderr_ = fit.slope_stderr;
  out.ok = true;
  out.window_lo = xs.front();
  out.window_hi = xs.back();
  return out;
}

inline DecayFit correlation_decay(const SimulateConfig& cfg,
                                  double burn_in_fraction = 0.0) {
  if (cfg.observable_f.empty() || cfg.observable_g.empty())
    throw DegenerateInput("correlation decay needs both observables");
  SimulateConfig c = cfg;
  c.uniform_start = true;
  auto stats = simulate_ensemble(c);
  if (!c.observable_g2.empty()) {
    // oscillating correlation: combine with the quadrature partner so the
    // fitted signal is the envelope, which decays at the plain modal rate
    std::vector<double> env(stats.time.size()), env_se(stats.time.size());
    for (size_t j = 0; j < env.size(); ++j) {
      env[j] = std::hypot(stats.corr[j], stats.corr2[j]);
      double e = std::max(env[j], 1e-300);
      env_se[j] = std::sqrt(std::pow(stats.corr[j] * stats.corr_se[j], 2) +
                            std::pow(stats.corr2[j] * stats.corr2_se[j], 2)) /
                  e;
    }
    return fit_decay(stats.time, env, env_se, burn_in_fraction);
  }
  return fit_decay(stats.time, stats.corr, stats.corr_se, burn_in_fraction);
}

// ------------------------------------------------------ geodesic deviation

struct DeviationResult {
  std::vector<double> eps_grid;
  std::vector<double> median_sup;
  double exponent = 0.0;
  double exponent_stderr = 0.0;
};

inline DeviationResult geodesic_deviation(const std::vector<double>& eps_grid,
                                          double T, int paths, double dt,
                                          uint64_t seed) {
  if (eps_grid.size() < 4)
    throw DegenerateInput("deviation scan needs >= 4 eps values");
  double lo = eps_grid.front(), hi = eps_grid.front();
  for (double e : eps_grid) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (std::log10(hi / lo) < 1.5 - 1e-12)
    throw DegenerateInput("deviation grid must span >= 1.5 decades");
  auto model = ManifoldModel::flat_torus();
  DeviationResult out;
  out.eps_grid = eps_grid;
  int nsteps = int(std::llround(T / dt));
  for (double eps : eps_grid) {
    std::vector<double> sups(paths);
    parallel_blocks(paths, [&](int pid) {
      PathState s = make_path(model, seed, uint64_t(pid));
      double sup = 0.0;
      for (int st = 1; st <= nsteps; ++st) {
        step(s, dt, eps);
        double dx = s.disp[0] - s.t;  // noiseless geodesic moves along x
        double dy = s.disp[1];
        sup = std::max(sup, std::hypot(dx, dy));
      }
      sups[pid] = sup;
    });
    std::sort(sups.begin(), sups.end());
    out.median_sup.push_back(sups[sups.size() / 2]);
  }
  auto fit = loglog_fit(out.eps_grid, out.median_sup);
  out.exponent = fit.slope;
  out.exponent_stderr = fit.slope_stderr;
  return out;
}

}  // namespace kbm
