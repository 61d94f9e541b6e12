#pragma once

// Subcommand runners behind the CLI. Each writes its artifacts through a
// ManifestWriter (atomic file writes + digest table) and reports pass/fail
// checks in the manifest. Exit codes: 0 pass, 1 usage/config, 2 check
// failure, 3 numerical failure.

#include <filesystem>
#include <string>

#include "kbm/frame.hpp"
#include "kbm/hypo.hpp"
#include "kbm/io.hpp"
#include "kbm/nash.hpp"
#include "kbm/projector.hpp"
#include "kbm/sde.hpp"
#include "kbm/sweep.hpp"

namespace kbm {

enum ExitCode {
  kExitPass = 0,
  kExitUsage = 1,
  kExitCheckFailure = 2,
  kExitNumerical = 3
};

namespace cli {

inline Json suite_to_json(const SuiteReport& rep) {
  Json items = Json::array();
  for (auto& r : rep.items)
    items.push_back({{"identity", r.identity},
                     {"trials", r.trials},
                     {"max_residual", r.max_residual},
                     {"witness", r.witness}});
  return items;
}

inline int finish(ManifestWriter& mw) {
  mw.finalize();
  return mw.all_pass() ? kExitPass : kExitCheckFailure;
}

// ------------------------------------------------------------ verify-calculus

inline int run_verify_calculus(const RunConfig& cfg) {
  ManifestWriter mw(cfg.out_dir, cfg);
  Json report;
  report["schema"] = 1;

  SurfaceGeom torus{ManifoldModel::flat_torus(), 0};
  auto d2 = verify_commutation_suite(torus, cfg.trials);
  FlatGeom<3> flat3;
  auto d3 = verify_commutation_suite(flat3, std::min(cfg.trials, 20), false);
  auto lift2 = verify_intertwining(FlatGeom<2>{});
  auto lift3 = verify_intertwining(FlatGeom<3>{});
  auto nash2 = nash_fields_report(FlatGeom<2>{});
  auto nash3 = nash_fields_report(FlatGeom<3>{});

  report["commutation_d2"] = suite_to_json(d2);
  report["commutation_d3"] = suite_to_json(d3);
  report["intertwining_d2"] = suite_to_json(lift2);
  report["intertwining_d3"] = suite_to_json(lift3);
  Json nash = Json::array();
  for (auto* rep : {&nash2, &nash3}) {
    Json fields = Json::array();
    for (auto& f : rep->fields)
      fields.push_back(
          {{"field", f.field}, {"divergence", f.divergence_defect}});
    nash.push_back({{"sum_of_squares_residual", rep->sum_of_squares_residual},
                    {"fields", fields}});
  }
  report["nash"] = nash;

  double tol_comm = cfg.tol("commutation", 1e-6);
  double tol_lift = cfg.tol("intertwining", 1e-6);
  double tol_nash = cfg.tol("nash", 1e-8);
  mw.add_check("commutation_d2", d2.max_residual() < tol_comm,
               d2.max_residual(), tol_comm);
  mw.add_check("commutation_d3", d3.max_residual() < tol_comm,
               d3.max_residual(), tol_comm);
  mw.add_check("intertwining_d2", lift2.max_residual() < tol_lift,
               lift2.max_residual(), tol_lift);
  mw.add_check("intertwining_d3", lift3.max_residual() < tol_lift,
               lift3.max_residual(), tol_lift);
  for (auto* rep : {&nash2, &nash3}) {
    mw.add_check("nash_sum_of_squares",
                 rep->sum_of_squares_residual < tol_nash,
                 rep->sum_of_squares_residual, tol_nash);
    mw.add_check("nash_divergence", rep->max_divergence() < tol_nash,
                 rep->max_divergence(), tol_nash);
  }
  mw.add_artifact("calculus_report.json", report.dump(2) + "\n");
  return finish(mw);
}

// ------------------------------------------------------------------ spectrum

inline int run_spectrum(const RunConfig& cfg) {
  if (!cfg.eps) throw DegenerateInput("spectrum needs 'eps'");
  if (cfg.k_list.empty()) throw DegenerateInput("spectrum needs 'k'");
  ManifestWriter mw(cfg.out_dir, cfg);
  Json dump = Json::array();
  double worst_res = 0.0, worst_im = -1e300;
  for (auto k : cfg.k_list) {
    int N = cfg.n_rule.resolve(*cfg.eps);
    auto blk = assemble_torus_block(k, *cfg.eps, N);
    auto pairs = eig_dense(blk);
    for (auto& p : pairs) {
      dump.push_back({{"k", {k.k1, k.k2}},
                      {"eps", *cfg.eps},
                      {"lambda_re", p.lambda.real()},
                      {"lambda_im", p.lambda.imag()},
                      {"residual", p.residual}});
      worst_res = std::max(worst_res, p.residual);
      worst_im = std::max(worst_im, p.lambda.imag());
    }
    std::ostringstream mm;
    write_block(mm, blk);
    mw.add_artifact("block_k" + std::to_string(k.k1) + "_" +
                        std::to_string(k.k2) + ".mm",
                    mm.str());
  }
  mw.add_artifact("eigenpairs.json", dump.dump(2) + "\n");
  double tol_res = cfg.tol("residual", 1e-9);
  double tol_im = cfg.tol("imag", 1e-12);
  mw.add_check("eigenpair_residuals", worst_res < tol_res, worst_res, tol_res);
  mw.add_check("semibounded", worst_im <= tol_im, worst_im, tol_im);
  return finish(mw);
}

// --------------------------------------------------------------------- sweep

inline int run_sweep(const RunConfig& cfg) {
  if (!cfg.eps_grid) throw DegenerateInput("sweep needs 'eps_grid'");
  if (cfg.k_list.empty()) throw DegenerateInput("sweep needs 'k'");
  ManifestWriter mw(cfg.out_dir, cfg);
  CsvTable table;
  table.header = {"eps", "k1", "k2", "branch_id", "re", "im", "pairing_abs",
                  "status"};
  Json limits = Json::array();
  double worst_im = -1e300;
  for (auto k : cfg.k_list) {
    SweepConfig sc;
    sc.k = k;
    sc.eps_max = cfg.eps_grid->max;
    sc.eps_min = cfg.eps_grid->min;
    sc.ratio = cfg.eps_grid->ratio;
    sc.window = cfg.window.value_or(Window{});
    sc.n_override = cfg.n_rule.fixed ? cfg.n_rule.value : 0;
    auto branches = sweep(sc);
    for (auto& b : branches) {
      for (auto& s : b.samples) {
        table.rows.push_back({fmt17(s.eps), std::to_string(k.k1),
                              std::to_string(k.k2), std::to_string(b.id),
                              fmt17(s.lambda.real()), fmt17(s.lambda.imag()),
                              fmt17(s.pairing_abs), to_string(b.status)});
        worst_im = std::max(worst_im, s.lambda.imag());
      }
      Json lim = {{"k", {k.k1, k.k2}},
                  {"branch_id", b.id},
                  {"status", to_string(b.status)},
                  {"samples", int(b.samples.size())}};
      if (b.status == BranchStatus::tracked && b.samples.size() >= 4 &&
          b.samples.back().eps <= 1e-2 * (1.0 + 1e-12)) {
        auto le = extrapolate_limit(b);
        lim["limit_re"] = le.limit.real();
        lim["limit_im"] = le.limit.imag();
        lim["error"] = le.error;
      }
      limits.push_back(lim);
    }
  }
  mw.add_artifact("branches.csv", table.dump());
  mw.add_artifact("limits.json", limits.dump(2) + "\n");
  double tol_im = cfg.tol("imag", 1e-12);
  mw.add_check("semibounded_along_branches", worst_im <= tol_im, worst_im,
               tol_im);
  return finish(mw);
}

// -------------------------------------------------------------------- perturb

inline int run_perturb(const RunConfig& cfg) {
  if (!cfg.eps) throw DegenerateInput("perturb needs 'eps'");
  if (cfg.k_list.empty()) throw DegenerateInput("perturb needs 'k'");
  ManifestWriter mw(cfg.out_dir, cfg);
  Json out = Json::array();
  double worst_rel = 0.0, worst_impr = 1e300;
  for (auto k : cfg.k_list) {
    int N = cfg.n_rule.resolve(*cfg.eps);
    Complex target;
    if (cfg.lambda0) {
      target = *cfg.lambda0;
    } else {
      auto pairs = eig_dense(assemble_torus_block(k, *cfg.eps, N));
      target = pairs[0].lambda;
    }
    auto pc = perturbation_check(k, *cfg.eps, N, target);
    out.push_back({{"k", {k.k1, k.k2}},
                   {"eps", *cfg.eps},
                   {"lambda_re", pc.lambda0.real()},
                   {"lambda_im", pc.lambda0.imag()},
                   {"slope_re", pc.formula.real()},
                   {"slope_im", pc.formula.imag()},
                   {"fd_re", pc.fd_fine.real()},
                   {"fd_im", pc.fd_fine.imag()},
                   {"rel_residual", pc.rel_residual},
                   {"improvement", pc.improvement}});
    worst_rel = std::max(worst_rel, pc.rel_residual);
    worst_impr = std::min(worst_impr, pc.improvement);
  }
  mw.add_artifact("perturbation.json", out.dump(2) + "\n");
  double tol_rel = cfg.tol("perturb_rel", 5e-3);
  mw.add_check("first_order_match", worst_rel <= tol_rel, worst_rel, tol_rel);
  mw.add_check("fd_improvement", worst_impr >= 1.7, worst_impr, 1.7);
  return finish(mw);
}

// -------------------------------------------------------------------- project

inline int run_project(const RunConfig& cfg) {
  if (!cfg.eps) throw DegenerateInput("project needs 'eps'");
  if (cfg.k_list.empty()) throw DegenerateInput("project needs 'k'");
  ManifestWriter mw(cfg.out_dir, cfg);
  Momentum k = cfg.k_list.front();
  int N = cfg.n_rule.resolve(*cfg.eps);
  auto blk = assemble_torus_block(k, *cfg.eps, N);
  Complex center;
  if (cfg.lambda0) {
    center = *cfg.lambda0;
  } else {
    center = eig_dense(blk)[0].lambda;
  }
  double radius = cfg.radius.value_or(0.15);
  auto est = contour_projector(blk, center, radius, cfg.quadrature);
  double trace_defect = std::abs(est.trace - Complex(est.rank_estimate, 0.0));
  Json rep = {{"k", {k.k1, k.k2}},
              {"eps", *cfg.eps},
              {"center_re", center.real()},
              {"center_im", center.imag()},
              {"radius", radius},
              {"quadrature", est.quadrature_order},
              {"trace_re", est.trace.real()},
              {"trace_im", est.trace.imag()},
              {"rank", est.rank_estimate},
              {"idempotency_defect", est.idempotency_defect},
              {"min_contour_distance", est.min_contour_distance}};
  double step = std::min(1e-3, 0.25 * *cfg.eps);
  auto der = projector_derivative(k, *cfg.eps, N, center, radius, step,
                                  cfg.quadrature);
  rep["richardson_ratio"] = der.richardson_ratio;
  rep["derivative_zero"] = der.zero_derivative;
  mw.add_artifact("projector.json", rep.dump(2) + "\n");
  double tol_idem = cfg.tol("idempotency", 1e-8);
  double tol_trace = cfg.tol("trace", 1e-6);
  mw.add_check("idempotency", est.idempotency_defect <= tol_idem,
               est.idempotency_defect, tol_idem);
  mw.add_check("trace_integrality", trace_defect <= tol_trace, trace_defect,
               tol_trace);
  mw.add_check("derivative_ratio",
               der.consistent, der.richardson_ratio, 4.0);
  return finish(mw);
}

// ---------------------------------------------------------------------- probe

inline int run_probe(const RunConfig& cfg) {
  if (!cfg.eps_grid) throw DegenerateInput("probe needs 'eps_grid'");
  ManifestWriter mw(cfg.out_dir, cfg);
  auto main = hypoelliptic_probe(cfg.eps_grid->min, cfg.eps_grid->max,
                                 cfg.probe_points);
  auto control = hypoelliptic_probe(cfg.eps_grid->min, cfg.eps_grid->max,
                                    cfg.probe_points, 0.0);
  CsvTable table;
  table.header = {"eps", "k1", "truncation", "c", "c_control"};
  for (size_t i = 0; i < main.points.size(); ++i)
    table.rows.push_back({fmt17(main.points[i].eps),
                          std::to_string(main.points[i].k1),
                          std::to_string(main.points[i].truncation),
                          fmt17(main.points[i].c),
                          fmt17(control.points[i].c)});
  Json rep = {{"slope", main.slope},
              {"slope_ci", main.ci_halfwidth},
              {"control_slope", control.slope},
              {"control_slope_ci", control.ci_halfwidth},
              {"regularized", main.any_regularized}};
  mw.add_artifact("probe.csv", table.dump());
  mw.add_artifact("probe.json", rep.dump(2) + "\n");
  double lo = -cfg.tol("probe_slope_lo", 0.78);
  double hi = -cfg.tol("probe_slope_hi", 0.52);
  mw.add_check("exponent_lower", main.slope > lo, main.slope, lo);
  mw.add_check("exponent_upper", main.slope < hi, main.slope, hi);
  mw.add_check("control_flat", std::abs(control.slope) < 0.1, control.slope,
               0.1);
  return finish(mw);
}

// ------------------------------------------------------------------- simulate

inline int run_simulate(const RunConfig& cfg) {
  if (!cfg.eps) throw DegenerateInput("simulate needs 'eps'");
  ManifestWriter mw(cfg.out_dir, cfg);
  SimulateConfig sc;
  sc.model = ManifoldModel::from_name(cfg.model, cfg.profile_poly);
  sc.eps = *cfg.eps;
  sc.dt = cfg.dt.value_or(1e-2);
  sc.T = cfg.horizon.value_or(10.0);
  sc.paths = cfg.paths.value_or(10000);
  sc.seed = cfg.seed;
  sc.observable_f = cfg.observable_f;
  sc.observable_g = cfg.observable_g;
  sc.observable_g2 = cfg.observable_g2;
  sc.uniform_start = !cfg.observable_f.empty();
  while (sc.paths % sc.blocks != 0) ++sc.blocks;
  auto st = simulate_ensemble(sc);

  CsvTable table;
  table.header = {"t", "msd", "msd_se", "vacf", "corr_f_g", "corr_se"};
  for (size_t j = 0; j < st.time.size(); ++j)
    table.rows.push_back(
        {fmt17(st.time[j]), fmt17(st.msd[j]), fmt17(st.msd_se[j]),
         fmt17(st.vacf[j]), fmt17(st.corr.empty() ? 0.0 : st.corr[j]),
         fmt17(st.corr_se.empty() ? 0.0 : st.corr_se[j])});
  mw.add_artifact("timeseries.csv", table.dump());
  Json run = {{"seed", cfg.seed},      {"dt", sc.dt},
              {"paths", sc.paths},     {"eps", sc.eps},
              {"model", cfg.model},    {"version", kToolVersion}};
  mw.add_artifact("run.json", run.dump(2) + "\n");

  if (sc.eps > 0 && sc.model.kind == ModelKind::FlatTorus2 &&
      cfg.observable_f.empty()) {
    double worst = 0.0;
    for (size_t j = 1; j < st.time.size(); ++j) {
      double ref = msd_reference_flat(sc.eps, st.time[j]);
      worst = std::max(worst,
                       std::abs(st.msd[j] - ref) / std::max(st.msd_se[j], 1e-300));
    }
    mw.add_check("msd_within_3se", worst <= 3.0, worst, 3.0);
  }
  if (!cfg.observable_f.empty()) {
    auto fit = fit_decay(st.time, st.corr, st.corr_se);
    Json fj = {{"ok", fit.ok},
               {"nu", fit.nu},
               {"stderr", fit.stderr_},
               {"window_lo", fit.window_lo},
               {"window_hi", fit.window_hi},
               {"reason", fit.reason}};
    mw.add_artifact("decay_fit.json", fj.dump(2) + "\n");
  }
  return finish(mw);
}

// --------------------------------------------------------------------- golden

// default regression battery with pinned configurations
inline int run_golden(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  int worst = kExitPass;
  auto sub = [&](const std::string& name, RunConfig c, auto&& fn) {
    c.subcommand = name;
    c.out_dir = (fs::path(cfg.out_dir) / name).string();
    int rc = fn(c);
    worst = std::max(worst, rc);
  };

  {
    RunConfig c = cfg;
    c.trials = 30;
    sub("verify-calculus", c, run_verify_calculus);
  }
  {
    RunConfig c = cfg;
    c.eps = 0.1;
    c.k_list = {{0, 0}, {1, 0}};
    sub("spectrum", c, run_spectrum);
  }
  {
    RunConfig c = cfg;
    c.eps_grid = EpsGrid{0.2, 8e-3, 0.8};
    c.k_list = {{1, 0}};
    c.window = Window{-2.0, 2.0, -0.35, 0.05};
    c.n_rule = NRule{true, 64};
    sub("sweep", c, run_sweep);
  }
  {
    RunConfig c = cfg;
    c.eps = 1e-2;
    c.k_list = {{1, 0}};
    c.n_rule = NRule{true, 128};
    sub("perturb", c, run_perturb);
  }
  {
    RunConfig c = cfg;
    c.eps = 0.1;
    c.k_list = {{1, 0}};
    c.n_rule = NRule{true, 64};
    c.radius = 0.15;
    sub("project", c, run_project);
  }
  {
    RunConfig c = cfg;
    c.eps_grid = EpsGrid{0.1, 3e-3, 0.8};
    c.probe_points = 7;
    sub("probe", c, run_probe);
  }
  {
    RunConfig c = cfg;
    c.eps = 1.0;
    c.dt = 1e-2;
    c.horizon = 5.0;
    c.paths = 4000;
    sub("simulate", c, run_simulate);
  }

  // aggregate digest table over all sub-run artifacts
  Json digests;
  for (auto& name : {"verify-calculus", "spectrum", "sweep", "perturb",
                     "project", "probe", "simulate"}) {
    auto mpath = fs::path(cfg.out_dir) / name / "manifest.json";
    auto manifest = Json::parse(read_file(mpath));
    for (auto& o : manifest["outputs"])
      digests[std::string(name) + "/" + o["path"].get<std::string>()] =
          o["digest"];
  }
  RunConfig c = cfg;
  c.subcommand = "golden";
  ManifestWriter mw(cfg.out_dir, c);
  mw.add_artifact("digests.json", digests.dump(2) + "\n");
  mw.add_check("battery_pass", worst == kExitPass, double(worst), 0.0);
  mw.finalize();
  return worst;
}

// compare two golden runs: digest tables must agree bit for bit; on mismatch
// the numeric files are diffed with the given tolerances
inline int golden_compare_dirs(const std::string& got_dir,
                               const std::string& want_dir, double abstol,
                               double reltol, std::string& report_out) {
  namespace fs = std::filesystem;
  auto got = Json::parse(read_file(fs::path(got_dir) / "digests.json"));
  auto want = Json::parse(read_file(fs::path(want_dir) / "digests.json"));
  std::ostringstream rep;
  bool identical = true;
  bool fail = false;
  for (auto it = want.begin(); it != want.end(); ++it) {
    if (!got.contains(it.key())) {
      rep << "missing artifact: " << it.key() << "\n";
      identical = false;
      fail = true;
      continue;
    }
    if (got[it.key()] != it.value()) {
      identical = false;
      auto ga = read_file(fs::path(got_dir) / it.key());
      auto wa = read_file(fs::path(want_dir) / it.key());
      if (it.key().size() > 4 &&
          it.key().substr(it.key().size() - 4) == ".csv") {
        auto diff = golden_compare_csv(ga, wa, abstol, reltol);
        if (diff.schema_drift) {
          rep << it.key() << ": schema drift\n";
          fail = true;
        } else if (!diff.entries.empty()) {
          for (auto& e : diff.entries)
            rep << it.key() << ": " << e.where << " " << e.detail << "\n";
          fail = true;
        } else {
          rep << it.key() << ": digest differs, numeric content within tolerance\n";
        }
      } else {
        rep << it.key() << ": digest mismatch\n";
        fail = true;
      }
    }
  }
  for (auto it = got.begin(); it != got.end(); ++it)
    if (!want.contains(it.key())) {
      rep << "unexpected artifact: " << it.key() << "\n";
      identical = false;
      fail = true;
    }
  if (identical) rep << "bit-identical: all " << want.size() << " artifacts\n";
  report_out = rep.str();
  return fail ? kExitCheckFailure : kExitPass;
}

// ----------------------------------------------------------------- dispatch

inline int run_subcommand(const RunConfig& cfg) {
  const std::string& s = cfg.subcommand;
  if (s == "verify-calculus") return run_verify_calculus(cfg);
  if (s == "spectrum") return run_spectrum(cfg);
  if (s == "sweep") return run_sweep(cfg);
  if (s == "perturb") return run_perturb(cfg);
  if (s == "project") return run_project(cfg);
  if (s == "probe") return run_probe(cfg);
  if (s == "simulate") return run_simulate(cfg);
  if (s == "golden") return run_golden(cfg);
  throw DegenerateInput("unknown subcommand: " + s);
}

}  // namespace cli
}  // namespace kbm
