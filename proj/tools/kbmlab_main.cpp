// Command-line front end for the kinetic-motion spectral laboratory.
// Exit codes: 0 pass, 1 usage/config error, 2 check failure, 3 numerical
// failure.

#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "kbm/cli.hpp"

using namespace kbm;

int main(int argc, char** argv) {
  CLI::App app{"kbmlab: spectra and sample paths of the noisy geodesic "
               "generator on the torus cosphere bundle"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path, out_override, compare_dir;
  double cmp_abs = 1e-12, cmp_rel = 1e-12;

  const char* names[] = {"spectrum", "sweep",    "perturb",
                         "project",  "probe",    "simulate",
                         "verify-calculus", "golden"};
  std::vector<CLI::App*> subs;
  for (auto* n : names) {
    auto* sc = app.add_subcommand(n);
    sc->add_option("--config", config_path, "JSON run configuration");
    sc->add_option("--out", out_override, "output directory override");
    if (std::string(n) == "golden") {
      sc->add_option("--compare", compare_dir,
                     "golden directory to compare against");
      sc->add_option("--abstol", cmp_abs, "absolute tolerance for comparison");
      sc->add_option("--reltol", cmp_rel, "relative tolerance for comparison");
    }
    subs.push_back(sc);
  }

  CLI11_PARSE(app, argc, argv);
  std::string sub = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      auto parsed = parse_config(read_file(config_path));
      if (!parsed.ok()) {
        for (auto& e : parsed.errors)
          std::fprintf(stderr, "config: %s\n", e.c_str());
        return kExitUsage;
      }
      cfg = *parsed.config;
    } else if (sub != "golden" && sub != "verify-calculus") {
      std::fprintf(stderr, "%s needs --config\n", sub.c_str());
      return kExitUsage;
    }
    cfg.subcommand = sub;
    if (!out_override.empty()) cfg.out_dir = out_override;

    if (sub == "golden" && !compare_dir.empty()) {
      std::string report;
      int rc = cli::golden_compare_dirs(cfg.out_dir, compare_dir, cmp_abs,
                                        cmp_rel, report);
      std::fputs(report.c_str(), stdout);
      return rc;
    }
    return cli::run_subcommand(cfg);
  } catch (const DegenerateInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fatal: %s\n", e.what());
    return kExitNumerical;
  }
}
