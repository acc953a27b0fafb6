#include "sphase/io.hpp"
#include "sphase/oracles.hpp"

#include <CLI11.hpp>

#include <cstdio>

namespace sphase {

int cli_main(int argc, char** argv) {
  CLI::App app{"Two-phase flow simulator on prescribed evolving closed surfaces"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", suite = "all";
  CLI::App* run = app.add_subcommand("run", "Run a simulation from a config file");
  run->add_option("--config", config_path, "TOML config file")->required();
  run->add_option("--out", out_dir, "Output directory");

  CLI::App* verify = app.add_subcommand("verify", "Run an independent verification suite");
  verify->add_option("--suite", suite,
                     "geometry | laplace | stokes | cahn-hilliard | pullback | all");

  CLI::App* presets = app.add_subcommand("presets", "List geometry presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      const SimConfig cfg = parse_config(config_path);
      return run_simulation(cfg, out_dir);
    }
    if (verify->parsed()) {
      const std::vector<OracleReport> reports = run_suite(suite);
      bool ok = true;
      for (const auto& r : reports) {
        double emax = 0;
        for (double e : r.errors) emax = std::max(emax, e);
        std::printf("%-42s %s  max_err %.3e  threshold %.3e", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL", emax, r.threshold);
        if (r.declared_order > 0)
          std::printf("  order %.2f (declared %.2f)", r.observed_order, r.declared_order);
        std::printf("\n");
        if (!r.note.empty()) std::printf("    %s\n", r.note.c_str());
        ok = ok && r.passed;
      }
      std::printf("verify %s: %s\n", suite.c_str(), ok ? "PASS" : "FAIL");
      return ok ? 0 : 3;
    }
    if (presets->parsed()) {
      std::printf("stationary_sphere            radius R0; v_n = 0\n");
      std::printf("oscillating_harmonic_sphere  radius R0, amplitude eps, frequency omega_g,\n");
      std::printf("                             harmonic indices (l, m), 0 <= l <= 3;\n");
      std::printf("                             raw v_n = eps R0 omega_g cos(omega_g t) Y_lm\n");
      std::printf("custom_normal_field          amplitude eps, frequency omega_g; raw v_n from\n");
      std::printf("                             a user hook (default: zonal cubic profile)\n");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace sphase
