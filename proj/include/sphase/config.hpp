#pragma once

#include "sphase/geometry.hpp"
#include "sphase/physics.hpp"

#include <string>

namespace sphase {

// Fully resolved run parameters. String-valued entries keep the exact
// config-file vocabulary so the manifest echo re-parses to the same struct.
struct SimConfig {
  // [geometry]
  std::string preset = "stationary_sphere";
  int subdivisions = 4;
  double radius = 1.0;
  double amplitude = 0.0;
  double frequency = 1.0;
  int harmonic_l = 2;
  int harmonic_m = 0;

  // [material]
  double rho1 = 1.0;
  double rho2 = 1.0;
  std::string nu_profile = "constant";
  double nu0 = 1.0;
  double nu1 = 0.0;
  double nu_floor = 1e-3;
  double mobility = 1.0;  // fixed; validated

  // [potential]
  std::string potential = "regularized_log";
  double theta = 1.0;
  double theta_c = 2.0;
  double delta_reg = 1e-4;
  int taylor_order = 4;

  // [numerics]
  double dt = 1e-3;
  double t_end = 0.1;
  double dt_max = 0.1;
  double omega = 1.0;
  int picard_max = 2;
  double picard_tol = 1e-8;
  bool picard_strict = false;
  double penalty_beta = 0.0;  // 0 -> 100 * nu_max / h
  double stab_gamma = 0.1;
  std::string solver = "auto";
  double solver_tol = 1e-10;
  int solver_max_iter = 5000;
  double min_quality = 0.2;
  bool monitor_separation = true;
  double delta0 = 0.1;
  double tangency_tol = 1e-6;
  std::string phi0 = "constant:0";
  std::string v0 = "zero";

  // [output]
  int cadence = 10;
  bool vtk = true;

  // Derived views.
  GeometryPreset geometry_preset() const;
  MaterialSpec material_spec() const;
  PotentialSpec potential_spec() const;
  SolveOptions solve_options() const;
  int n_steps() const { return static_cast<int>(std::floor(t_end / dt + 1e-9)); }

  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Initial data evaluated on a slice from the config micro-expressions:
//   phi0: constant:<v> | harmonic:<l>:<m>:<amp>[:<offset>]
//   v0:   zero | rotation:<ax>,<ay>,<az>:<amp> | harmonic_grad:<l>:<m>:<amp>
VecX eval_phi0(const SimConfig& cfg, const SurfaceState& state);
Field eval_v0(const SimConfig& cfg, const SurfaceState& state);

}  // namespace sphase
