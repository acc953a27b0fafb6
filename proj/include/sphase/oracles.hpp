#pragma once

#include "sphase/stepper.hpp"

namespace sphase {

// Result of one independent check across mesh levels. The observed order is
// the least-squares slope of log(error) against log(mean edge length); a
// report passes when the max error stays under the threshold and, when a
// positive order is declared, the observed order is within 0.3 of it.
struct OracleReport {
  std::string name;
  std::vector<int> levels;
  std::vector<double> h;
  std::vector<double> errors;
  double observed_order = 0.0;
  double declared_order = 0.0;  // 0: no order requirement
  double threshold = 0.0;       // applies to the max error over levels
  bool passed = false;
  std::string note;

  void finalize();
};

// Laplace-Beltrami eigenvalues l(l+1), l = 1..3, and the biharmonic chain
// (stiffness o lumped-mass^-1 o stiffness) against l^2(l+1)^2, l = 1..2,
// via Rayleigh quotients of interpolated harmonics on the unit sphere.
std::vector<OracleReport> spectral_oracle(int level_min, int level_max);

// Central finite differences of the discrete flow map against the per-face
// differential D. Vertices are perturbed along reference tangent directions
// and the whole advance is re-run.
OracleReport fd_flow_oracle(const GeometryPreset& preset, double t, double epsilon, int level,
                            int n_steps, int n_samples);
// Same check against the closed-form radial map pos_t = R pos0.
OracleReport fd_flow_oracle_radial(double R, double epsilon, int level);

// Discrete check of the pulled-back Laplacian identity: Hessian term
// contracted with D^- D^-T plus the gradient term against the direct
// Laplacian of the transported function on the current slice.
OracleReport pullback_laplacian_check(const GeometryPreset& preset, double t, int level_min,
                                      int level_max, int l = 1, int m = 0, double dt = 5e-3);
OracleReport pullback_laplacian_radial(double R, int level_min, int level_max);

// Weak residual of P div(grad^T v) = K v for divergence-free rotation fields
// on the sphere of the given radius (discrete angle-defect K).
OracleReport gaussian_identity_check(int level_min, int level_max, double radius = 1.0);

// Weak-divergence residual of the pushforward of a discretely
// divergence-free rotation field to an evolved slice, under refinement.
OracleReport divergence_preservation_check(const GeometryPreset& preset, double t,
                                           int level_min, int level_max, double dt = 5e-3);

// Harmonic lift accuracy: v_n = z/2 forcing on the unit sphere, Pi = z/2.
OracleReport harmonic_lift_oracle(int level_min, int level_max);

// Named suite used by the verify CLI subcommand:
// geometry | laplace | stokes | cahn-hilliard | pullback | all.
std::vector<OracleReport> run_suite(const std::string& name);

}  // namespace sphase
