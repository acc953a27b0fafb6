#pragma once

#include "sphase/projector.hpp"

namespace sphase {

// Double-well potential. The logarithmic (Flory-Huggins) well
//   Psi(s) = (theta/2)[(1+s)ln(1+s) + (1-s)ln(1-s)] - (theta_c/2) s^2
// is kept exactly on [-1+delta_reg, 1-delta_reg] and continued outside by the
// degree-4 Taylor polynomial of its convex part at the matching points, which
// keeps the function C^4 on all of R and the convex part convex.
struct PotentialSpec {
  enum class Kind { RegularizedLog, Quartic };
  Kind kind = Kind::RegularizedLog;
  double theta = 1.0;
  double theta_c = 2.0;
  double delta_reg = 1e-4;
  int taylor_order = 4;  // 2 selects the plain C^2 extension
};

double psi_eval(const PotentialSpec& spec, double s);
double psi_d1(const PotentialSpec& spec, double s);
double psi_d2(const PotentialSpec& spec, double s);
double psi_d3(const PotentialSpec& spec, double s);

// Convex-concave split: Psi = Psi_convex + Psi_concave with
// Psi_convex'' >= 0 everywhere and Psi_concave quadratic.
double psi_convex_eval(const PotentialSpec& spec, double s);
double psi_convex_d1(const PotentialSpec& spec, double s);
double psi_convex_d2(const PotentialSpec& spec, double s);
double psi_concave_d1(const PotentialSpec& spec, double s);

// Densities and viscosity. rho interpolates affinely between the pure-phase
// densities; nu is floored at nu_floor with a clamp-event count.
struct MaterialSpec {
  enum class NuProfile { Constant, Affine, SmoothInterp };
  double rho1 = 1.0, rho2 = 1.0;
  NuProfile nu_profile = NuProfile::Constant;
  double nu0 = 1.0;   // constant value / affine base / value at phi = -1
  double nu1 = 0.0;   // affine slope / value at phi = +1
  double nu_floor = 1e-3;
  // mobility is fixed to 1

  bool matched() const { return rho1 == rho2; }
  double rho_max() const { return std::max(rho1, rho2); }
  double nu_max() const;
};

double density_scalar(const MaterialSpec& mat, double s);
double viscosity_scalar(const MaterialSpec& mat, double s, long* clamp_events = nullptr);

VecX density(const MaterialSpec& mat, const VecX& phi);
VecX viscosity(const MaterialSpec& mat, const VecX& phi, long* clamp_events = nullptr);

// mu = -Lap phi + Psi'(phi) in the mixed lumped realization
// mu = Ml^-1 K phi + Psi'(phi).
Field chemical_potential(const SurfaceState& state, const SliceOps& ops, const VecX& phi,
                         const PotentialSpec& spec);

// J_rho = -((rho1 - rho2)/2) * recovered tangential gradient of mu.
Field flux_jrho(const SurfaceState& state, const VecX& mu, const MaterialSpec& mat);

// Weak Korteweg force: rhs_i = + int (grad phi (x) grad phi) : grad psi_i
// (the closed surface has no boundary term).
VecX korteweg_rhs(const SurfaceState& state, const VecX& phi);

}  // namespace sphase
