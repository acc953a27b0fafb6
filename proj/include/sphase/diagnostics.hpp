#pragma once

#include "sphase/stepper.hpp"

namespace sphase {

// One diagnostics record per output step; serialized by the CSV writer with
// exactly these columns in this order.
struct DiagRow {
  double t = 0;
  double mass = 0;                 // lumped integral of phi
  double area = 0;                 // |Gamma(t)|
  double energy = 0;               // kinetic + potential + gradient, exactly
  double kinetic = 0;              // int rho/2 |v_total + v_n n|^2
  double potential = 0;            // lumped int Psi(phi)
  double gradient = 0;             // 1/2 phi^T K phi
  double max_abs_phi = 0;
  double separation_margin = 0;    // 1 - max|phi|
  double div_residual = 0;         // Stokes constraint-row residual (relative)
  double constraint_residual = 0;  // lumped integral of H v_n
  double tangency_max = 0;         // max_v |V . n_v|
  double picard_iters = 0;
  double wall_time = 0;            // seconds spent on the step
};

struct EnergyParts {
  double kinetic = 0, potential = 0, gradient = 0;
  double total() const { return kinetic + potential + gradient; }
};

EnergyParts energy(const StepState& s, const SliceOps& ops, const MaterialSpec& mat,
                   const PotentialSpec& pot);

struct Residuals {
  double div_residual = 0;
  double constraint_residual = 0;
  double tangency_max = 0;
};

Residuals residuals(const StepState& s, const SliceOps& ops);

DiagRow make_diag_row(const StepState& s, const SliceOps& ops, const MaterialSpec& mat,
                      const PotentialSpec& pot, double wall_time);

}  // namespace sphase
