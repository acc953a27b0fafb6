#pragma once

#include "sphase/fem.hpp"

// Straight-line serial implementations of the hot kernels. They are the
// reference the parallel versions are tested against and the baseline for the
// benchmark target; they share no loop machinery with the parallel path.
namespace sphase::serial {

SparseOperator assemble_mass(const SurfaceState& state, const Weight& w, Arity arity,
                             bool lumped = false);
SparseOperator assemble_stiffness(const SurfaceState& state, const Weight& w);
SparseOperator assemble_deformation(const SurfaceState& state, const Weight& viscosity,
                                    double penalty_beta);
double integrate_lumped(const SurfaceState& state, const VecX& scalar);
Field recover_gradient(const SurfaceState& state, const VecX& scalar, bool project = true);

}  // namespace sphase::serial
