#pragma once

#include "sphase/fem.hpp"
#include "sphase/piola.hpp"

namespace sphase {

// Per-slice operators shared by the divergence machinery and the stepper.
struct SliceOps {
  SparseOperator M;        // scalar mass
  SparseOperator Ml;       // scalar mass, lumped
  SparseOperator K;        // scalar stiffness
  SparseOperator Mvec;     // vector mass
  SparseOperator Mvec_l;   // vector mass, lumped
  SparseOperator B;        // divergence coupling
  SparseOperator G;        // gradient coupling
  VecX ones;               // scalar all-ones (stiffness kernel)
  VecX pressure_gauge;     // int q_i, Lagrange row for mean-zero fields

  static SliceOps build(const SurfaceState& state);
};

// Harmonic lift: solve -Lap_Gamma Pi = H v_n with mean-zero gauge, then
// u_hat = tangential recovery of grad Pi.
struct LiftResult {
  VecX Pi;       // mean-zero scalar potential
  Field u_hat;   // tangential lift velocity
};
LiftResult harmonic_lift(const SurfaceState& state, const SliceOps& ops,
                         const SolveOptions& opts = {});

// Leray decomposition on the slice: field = div_free + recover(grad p) with
// div_free exactly weak-divergence-free (int div_free . grad q = 0 for all
// P1 q, up to solver tolerance) and p mean-zero.
struct ProjectionResult {
  Field div_free;
  VecX potential;
};
ProjectionResult helmholtz_project(const SurfaceState& state, const SliceOps& ops,
                                   const Field& field, const SolveOptions& opts = {});

// Pullback gradient: per reference-slice face, (A^-1 D^-T) grad_0 p, recovered
// to vertices. Identity frame reduces to the plain recovered gradient.
Field pullback_gradient(const VecX& p0, const FlowFrame& frame, const SurfaceState& state0);

}  // namespace sphase
