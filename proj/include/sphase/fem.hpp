#pragma once

#include "sphase/field.hpp"

#include <optional>

namespace sphase {

// Sparse operator with the bookkeeping the solvers need.
struct SparseOperator {
  SpMat mat;
  bool symmetric = false;
  bool spd = false;

  int rows() const { return static_cast<int>(mat.rows()); }
  int cols() const { return static_cast<int>(mat.cols()); }
};

// Scalar weight: either a constant or a P1 scalar field evaluated at
// quadrature points.
struct Weight {
  double constant = 1.0;
  const VecX* field = nullptr;  // per-vertex values, optional

  Weight() = default;
  Weight(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  explicit Weight(const VecX& f) : field(&f) {}
  double at(int v) const { return constant * (field ? (*field)[v] : 1.0); }
};

// ---------------------------------------------------------------------------
// Assembly. All forms use the 3-point edge-midpoint rule (degree 2, exact for
// the unweighted P1 products) on flat triangles. Element loops run in
// parallel into per-face buffers merged in face order, so entries are
// independent of the thread count.
// ---------------------------------------------------------------------------

// Mass: entries int w psi_i psi_j. Throws PhysicsError when w <= weight_min
// somewhere and weight_min > 0 (density role).
SparseOperator assemble_mass(const SurfaceState& state, const Weight& w, Arity arity,
                             bool lumped = false, double weight_min = 0.0);

// Cotangent stiffness with per-face multiplicative weight:
// entries int w grad psi_i . grad psi_j (per-face constant gradients, the
// area-normalized form of the cotangent formula).
SparseOperator assemble_stiffness(const SurfaceState& state, const Weight& w,
                                  Arity arity = Arity::Scalar);

// Deformation form 2 int nu E_S(psi_i):E_S(psi_j) + beta int (psi_i.n)(psi_j.n),
// E_S the symmetrized projected gradient on each face, penalty normals
// interpolated from vertex normals. Viscosity must stay >= nu_floor.
SparseOperator assemble_deformation(const SurfaceState& state, const Weight& viscosity,
                                    double penalty_beta, double nu_floor = 0.0);

// Divergence coupling B: rows scalar test q_i, cols vector trial psi_(j,c);
// entries int q_i div_Gamma psi_(j,c).
SparseOperator assemble_div(const SurfaceState& state);

// Gradient coupling G: entries int (grad q_i)_c psi_(j,c)  (i.e. (G f)_i =
// int f . grad q_i for a vector field f).
SparseOperator assemble_grad_coupling(const SurfaceState& state);

// Advection: entries int coeff (wind . grad psi_j) psi_i, gradients projected
// tangentially (vector arity couples components through the face projector).
SparseOperator assemble_advection(const SurfaceState& state, const Field& wind,
                                  const Weight& coeff, Arity arity);

// Mass-type operator with a per-face matrix coefficient:
// entries int w psi_i . (C_f psi_j). Used for the curvature and lift-gradient
// couplings in the momentum equation.
SparseOperator assemble_tensor_mass(const SurfaceState& state,
                                    const std::vector<Mat3>& face_matrix, const Weight& w);

// ---------------------------------------------------------------------------
// Fieldwise helpers.
// ---------------------------------------------------------------------------

// Per-face constant gradient of a P1 scalar field.
std::vector<Vec3> face_gradients(const SurfaceState& state, const VecX& scalar);

// Per-face projected gradient P grad_hat(u) P of a P1 vector field.
std::vector<Mat3> face_vector_gradients(const SurfaceState& state, const Field& u);

// Area-weighted face-gradient recovery to vertices (lumped-mass consistent),
// tangentially projected per vertex when project = true.
Field recover_gradient(const SurfaceState& state, const VecX& scalar, bool project = true);

// int_Gamma of a P1 scalar (lumped quadrature).
double integrate_lumped(const SurfaceState& state, const VecX& scalar);

// Midpoint-rule integral of a callable sampled at quadrature points:
// f(face, point, interpolated vertex-data index weights).
double integrate_midpoint(const SurfaceState& state,
                          const std::function<double(int, const Vec3&, const Vec3&)>& f);

// L2 norms. For vector fields the 3 components are interleaved.
double l2_norm(const SurfaceState& state, const Field& f);

// Weak divergence residual of a vector field in the natural dual norm:
// ||q -> int q div_Gamma w||_{H^-1} / ||w||_{L2}, realized as
// sqrt(r^T (K + M)^-1 r) with r = B w.
double weak_divergence_residual(const SurfaceState& state, const Field& w);

// ---------------------------------------------------------------------------
// Linear solves.
// ---------------------------------------------------------------------------

enum class SolveMethod { Auto, DirectLDLT, DirectLU, CG, MINRES };

struct SolveOptions {
  SolveMethod method = SolveMethod::Auto;
  double tol = 1e-10;
  int max_iter = 5000;
  // Unknown-count threshold above which Auto switches from direct to
  // iterative (diagonally preconditioned).
  int direct_limit = 50000;
};

// Solves op.mat x = rhs. For singular systems pass the nullspace vectors
// (e.g. constants for gauge-free Poisson problems): direct solves are
// augmented with Lagrange multipliers, iterative solves deflate the rhs and
// project the solution. Throws SolverError with the residual history on
// breakdown.
VecX solve_linear(const SparseOperator& op, const VecX& rhs, const SolveOptions& opts = {},
                  const std::vector<VecX>* nullspace = nullptr);

}  // namespace sphase
