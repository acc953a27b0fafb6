#include "sphase/projector.hpp"

namespace sphase {

SliceOps SliceOps::build(const SurfaceState& state) {
  SliceOps ops;
  ops.M = assemble_mass(state, 1.0, Arity::Scalar);
  ops.Ml = assemble_mass(state, 1.0, Arity::Scalar, /*lumped=*/true);
  ops.K = assemble_stiffness(state, 1.0);
  ops.Mvec = assemble_mass(state, 1.0, Arity::Vector3);
  ops.Mvec_l = assemble_mass(state, 1.0, Arity::Vector3, /*lumped=*/true);
  ops.B = assemble_div(state);
  ops.G = assemble_grad_coupling(state);
  ops.ones = VecX::Ones(state.n_vertices());
  ops.pressure_gauge = ops.Ml.mat * ops.ones;  // int q_i
  return ops;
}

LiftResult harmonic_lift(const SurfaceState& state, const SliceOps& ops,
                         const SolveOptions& opts) {
  const int nv = state.n_vertices();
  VecX forcing(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) { forcing[v] = state.mean_curv[v] * state.v_n[v]; });

  // Solvability: the inextensibility projection zeroes the curvature-area
  // quadrature of H v_n; fail loudly if a caller bypassed it.
  double compat = 0, scale = 1e-30;
  for (int v = 0; v < nv; ++v) {
    compat += state.curv_area[v] * forcing[v];
    scale += state.curv_area[v] * std::abs(forcing[v]);
  }
  if (std::abs(compat) > 1e-8 * std::max(1.0, scale))
    throw PhysicsError("harmonic_lift: compatibility integral of H v_n = " +
                       std::to_string(compat) + " (inextensibility not enforced?)");

  VecX rhs = ops.Ml.mat * forcing;
  rhs -= (ops.ones.dot(rhs) / ops.ones.dot(ops.pressure_gauge)) * ops.pressure_gauge;

  std::vector<VecX> ns = {ops.ones};
  VecX Pi = solve_linear(ops.K, rhs, opts, &ns);
  // gauge: mean-zero in the lumped inner product
  Pi.array() -= ops.pressure_gauge.dot(Pi) / state.total_area;

  LiftResult out;
  out.u_hat = recover_gradient(state, Pi, /*project=*/true);
  out.Pi = std::move(Pi);
  return out;
}

ProjectionResult helmholtz_project(const SurfaceState& state, const SliceOps& ops,
                                   const Field& field, const SolveOptions& opts) {
  if (field.arity != Arity::Vector3)
    throw ContractViolation("helmholtz_project: vector field expected");
  const int nv = state.n_vertices();

  // Normal equations of the recovered-gradient subtraction: with the lumped
  // recovery R = Ml^-1 G^T, the operator S = G Ml^-1 G^T makes
  // f - R(grad p) exactly M-orthogonal to every recovered gradient, i.e.
  // int (f - R grad p) . grad q = 0 for all P1 q.
  VecX mlv = ops.Mvec_l.mat.diagonal();
  SpMat Gt = ops.G.mat.transpose();
  SpMat S = ops.G.mat * mlv.cwiseInverse().asDiagonal() * Gt;
  SparseOperator Sop;
  Sop.mat = std::move(S);
  Sop.symmetric = true;
  Sop.spd = false;  // kernel: constants

  VecX rhs = ops.G.mat * field.coeffs;
  std::vector<VecX> ns = {ops.ones};
  VecX p = solve_linear(Sop, rhs, opts, &ns);
  p.array() -= ops.pressure_gauge.dot(p) / state.total_area;

  VecX grad_rep = mlv.cwiseInverse().asDiagonal() * (Gt * p);
  ProjectionResult out;
  out.div_free = Field::vector(field.coeffs - grad_rep, field.tangential);
  out.potential = std::move(p);

  (void)nv;
  return out;
}

Field pullback_gradient(const VecX& p0, const FlowFrame& frame, const SurfaceState& state0) {
  const std::vector<Vec3> g0 = face_gradients(state0, p0);
  const int nf = state0.n_faces();
  std::vector<Vec3> face_val(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    face_val[f] = frame.Ainv[f] * (frame.Dminus[f].transpose() * g0[f]);
  });
  Field out = Field::vector_zero(state0.n_vertices(), true);
  parallel_for(state0.n_vertices(), [&](std::ptrdiff_t v) {
    Vec3 acc = Vec3::Zero();
    for (int f : state0.mesh->vertex_faces[v]) acc += (state0.face_area[f] / 3.0) * face_val[f];
    acc /= state0.vertex_area[v];
    out.set(static_cast<int>(v), state0.projector[v] * acc);
  });
  return out;
}

}  // namespace sphase
