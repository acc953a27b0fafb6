#pragma once

#include "sphase/field.hpp"

namespace sphase {

// Discrete surface Piola transform between two slices sharing connectivity.
//
// Per face: D is the affine map taking the reference face's edge vectors to
// the current face's, annihilating the reference normal; J the area ratio;
// A = J^-1 D + J n_t (x) n_0 (unit determinant, acts as J^-1 D on tangents);
// A^-1 = J D^- + J^-1 n_0 (x) n_t.
//
// Per vertex: the area-weighted average of incident-face A matrices, projected
// to respect the tangent/normal splitting at the vertex and inverted exactly,
// so pull(push(f)) = f to machine precision on tangential fields.
struct FlowFrame {
  // per face
  std::vector<Mat3> D, Dminus, A, Ainv;
  VecX J, Jinv;
  std::vector<Vec3> n0, nt;
  // per vertex
  std::vector<Mat3> vertex_A, vertex_Ainv;
  VecX vertex_J;
};

FlowFrame compute_flow_frame(const TriMesh& mesh, const std::vector<Vec3>& pos0,
                             const std::vector<Vec3>& pos_t, const SurfaceState& state0,
                             const SurfaceState& state_t);

// Pushforward of a tangential vector field from the reference slice to the
// current one. Throws ContractViolation when the input exceeds the tangency
// tolerance (relative to the field's max magnitude).
Field piola_push(const FlowFrame& frame, const Field& field0, const SurfaceState& state0,
                 double tangency_tol = 1e-6);

// Inverse transform, current slice back to the reference slice.
Field piola_pull(const FlowFrame& frame, const Field& field_t, const SurfaceState& state_t,
                 double tangency_tol = 1e-6);

}  // namespace sphase
