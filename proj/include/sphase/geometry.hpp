#pragma once

#include "sphase/mesh.hpp"

#include <functional>
#include <optional>

namespace sphase {

// Prescribed normal evolution. The preset supplies the raw normal velocity;
// the inextensibility projection is applied on top of it for every slice.
struct GeometryPreset {
  enum class Kind { StationarySphere, OscillatingHarmonicSphere, CustomNormalField };

  Kind kind = Kind::StationarySphere;
  double amplitude = 0.0;   // eps
  double frequency = 1.0;   // omega_g
  double radius = 1.0;      // R0
  int l = 2, m = 0;         // harmonic indices

  // Hook for CustomNormalField; a bounded smooth default is installed by
  // the config layer when unset.
  std::function<double(const Vec3&, double)> custom_vn;

  double raw_normal_velocity(const Vec3& x, double t) const;

  // True when every slice of the evolution is the round sphere, so normals
  // and curvatures have closed forms consistent with the vertex positions.
  bool analytic_sphere() const { return kind == Kind::StationarySphere; }
};

// One time slice of the evolving surface with all derived geometry.
struct SurfaceState {
  const TriMesh* mesh = nullptr;
  double t = 0.0;

  std::vector<Vec3> positions;   // per vertex
  std::vector<Vec3> normal;      // per vertex, unit, outward
  std::vector<Mat3> projector;   // per vertex P = I - n n^T
  VecX mean_curv;                // H, sum of principal curvatures
  VecX gauss_curv;               // K, angle defect / lumped area
  std::vector<Mat3> weingarten;  // per face, symmetric tangential
  VecX v_n;                      // inextensibility-corrected normal velocity

  // Cached per-face data used throughout assembly.
  std::vector<double> face_area;
  std::vector<Vec3> face_normal;               // unit, outward
  std::vector<std::array<Vec3, 3>> face_grad;  // in-plane P1 hat gradients
  VecX vertex_area;                            // lumped (barycentric) areas
  VecX curv_area;                              // mixed (Voronoi) areas for curvature
  double total_area = 0.0;

  int n_vertices() const { return mesh->n_vertices(); }
  int n_faces() const { return mesh->n_faces(); }
  Mat3 face_proj(int f) const {
    return Mat3::Identity() - face_normal[f] * face_normal[f].transpose();
  }
};

// ---- discrete geometry primitives (always available, preset-independent) ----

// Angle-weighted outward vertex normals.
std::vector<Vec3> vertex_normals_angle_weighted(const TriMesh& mesh,
                                                const std::vector<Vec3>& positions);

// Lumped (barycentric) vertex areas; also returns face areas/normals/gradients.
struct FaceGeometry {
  std::vector<double> area;
  std::vector<Vec3> normal;
  std::vector<std::array<Vec3, 3>> grad;
  VecX vertex_area;
  double total_area;
};
FaceGeometry face_geometry(const TriMesh& mesh, const std::vector<Vec3>& positions);

// Mixed (Voronoi, obtuse-clamped) vertex areas; the standard normalization
// for pointwise-accurate discrete curvatures.
VecX mixed_vertex_area(const TriMesh& mesh, const std::vector<Vec3>& positions);

// H from the cotangent mean-curvature vector: H_v = (K x)_v . n_v / m_v.
// Sign convention: outward normals, unit sphere gives H = +2. The same
// vertex areas must be used wherever the constraint integral of H v_n is
// formed; that pairing makes the discrete area exactly stationary under the
// projected normal velocity.
VecX cotan_mean_curvature(const TriMesh& mesh, const std::vector<Vec3>& positions,
                          const std::vector<Vec3>& normals, const VecX& vertex_area);

// K from the angle defect; defects sum exactly to 4*pi on genus-0 meshes
// (integrate against the same areas used for the normalization).
VecX angle_defect_gauss_curvature(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                  const VecX& vertex_area);

// Per-face shape operator: symmetrized projected gradient of the interpolated
// vertex normal field (least-squares P1 fit over the face).
std::vector<Mat3> face_weingarten(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                  const std::vector<Vec3>& normals);

// ---- surface state ----

// Builds the slice. When the preset has analytic sphere geometry and
// use_analytic is true, normals/H/K/Weingarten come from closed forms;
// otherwise from the discrete primitives above. v_n is sampled from the
// preset and inextensibility-corrected.
SurfaceState compute_surface_state(const TriMesh& mesh, std::vector<Vec3> positions,
                                   double t, const GeometryPreset& preset,
                                   bool use_analytic = true);

// H-weighted L2 projection removing the integral-constraint violation:
// returns raw - (sum m H raw / sum m H^2) * H with the curvature vertex
// areas as weights, so the quadrature of H * v_n vanishes identically and
// the polyhedral area is exactly stationary under v_n * n.
VecX enforce_inextensibility(const SurfaceState& state, const VecX& raw_vn);

// Classical RK4 step of x' = v_n(x,t) n(x,t); normals and the corrected v_n
// are recomputed at every stage. Throws GeometryError when the mesh quality
// drops below min_quality.
std::vector<Vec3> advance_positions(const SurfaceState& state, const GeometryPreset& preset,
                                    double dt, double min_quality = 0.2);

}  // namespace sphase
