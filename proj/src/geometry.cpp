#include "sphase/geometry.hpp"

#include <cmath>

namespace sphase {

double GeometryPreset::raw_normal_velocity(const Vec3& x, double t) const {
  switch (kind) {
    case Kind::StationarySphere:
      return 0.0;
    case Kind::OscillatingHarmonicSphere:
      return amplitude * radius * frequency * std::cos(frequency * t) *
             solid_harmonic(l, m, x);
    case Kind::CustomNormalField:
      if (!custom_vn) throw ConfigError("custom_normal_field preset without a velocity hook");
      return amplitude * custom_vn(x, t);
  }
  return 0.0;
}

std::vector<Vec3> vertex_normals_angle_weighted(const TriMesh& mesh,
                                                const std::vector<Vec3>& positions) {
  const int nv = mesh.n_vertices();
  std::vector<Vec3> normals(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    Vec3 acc = Vec3::Zero();
    for (int f : mesh.vertex_faces[v]) {
      const auto& fc = mesh.faces[f];
      int k = (fc[0] == v) ? 0 : (fc[1] == v ? 1 : 2);
      const Vec3 p = positions[fc[k]];
      const Vec3 e1 = positions[fc[(k + 1) % 3]] - p;
      const Vec3 e2 = positions[fc[(k + 2) % 3]] - p;
      Vec3 n = e1.cross(e2);
      const double nn = n.norm();
      if (nn <= 0.0) throw GeometryError("degenerate face " + std::to_string(f));
      const double angle =
          std::atan2(nn, e1.dot(e2));  // robust interior angle at v
      acc += (angle / nn) * n;
    }
    normals[v] = acc.normalized();
  });
  return normals;
}

FaceGeometry face_geometry(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  const int nf = mesh.n_faces();
  const int nv = mesh.n_vertices();
  FaceGeometry g;
  g.area.resize(nf);
  g.normal.resize(nf);
  g.grad.resize(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    const Vec3 a = positions[fc[0]], b = positions[fc[1]], c = positions[fc[2]];
    const Vec3 cr = (b - a).cross(c - a);
    const double two_area = cr.norm();
    if (!(two_area > 0)) throw GeometryError("degenerate face " + std::to_string(f));
    g.area[f] = 0.5 * two_area;
    g.normal[f] = cr / two_area;
    // In-plane hat gradients: grad lambda_i = n x e_opp / (2 area), with
    // e_opp the edge opposite vertex i, oriented CCW.
    g.grad[f][0] = g.normal[f].cross(c - b) / two_area;
    g.grad[f][1] = g.normal[f].cross(a - c) / two_area;
    g.grad[f][2] = g.normal[f].cross(b - a) / two_area;
  });
  g.vertex_area = VecX::Zero(nv);
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) g.vertex_area[mesh.faces[f][k]] += g.area[f] / 3.0;
  g.total_area = std::accumulate(g.area.begin(), g.area.end(), 0.0);
  return g;
}

VecX mixed_vertex_area(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  const int nf = mesh.n_faces();
  std::vector<std::array<double, 3>> contrib(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    const Vec3 p[3] = {positions[fc[0]], positions[fc[1]], positions[fc[2]]};
    double cot[3], angle[3];
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = p[(k + 1) % 3] - p[k];
      const Vec3 e2 = p[(k + 2) % 3] - p[k];
      const double cross = e1.cross(e2).norm();
      cot[k] = e1.dot(e2) / cross;
      angle[k] = std::atan2(cross, e1.dot(e2));
    }
    const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
    int obtuse = -1;
    for (int k = 0; k < 3; ++k)
      if (angle[k] > 0.5 * M_PI) obtuse = k;
    for (int k = 0; k < 3; ++k) {
      if (obtuse >= 0) {
        contrib[f][k] = (k == obtuse) ? area / 2.0 : area / 4.0;
      } else {
        const double l1 = (p[(k + 1) % 3] - p[k]).squaredNorm();
        const double l2 = (p[(k + 2) % 3] - p[k]).squaredNorm();
        contrib[f][k] = (l1 * cot[(k + 2) % 3] + l2 * cot[(k + 1) % 3]) / 8.0;
      }
    }
  });
  VecX area = VecX::Zero(mesh.n_vertices());
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) area[mesh.faces[f][k]] += contrib[f][k];
  return area;
}

VecX cotan_mean_curvature(const TriMesh& mesh, const std::vector<Vec3>& positions,
                          const std::vector<Vec3>& normals, const VecX& vertex_area) {
  // (K_cot x)_v accumulated facewise; equals the gradient of total area at v.
  const int nf = mesh.n_faces();
  std::vector<std::array<Vec3, 3>> contrib(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    const Vec3 a = positions[fc[0]], b = positions[fc[1]], c = positions[fc[2]];
    const Vec3 cr = (b - a).cross(c - a);
    const double two_area = cr.norm();
    const Vec3 n = cr / two_area;
    const Vec3 g0 = n.cross(c - b) / two_area;
    const Vec3 g1 = n.cross(a - c) / two_area;
    const Vec3 g2 = n.cross(b - a) / two_area;
    const double area = 0.5 * two_area;
    const Vec3 gx[3] = {g0, g1, g2};
    for (int i = 0; i < 3; ++i) {
      Vec3 s = Vec3::Zero();
      for (int j = 0; j < 3; ++j) s += gx[i].dot(gx[j]) * positions[fc[j]];
      contrib[f][i] = area * s;
    }
  });
  VecX H = VecX::Zero(mesh.n_vertices());
  std::vector<Vec3> Kx(mesh.n_vertices(), Vec3::Zero());
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) Kx[mesh.faces[f][k]] += contrib[f][k];
  parallel_for(mesh.n_vertices(), [&](std::ptrdiff_t v) {
    H[v] = Kx[v].dot(normals[v]) / vertex_area[v];
  });
  return H;
}

VecX angle_defect_gauss_curvature(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                  const VecX& vertex_area) {
  const int nf = mesh.n_faces();
  std::vector<std::array<double, 3>> angles(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const Vec3 p = positions[fc[k]];
      const Vec3 e1 = positions[fc[(k + 1) % 3]] - p;
      const Vec3 e2 = positions[fc[(k + 2) % 3]] - p;
      angles[f][k] = std::atan2(e1.cross(e2).norm(), e1.dot(e2));
    }
  });
  VecX defect = VecX::Constant(mesh.n_vertices(), 2.0 * M_PI);
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) defect[mesh.faces[f][k]] -= angles[f][k];
  VecX K(mesh.n_vertices());
  parallel_for(mesh.n_vertices(), [&](std::ptrdiff_t v) { K[v] = defect[v] / vertex_area[v]; });
  return K;
}

std::vector<Mat3> face_weingarten(const TriMesh& mesh, const std::vector<Vec3>& positions,
                                  const std::vector<Vec3>& normals) {
  const int nf = mesh.n_faces();
  std::vector<Mat3> W(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    const Vec3 a = positions[fc[0]], b = positions[fc[1]], c = positions[fc[2]];
    const Vec3 cr = (b - a).cross(c - a);
    const double two_area = cr.norm();
    const Vec3 n = cr / two_area;
    const Vec3 g[3] = {n.cross(c - b) / two_area, n.cross(a - c) / two_area,
                       n.cross(b - a) / two_area};
    Mat3 grad_n = Mat3::Zero();  // rows: in-plane gradient of each component
    for (int k = 0; k < 3; ++k) grad_n += normals[fc[k]] * g[k].transpose();
    const Mat3 P = Mat3::Identity() - n * n.transpose();
    const Mat3 S = P * grad_n * P;
    W[f] = 0.5 * (S + S.transpose());
  });
  return W;
}

SurfaceState compute_surface_state(const TriMesh& mesh, std::vector<Vec3> positions,
                                   double t, const GeometryPreset& preset,
                                   bool use_analytic) {
  if (static_cast<int>(positions.size()) != mesh.n_vertices())
    throw GeometryError("compute_surface_state: position count mismatch");

  SurfaceState st;
  st.mesh = &mesh;
  st.t = t;
  st.positions = std::move(positions);

  FaceGeometry fg = face_geometry(mesh, st.positions);
  st.face_area = std::move(fg.area);
  st.face_normal = std::move(fg.normal);
  st.face_grad = std::move(fg.grad);
  st.vertex_area = std::move(fg.vertex_area);
  st.curv_area = mixed_vertex_area(mesh, st.positions);
  st.total_area = fg.total_area;

  const bool analytic = use_analytic && preset.analytic_sphere();
  const int nv = mesh.n_vertices();

  if (analytic) {
    const double R = preset.radius;
    st.normal.resize(nv);
    st.mean_curv.resize(nv);
    st.gauss_curv.resize(nv);
    parallel_for(nv, [&](std::ptrdiff_t v) {
      st.normal[v] = st.positions[v].normalized();
      st.mean_curv[v] = 2.0 / R;
      st.gauss_curv[v] = 1.0 / (R * R);
    });
    st.weingarten.resize(mesh.n_faces());
    parallel_for(mesh.n_faces(), [&](std::ptrdiff_t f) {
      st.weingarten[f] = st.face_proj(f) / R;
    });
  } else {
    st.normal = vertex_normals_angle_weighted(mesh, st.positions);
    st.mean_curv = cotan_mean_curvature(mesh, st.positions, st.normal, st.curv_area);
    st.gauss_curv = angle_defect_gauss_curvature(mesh, st.positions, st.curv_area);
    st.weingarten = face_weingarten(mesh, st.positions, st.normal);
  }

  st.projector.resize(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    st.projector[v] = Mat3::Identity() - st.normal[v] * st.normal[v].transpose();
  });

  VecX raw(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    raw[v] = preset.raw_normal_velocity(st.positions[v], t);
  });
  st.v_n = enforce_inextensibility(st, raw);
  return st;
}

VecX enforce_inextensibility(const SurfaceState& state, const VecX& raw_vn) {
  const int nv = state.n_vertices();
  const double hh = parallel_sum(nv, [&](std::ptrdiff_t v) {
    return state.curv_area[v] * state.mean_curv[v] * state.mean_curv[v];
  });
  if (!(hh > 1e-14 * state.total_area))
    throw GeometryError("enforce_inextensibility: integral of H^2 vanishes, "
                        "constraint not enforceable");
  const double hr = parallel_sum(nv, [&](std::ptrdiff_t v) {
    return state.curv_area[v] * state.mean_curv[v] * raw_vn[v];
  });
  const double coef = hr / hh;
  VecX out(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) { out[v] = raw_vn[v] - coef * state.mean_curv[v]; });
  return out;
}

std::vector<Vec3> advance_positions(const SurfaceState& state, const GeometryPreset& preset,
                                    double dt, double min_quality) {
  if (!(dt > 0)) throw ConfigError("advance_positions: dt must be positive");
  const TriMesh& mesh = *state.mesh;
  const int nv = state.n_vertices();

  auto velocity = [&](const std::vector<Vec3>& pos, double time) {
    SurfaceState s = compute_surface_state(mesh, pos, time, preset);
    std::vector<Vec3> vel(nv);
    parallel_for(nv, [&](std::ptrdiff_t v) { vel[v] = s.v_n[v] * s.normal[v]; });
    return vel;
  };

  auto shifted = [&](const std::vector<Vec3>& base, const std::vector<Vec3>& dir, double a) {
    std::vector<Vec3> out(nv);
    parallel_for(nv, [&](std::ptrdiff_t v) { out[v] = base[v] + a * dir[v]; });
    return out;
  };

  const double t = state.t;
  std::vector<Vec3> k1(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) { k1[v] = state.v_n[v] * state.normal[v]; });
  std::vector<Vec3> k2 = velocity(shifted(state.positions, k1, 0.5 * dt), t + 0.5 * dt);
  std::vector<Vec3> k3 = velocity(shifted(state.positions, k2, 0.5 * dt), t + 0.5 * dt);
  std::vector<Vec3> k4 = velocity(shifted(state.positions, k3, dt), t + dt);

  std::vector<Vec3> out(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    out[v] = state.positions[v] + (dt / 6.0) * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v]);
  });

  const double q = min_radius_ratio(mesh, out);
  if (q < min_quality)
    throw GeometryError("advance_positions: mesh quality " + std::to_string(q) +
                        " below threshold " + std::to_string(min_quality) + " at t = " +
                        std::to_string(t + dt));
  return out;
}

}  // namespace sphase
