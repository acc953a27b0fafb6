#include "sphase/piola.hpp"

namespace sphase {

double tangency_defect(const SurfaceState& state, const Field& f) {
  if (f.arity != Arity::Vector3) throw ContractViolation("tangency_defect: vector field expected");
  std::vector<double> d(state.n_vertices());
  parallel_for(state.n_vertices(), [&](std::ptrdiff_t v) {
    d[v] = std::abs(f.at(static_cast<int>(v)).dot(state.normal[v]));
  });
  return *std::max_element(d.begin(), d.end());
}

Field project_tangential(const SurfaceState& state, const Field& f) {
  Field out = f;
  parallel_for(state.n_vertices(), [&](std::ptrdiff_t v) {
    out.set(static_cast<int>(v), state.projector[v] * f.at(static_cast<int>(v)));
  });
  out.tangential = true;
  return out;
}

FlowFrame compute_flow_frame(const TriMesh& mesh, const std::vector<Vec3>& pos0,
                             const std::vector<Vec3>& pos_t, const SurfaceState& state0,
                             const SurfaceState& state_t) {
  const int nf = mesh.n_faces();
  const int nv = mesh.n_vertices();
  FlowFrame fr;
  fr.D.resize(nf);
  fr.Dminus.resize(nf);
  fr.A.resize(nf);
  fr.Ainv.resize(nf);
  fr.J.resize(nf);
  fr.Jinv.resize(nf);
  fr.n0.resize(nf);
  fr.nt.resize(nf);

  std::vector<double> area0(nf);

  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    const Vec3 e10 = pos0[fc[1]] - pos0[fc[0]];
    const Vec3 e20 = pos0[fc[2]] - pos0[fc[0]];
    const Vec3 e1t = pos_t[fc[1]] - pos_t[fc[0]];
    const Vec3 e2t = pos_t[fc[2]] - pos_t[fc[0]];
    const Vec3 cr0 = e10.cross(e20);
    const Vec3 crt = e1t.cross(e2t);
    const double a0 = 0.5 * cr0.norm(), at = 0.5 * crt.norm();
    if (!(a0 > 0) || !(at > 0))
      throw GeometryError("compute_flow_frame: collapsed face " + std::to_string(f));
    const Vec3 n0 = cr0 / (2.0 * a0);
    const Vec3 nt = crt / (2.0 * at);
    area0[f] = a0;

    Mat3 E0, Et;
    E0.col(0) = e10; E0.col(1) = e20; E0.col(2) = n0;
    Et.col(0) = e1t; Et.col(1) = e2t; Et.col(2) = Vec3::Zero();
    const Mat3 D = Et * E0.inverse();

    Mat3 E0z, Etn;
    E0z.col(0) = e10; E0z.col(1) = e20; E0z.col(2) = Vec3::Zero();
    Etn.col(0) = e1t; Etn.col(1) = e2t; Etn.col(2) = nt;
    const Mat3 Dm = E0z * Etn.inverse();

    const double J = at / a0;
    fr.D[f] = D;
    fr.Dminus[f] = Dm;
    fr.J[f] = J;
    fr.Jinv[f] = 1.0 / J;
    fr.n0[f] = n0;
    fr.nt[f] = nt;
    fr.A[f] = D / J + J * (nt * n0.transpose());
    fr.Ainv[f] = J * Dm + (n0 * nt.transpose()) / J;
  });

  // Vertex transfer maps: area-weighted face averages, then made consistent
  // with the vertex tangent/normal splitting so the inverse is exact.
  fr.vertex_A.resize(nv);
  fr.vertex_Ainv.resize(nv);
  fr.vertex_J.resize(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    Mat3 acc = Mat3::Zero();
    double wsum = 0.0, jacc = 0.0;
    for (int f : mesh.vertex_faces[v]) {
      acc += area0[f] * fr.A[f];
      jacc += area0[f] * fr.J[f];
      wsum += area0[f];
    }
    acc /= wsum;
    const double Jv = jacc / wsum;
    const Mat3 Pt = state_t.projector[v];
    const Mat3 P0 = state0.projector[v];
    const Mat3 Av = Pt * acc * P0 + Jv * (state_t.normal[v] * state0.normal[v].transpose());
    fr.vertex_A[v] = Av;
    fr.vertex_Ainv[v] = Av.inverse();
    fr.vertex_J[v] = Jv;
  });
  return fr;
}

namespace {

Field apply_vertex_maps(const std::vector<Mat3>& maps, const Field& f,
                        const SurfaceState& source_state, double tol) {
  if (f.arity != Arity::Vector3)
    throw ContractViolation("piola transform: vector field expected");
  double scale = f.coeffs.size() ? f.coeffs.cwiseAbs().maxCoeff() : 0.0;
  scale = std::max(scale, 1.0);
  if (tangency_defect(source_state, f) > tol * scale)
    throw ContractViolation("piola transform: input field not tangential within tolerance");
  Field out = Field::vector_zero(f.n_vertices(), true);
  parallel_for(f.n_vertices(), [&](std::ptrdiff_t v) {
    out.set(static_cast<int>(v), maps[v] * f.at(static_cast<int>(v)));
  });
  return out;
}

}  // namespace

Field piola_push(const FlowFrame& frame, const Field& field0, const SurfaceState& state0,
                 double tangency_tol) {
  return apply_vertex_maps(frame.vertex_A, field0, state0, tangency_tol);
}

Field piola_pull(const FlowFrame& frame, const Field& field_t, const SurfaceState& state_t,
                 double tangency_tol) {
  return apply_vertex_maps(frame.vertex_Ainv, field_t, state_t, tangency_tol);
}

}  // namespace sphase
