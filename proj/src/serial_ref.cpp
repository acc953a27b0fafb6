#include "sphase/serial_ref.hpp"

namespace sphase::serial {

namespace {
constexpr double kLambda[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
}

SparseOperator assemble_mass(const SurfaceState& state, const Weight& w, Arity arity,
                             bool lumped) {
  const int nv = state.n_vertices();
  const int dim = (arity == Arity::Scalar) ? nv : 3 * nv;
  std::vector<Triplet> trips;
  for (int f = 0; f < state.n_faces(); ++f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int q = 0; q < 3; ++q) {
      double wq = w.field ? 0.0 : w.constant;
      if (w.field)
        for (int k = 0; k < 3; ++k) wq += kLambda[q][k] * w.at(fc[k]);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) += a3 * wq * kLambda[q][i] * kLambda[q][j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double val = lumped ? (i == j ? m.row(i).sum() : 0.0) : m(i, j);
        if (lumped && i != j) continue;
        if (arity == Arity::Scalar)
          trips.emplace_back(fc[i], fc[j], val);
        else
          for (int c = 0; c < 3; ++c) trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + c, val);
      }
  }
  SparseOperator op;
  op.mat = SpMat(dim, dim);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.symmetric = true;
  op.spd = true;
  return op;
}

SparseOperator assemble_stiffness(const SurfaceState& state, const Weight& w) {
  const int nv = state.n_vertices();
  std::vector<Triplet> trips;
  for (int f = 0; f < state.n_faces(); ++f) {
    const auto& fc = state.mesh->faces[f];
    double wf = w.field ? (w.at(fc[0]) + w.at(fc[1]) + w.at(fc[2])) / 3.0 : w.constant;
    const double wa = wf * state.face_area[f];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(fc[i], fc[j], wa * state.face_grad[f][i].dot(state.face_grad[f][j]));
  }
  SparseOperator op;
  op.mat = SpMat(nv, nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.symmetric = true;
  return op;
}

SparseOperator assemble_deformation(const SurfaceState& state, const Weight& viscosity,
                                    double penalty_beta) {
  const int nv = state.n_vertices();
  std::vector<Triplet> trips;
  for (int f = 0; f < state.n_faces(); ++f) {
    const auto& fc = state.mesh->faces[f];
    const double area = state.face_area[f];
    double nu = viscosity.field
                    ? (viscosity.at(fc[0]) + viscosity.at(fc[1]) + viscosity.at(fc[2])) / 3.0
                    : viscosity.constant;
    const Mat3 P = state.face_proj(f);
    const auto& g = state.face_grad[f];
    Eigen::Matrix<double, 9, 9> m = Eigen::Matrix<double, 9, 9>::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            m(3 * i + c, 3 * j + d) =
                nu * area * (P(c, d) * g[i].dot(g[j]) + g[j](c) * g[i](d));
    if (penalty_beta > 0.0) {
      for (int q = 0; q < 3; ++q) {
        Vec3 nq = Vec3::Zero();
        for (int k = 0; k < 3; ++k) nq += kLambda[q][k] * state.normal[fc[k]];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int c = 0; c < 3; ++c)
              for (int d = 0; d < 3; ++d)
                m(3 * i + c, 3 * j + d) += penalty_beta * (area / 3.0) * kLambda[q][i] *
                                           kLambda[q][j] * nq(c) * nq(d);
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          for (int d = 0; d < 3; ++d)
            trips.emplace_back(3 * fc[i] + c, 3 * fc[j] + d, m(3 * i + c, 3 * j + d));
  }
  SparseOperator op;
  op.mat = SpMat(3 * nv, 3 * nv);
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.symmetric = true;
  return op;
}

double integrate_lumped(const SurfaceState& state, const VecX& scalar) {
  double s = 0.0;
  for (int v = 0; v < state.n_vertices(); ++v) s += state.vertex_area[v] * scalar[v];
  return s;
}

Field recover_gradient(const SurfaceState& state, const VecX& scalar, bool project) {
  Field out = Field::vector_zero(state.n_vertices(), project);
  for (int v = 0; v < state.n_vertices(); ++v) {
    Vec3 acc = Vec3::Zero();
    for (int f : state.mesh->vertex_faces[v]) {
      const auto& fc = state.mesh->faces[f];
      Vec3 g = scalar[fc[0]] * state.face_grad[f][0] + scalar[fc[1]] * state.face_grad[f][1] +
               scalar[fc[2]] * state.face_grad[f][2];
      acc += (state.face_area[f] / 3.0) * g;
    }
    acc /= state.vertex_area[v];
    if (project) acc = state.projector[v] * acc;
    out.set(v, acc);
  }
  return out;
}

}  // namespace sphase::serial
