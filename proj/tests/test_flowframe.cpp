#include "sphase/piola.hpp"

#include <doctest.h>

#include <random>

using namespace sphase;

namespace {

GeometryPreset sphere_preset(double R = 1.0) {
  GeometryPreset p;
  p.kind = GeometryPreset::Kind::StationarySphere;
  p.radius = R;
  return p;
}

struct RadialSetup {
  TriMesh mesh;
  SurfaceState st0, stR;
  FlowFrame frame;
};

RadialSetup radial_setup(int subdiv, double R) {
  RadialSetup s{make_icosphere(subdiv, 1.0), {}, {}, {}};
  std::vector<Vec3> posR(s.mesh.vertices.size());
  for (size_t i = 0; i < posR.size(); ++i) posR[i] = R * s.mesh.vertices[i];
  s.st0 = compute_surface_state(s.mesh, s.mesh.vertices, 0.0, sphere_preset(1.0));
  s.stR = compute_surface_state(s.mesh, posR, 0.0, sphere_preset(R));
  s.frame = compute_flow_frame(s.mesh, s.mesh.vertices, posR, s.st0, s.stR);
  return s;
}

Field rotation_field(const SurfaceState& st, const Vec3& axis) {
  Field f = Field::vector_zero(st.n_vertices(), true);
  for (int v = 0; v < st.n_vertices(); ++v)
    f.set(v, st.projector[v] * axis.cross(st.positions[v]));
  return f;
}

}  // namespace

TEST_CASE("identity flow gives the identity frame exactly") {
  TriMesh mesh = make_icosphere(2, 1.0);
  SurfaceState st = compute_surface_state(mesh, mesh.vertices, 0.0, sphere_preset());
  FlowFrame fr = compute_flow_frame(mesh, mesh.vertices, mesh.vertices, st, st);
  for (int f = 0; f < mesh.n_faces(); ++f) {
    CHECK(std::abs(fr.J[f] - 1.0) <= 1e-13);
    CHECK((fr.A[f] - Mat3::Identity()).norm() <= 1e-12);
    CHECK((fr.Ainv[f] - Mat3::Identity()).norm() <= 1e-12);
    const Mat3 P0 = Mat3::Identity() - fr.n0[f] * fr.n0[f].transpose();
    CHECK((fr.D[f] - P0).norm() <= 1e-12);
  }
  // vertex maps are the identity as well
  for (int v = 0; v < mesh.n_vertices(); ++v)
    CHECK((fr.vertex_A[v] - Mat3::Identity()).norm() <= 1e-12);
}

TEST_CASE("radial map: area ratio R^2 and tangential action 1/R") {
  const double R = 2.0;
  RadialSetup s = radial_setup(3, R);
  for (int f = 0; f < s.mesh.n_faces(); ++f) {
    CHECK(std::abs(s.frame.J[f] - R * R) <= 1e-10);
    CHECK(std::abs(s.frame.A[f].determinant() - 1.0) <= 1e-10);
    // A acts on (face-tangent) edge vectors as multiplication by 1/R
    const auto& fc = s.mesh.faces[f];
    const Vec3 e = s.mesh.vertices[fc[1]] - s.mesh.vertices[fc[0]];
    CHECK((s.frame.A[f] * e - e / R).norm() <= 1e-10 * e.norm());
    CHECK((s.frame.Ainv[f] * e - e * R).norm() <= 1e-10 * e.norm() * R);
  }
}

TEST_CASE("frame algebra: inverses and tangential projections") {
  const double R = 1.7;
  RadialSetup s = radial_setup(2, R);
  for (int f = 0; f < s.mesh.n_faces(); ++f) {
    CHECK((s.frame.A[f] * s.frame.Ainv[f] - Mat3::Identity()).norm() <= 1e-10);
    const Mat3 P0 = Mat3::Identity() - s.frame.n0[f] * s.frame.n0[f].transpose();
    const Mat3 Pt = Mat3::Identity() - s.frame.nt[f] * s.frame.nt[f].transpose();
    CHECK((s.frame.Dminus[f] * s.frame.D[f] - P0).norm() <= 1e-10);
    CHECK((s.frame.D[f] * s.frame.Dminus[f] - Pt).norm() <= 1e-10);
    CHECK(s.frame.J[f] * s.frame.Jinv[f] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("piola roundtrip is exact on tangential fields") {
  const double R = 1.5;
  RadialSetup s = radial_setup(3, R);
  std::mt19937 rng(3);
  std::normal_distribution<double> dist;
  Field f = Field::vector_zero(s.mesh.n_vertices(), true);
  for (int v = 0; v < s.mesh.n_vertices(); ++v)
    f.set(v, s.st0.projector[v] * Vec3(dist(rng), dist(rng), dist(rng)));
  Field pushed = piola_push(s.frame, f, s.st0);
  Field back = piola_pull(s.frame, pushed, s.stR);
  CHECK((back.coeffs - f.coeffs).cwiseAbs().maxCoeff() <= 1e-12 * f.coeffs.cwiseAbs().maxCoeff());
}

TEST_CASE("radial pushforward scales tangent fields by 1/R at O(h^2)") {
  const double R = 2.0;
  auto relerr = [&](int subdiv) {
    RadialSetup s = radial_setup(subdiv, R);
    Field f = rotation_field(s.st0, Vec3(0, 0, 1));
    Field pushed = piola_push(s.frame, f, s.st0);
    double num = 0, den = 0;
    for (int v = 0; v < s.mesh.n_vertices(); ++v) {
      // exact transport: value/R at the scaled position
      const Vec3 expect = f.at(v) / R;
      num += (pushed.at(v) - expect).squaredNorm();
      den += expect.squaredNorm();
    }
    return std::sqrt(num / den);
  };
  const double e3 = relerr(3), e4 = relerr(4);
  CHECK(e3 <= 4e-2);
  CHECK(e4 <= 0.35 * e3);  // second order: expect ~0.25
}

TEST_CASE("pull mirrors push: magnitudes multiply by R on the radial frame") {
  // the rotation field on the radius-R sphere is R times the unit-sphere one,
  // and pulling back multiplies tangent vectors by another factor R
  const double R = 2.0;
  RadialSetup s = radial_setup(3, R);
  Field g = rotation_field(s.stR, Vec3(0, 0, 1));
  Field pulled = piola_pull(s.frame, g, s.stR);
  Field f0 = rotation_field(s.st0, Vec3(0, 0, 1));
  const double scale = pulled.coeffs.norm() / f0.coeffs.norm();
  CHECK(scale == doctest::Approx(R * R).epsilon(5e-2));
}

TEST_CASE("non-tangential input violates the transform contract") {
  RadialSetup s = radial_setup(2, 1.3);
  Field f = Field::vector_zero(s.mesh.n_vertices(), true);
  for (int v = 0; v < s.mesh.n_vertices(); ++v) f.set(v, s.st0.normal[v]);
  CHECK_THROWS_AS(piola_push(s.frame, f, s.st0), ContractViolation);
}

TEST_CASE("det A stays 1 along an evolved trajectory") {
  GeometryPreset p;
  p.kind = GeometryPreset::Kind::OscillatingHarmonicSphere;
  p.amplitude = 0.05;
  p.frequency = 2.0;
  TriMesh mesh = make_icosphere(2, 1.0);
  std::vector<Vec3> pos = mesh.vertices;
  double t = 0;
  for (int k = 0; k < 10; ++k) {
    SurfaceState st = compute_surface_state(mesh, pos, t, p);
    pos = advance_positions(st, p, 0.01);
    t += 0.01;
    SurfaceState st0 = compute_surface_state(mesh, mesh.vertices, 0.0, p);
    SurfaceState stt = compute_surface_state(mesh, pos, t, p);
    FlowFrame fr = compute_flow_frame(mesh, mesh.vertices, pos, st0, stt);
    for (int f = 0; f < mesh.n_faces(); ++f)
      CHECK(std::abs(fr.A[f].determinant() - 1.0) <= 1e-10);
  }
}
