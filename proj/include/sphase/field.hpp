#pragma once

#include "sphase/geometry.hpp"

namespace sphase {

enum class Arity { Scalar, Vector3 };

// P1 nodal coefficient vector bound to a mesh slice. Vector fields are stored
// interleaved: coeffs[3v + c] is component c at vertex v.
struct Field {
  Arity arity = Arity::Scalar;
  VecX coeffs;
  bool tangential = false;

  static Field scalar(const VecX& c) { return {Arity::Scalar, c, false}; }
  static Field scalar_zero(int nv) { return {Arity::Scalar, VecX::Zero(nv), false}; }
  static Field vector(const VecX& c, bool tang = false) { return {Arity::Vector3, c, tang}; }
  static Field vector_zero(int nv, bool tang = false) {
    return {Arity::Vector3, VecX::Zero(3 * nv), tang};
  }

  int n_vertices() const {
    return static_cast<int>(arity == Arity::Scalar ? coeffs.size() : coeffs.size() / 3);
  }
  Vec3 at(int v) const { return Vec3(coeffs[3 * v], coeffs[3 * v + 1], coeffs[3 * v + 2]); }
  void set(int v, const Vec3& x) {
    coeffs[3 * v] = x.x();
    coeffs[3 * v + 1] = x.y();
    coeffs[3 * v + 2] = x.z();
  }
};

// max_v |f(v) . n(v)|, the vertexwise tangency defect of a vector field.
double tangency_defect(const SurfaceState& state, const Field& f);

// Vertexwise tangential projection P_v f(v).
Field project_tangential(const SurfaceState& state, const Field& f);

}  // namespace sphase
