#include "sphase/diagnostics.hpp"

namespace sphase {

EnergyParts energy(const StepState& s, const SliceOps& ops, const MaterialSpec& mat,
                   const PotentialSpec& pot) {
  const SurfaceState& st = s.surf;
  const int nv = st.n_vertices();

  // Full velocity u = v_total + v_n n at vertices, quadrature at midpoints.
  std::vector<Vec3> u(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    u[v] = s.v_total.at(static_cast<int>(v)) + st.v_n[v] * st.normal[v];
  });

  EnergyParts out;
  constexpr double kLambda[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
  out.kinetic = parallel_sum(st.n_faces(), [&](std::ptrdiff_t f) {
    const auto& fc = st.mesh->faces[f];
    const double a3 = st.face_area[f] / 3.0;
    double acc = 0.0;
    for (int q = 0; q < 3; ++q) {
      Vec3 uq = Vec3::Zero();
      double rq = 0.0;
      for (int k = 0; k < 3; ++k) {
        uq += kLambda[q][k] * u[fc[k]];
        rq += kLambda[q][k] * density_scalar(mat, s.phi[fc[k]]);
      }
      acc += a3 * 0.5 * rq * uq.squaredNorm();
    }
    return acc;
  });
  out.potential = parallel_sum(nv, [&](std::ptrdiff_t v) {
    return st.vertex_area[v] * psi_eval(pot, s.phi[v]);
  });
  out.gradient = 0.5 * s.phi.dot(ops.K.mat * s.phi);
  return out;
}

Residuals residuals(const StepState& s, const SliceOps& ops) {
  Residuals r;
  r.div_residual = s.div_residual;
  const SurfaceState& st = s.surf;
  r.constraint_residual = parallel_sum(st.n_vertices(), [&](std::ptrdiff_t v) {
    return st.curv_area[v] * st.mean_curv[v] * st.v_n[v];
  });
  r.tangency_max = tangency_defect(st, s.V);
  (void)ops;
  return r;
}

DiagRow make_diag_row(const StepState& s, const SliceOps& ops, const MaterialSpec& mat,
                      const PotentialSpec& pot, double wall_time) {
  DiagRow row;
  row.t = s.surf.t;
  row.mass = integrate_lumped(s.surf, s.phi);
  row.area = s.surf.total_area;
  const EnergyParts e = energy(s, ops, mat, pot);
  row.kinetic = e.kinetic;
  row.potential = e.potential;
  row.gradient = e.gradient;
  row.energy = e.total();
  row.max_abs_phi = s.phi.cwiseAbs().maxCoeff();
  row.separation_margin = 1.0 - row.max_abs_phi;
  const Residuals r = residuals(s, ops);
  row.div_residual = r.div_residual;
  row.constraint_residual = r.constraint_residual;
  row.tangency_max = r.tangency_max;
  row.picard_iters = s.picard_iters;
  row.wall_time = wall_time;
  return row;
}

}  // namespace sphase
