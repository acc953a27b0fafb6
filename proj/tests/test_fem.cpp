#include "sphase/fem.hpp"
#include "sphase/projector.hpp"
#include "sphase/serial_ref.hpp"

#include <map>

#include <doctest.h>

#include <random>

using namespace sphase;

namespace {

SurfaceState sphere_state(int subdiv, bool analytic = true, double R = 1.0) {
  GeometryPreset p;
  p.kind = GeometryPreset::Kind::StationarySphere;
  p.radius = R;
  static std::map<std::pair<int, double>, TriMesh> meshes;
  auto key = std::make_pair(subdiv, R);
  if (!meshes.count(key)) meshes[key] = make_icosphere(subdiv, R);
  return compute_surface_state(meshes[key], meshes[key].vertices, 0.0, p, analytic);
}

VecX zonal(const SurfaceState& st) {
  VecX z(st.n_vertices());
  for (int v = 0; v < st.n_vertices(); ++v) z[v] = st.positions[v].z();
  return z;
}

Field rotation(const SurfaceState& st) {
  Field f = Field::vector_zero(st.n_vertices(), true);
  for (int v = 0; v < st.n_vertices(); ++v) f.set(v, Vec3(0, 0, 1).cross(st.positions[v]));
  return f;
}

double lumped_l2(const SurfaceState& st, const VecX& x) {
  double s = 0;
  for (int v = 0; v < st.n_vertices(); ++v) s += st.vertex_area[v] * x[v] * x[v];
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("mass matrix: partition of unity reproduces the polyhedral area") {
  SurfaceState st = sphere_state(4);
  SparseOperator M = assemble_mass(st, 1.0, Arity::Scalar);
  const double total = VecX::Ones(M.rows()).dot(M.mat * VecX::Ones(M.cols()));
  CHECK(std::abs(total - st.total_area) <= 1e-12 * st.total_area);
  CHECK(std::abs(total - 4 * M_PI) <= 3e-3 * 4 * M_PI);  // polyhedral defect
}

TEST_CASE("lumped mass: diagonal with trace equal to the area") {
  SurfaceState st = sphere_state(3);
  SparseOperator Ml = assemble_mass(st, 1.0, Arity::Scalar, true);
  CHECK(Ml.mat.nonZeros() == st.n_vertices());
  CHECK(std::abs(Ml.mat.diagonal().sum() - st.total_area) <= 1e-12 * st.total_area);
}

TEST_CASE("assembly is linear in the weight") {
  SurfaceState st = sphere_state(3);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.5, 2.0);
  VecX w1(st.n_vertices()), w2(st.n_vertices());
  for (int v = 0; v < st.n_vertices(); ++v) {
    w1[v] = dist(rng);
    w2[v] = dist(rng);
  }
  VecX wsum = w1 + w2;
  SpMat m12 = assemble_mass(st, Weight(w1), Arity::Scalar).mat +
              assemble_mass(st, Weight(w2), Arity::Scalar).mat;
  SpMat msum = assemble_mass(st, Weight(wsum), Arity::Scalar).mat;
  CHECK((m12 - msum).norm() <= 1e-12 * msum.norm());
  SpMat k2 = assemble_stiffness(st, Weight(w1)).mat * 2.0;
  VecX w1x2 = 2.0 * w1;
  SpMat k2b = assemble_stiffness(st, Weight(w1x2)).mat;
  CHECK((k2 - k2b).norm() <= 1e-12 * k2.norm());
}

TEST_CASE("nonpositive weight in a density role is a physics error") {
  SurfaceState st = sphere_state(2);
  VecX w = VecX::Constant(st.n_vertices(), 1.0);
  w[3] = -0.2;
  CHECK_THROWS_AS(assemble_mass(st, Weight(w), Arity::Scalar, false, 1e-12), PhysicsError);
}

TEST_CASE("stiffness annihilates constants and is symmetric") {
  SurfaceState st = sphere_state(3);
  SparseOperator K = assemble_stiffness(st, 1.0);
  VecX ones = VecX::Ones(st.n_vertices());
  CHECK((K.mat * ones).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((SpMat(K.mat.transpose()) - K.mat).norm() <= 1e-12);
}

TEST_CASE("Poisson solve reproduces the l=1 harmonic at second order") {
  auto err_at = [&](int subdiv) {
    SurfaceState st = sphere_state(subdiv);
    SliceOps ops = SliceOps::build(st);
    VecX z = zonal(st);
    VecX rhs = ops.M.mat * (2.0 * z);
    std::vector<VecX> ns = {VecX::Ones(st.n_vertices())};
    VecX u = solve_linear(ops.K, rhs, {}, &ns);
    u.array() -= (ops.Ml.mat.diagonal().dot(u)) / st.total_area;
    VecX zc = z;
    zc.array() -= (ops.Ml.mat.diagonal().dot(z)) / st.total_area;
    return lumped_l2(st, u - zc) / lumped_l2(st, zc);
  };
  const double e3 = err_at(3), e4 = err_at(4);
  CHECK(e3 <= 8e-3);
  CHECK(e4 <= e3 / 3.0);  // O(h^2)
}

TEST_CASE("Poisson solve reproduces the l=2 harmonic (eigenvalue 6)") {
  SurfaceState st = sphere_state(4);
  SliceOps ops = SliceOps::build(st);
  VecX q(st.n_vertices());
  for (int v = 0; v < st.n_vertices(); ++v) {
    const Vec3& x = st.positions[v];
    q[v] = x.z() * x.z() - 1.0 / 3.0;
  }
  VecX rhs = ops.M.mat * (6.0 * q);
  std::vector<VecX> ns = {VecX::Ones(st.n_vertices())};
  VecX u = solve_linear(ops.K, rhs, {}, &ns);
  u.array() -= (ops.Ml.mat.diagonal().dot(u)) / st.total_area;
  VecX qc = q;
  qc.array() -= (ops.Ml.mat.diagonal().dot(q)) / st.total_area;
  CHECK(lumped_l2(st, u - qc) / lumped_l2(st, qc) <= 5e-3);
}

TEST_CASE("deformation form vanishes on all three rigid rotations of the sphere") {
  SurfaceState st = sphere_state(4);  // analytic normals: exact Killing kernel
  const double h = mean_edge_length(*st.mesh, st.positions);
  SparseOperator A = assemble_deformation(st, 1.0, 100.0 / h);
  SparseOperator M = assemble_mass(st, 1.0, Arity::Vector3);
  for (const Vec3 axis : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}) {
    Field u = Field::vector_zero(st.n_vertices(), true);
    for (int v = 0; v < st.n_vertices(); ++v) u.set(v, axis.cross(st.positions[v]));
    const double q = u.coeffs.dot(A.mat * u.coeffs);
    const double uu = u.coeffs.dot(M.mat * u.coeffs);
    CHECK(q <= 1e-8 * uu);
  }
}

TEST_CASE("deformation form scales linearly in the viscosity") {
  SurfaceState st = sphere_state(3);
  SpMat a1 = assemble_deformation(st, 1.0, 0.0).mat;
  SpMat a2 = assemble_deformation(st, 2.0, 0.0).mat;
  CHECK((a2 - 2.0 * a1).norm() <= 1e-12 * a2.norm());
}

TEST_CASE("penalty part of the normal field equals beta times the area") {
  SurfaceState st = sphere_state(4);
  const double beta = 37.0;
  SpMat pen = assemble_deformation(st, 0.0, beta).mat;  // zero viscosity isolates the penalty
  Field n = Field::vector_zero(st.n_vertices());
  for (int v = 0; v < st.n_vertices(); ++v) n.set(v, st.normal[v]);
  const double q = n.coeffs.dot(pen * n.coeffs);
  CHECK(std::abs(q - beta * st.total_area) <= 1e-2 * beta * st.total_area);
}

TEST_CASE("divergence operator: zero fields, rotations and gradients") {
  SurfaceState st = sphere_state(4);
  SparseOperator B = assemble_div(st);
  Field zero = Field::vector_zero(st.n_vertices());
  CHECK((B.mat * zero.coeffs).cwiseAbs().maxCoeff() == 0.0);
  // rotation: facewise divergence-free, so B annihilates it to roundoff
  Field rot = rotation(st);
  CHECK((B.mat * rot.coeffs).cwiseAbs().maxCoeff() <= 1e-12);
  // gradient of z: weak divergence equals the weak form of -2z at O(h)
  Field gz = Field::vector_zero(st.n_vertices(), true);
  for (int v = 0; v < st.n_vertices(); ++v) {
    const Vec3& x = st.positions[v];
    gz.set(v, Vec3(0, 0, 1) - x.z() * x);
  }
  SliceOps ops = SliceOps::build(st);
  VecX resid = (B.mat * gz.coeffs + ops.M.mat * (2.0 * zonal(st)))
                   .cwiseQuotient(ops.Ml.mat.diagonal());
  CHECK(lumped_l2(st, resid) <= 0.25);  // O(h), h ~ 0.075 at subdiv 4
  SurfaceState st3 = sphere_state(3);
  SparseOperator B3 = assemble_div(st3);
  SliceOps ops3 = SliceOps::build(st3);
  Field gz3 = Field::vector_zero(st3.n_vertices(), true);
  for (int v = 0; v < st3.n_vertices(); ++v) {
    const Vec3& x = st3.positions[v];
    gz3.set(v, Vec3(0, 0, 1) - x.z() * x);
  }
  VecX resid3 = (B3.mat * gz3.coeffs + ops3.M.mat * (2.0 * zonal(st3)))
                    .cwiseQuotient(ops3.Ml.mat.diagonal());
  CHECK(lumped_l2(st, resid) <= 0.65 * lumped_l2(st3, resid3));
}

TEST_CASE("advection: zero wind, constants, rotation against zonal field") {
  SurfaceState st = sphere_state(4);
  Field zero_wind = Field::vector_zero(st.n_vertices());
  SparseOperator C0 = assemble_advection(st, zero_wind, 1.0, Arity::Scalar);
  CHECK(C0.mat.norm() == 0.0);

  Field rot = rotation(st);
  SparseOperator C = assemble_advection(st, rot, 1.0, Arity::Scalar);
  VecX ones = VecX::Ones(st.n_vertices());
  CHECK((C.mat * ones).cwiseAbs().maxCoeff() <= 1e-12);

  // (e3 x x) . grad z = 0: weak action on the zonal field decays at O(h)
  SliceOps ops = SliceOps::build(st);
  VecX act = (C.mat * zonal(st)).cwiseQuotient(ops.Ml.mat.diagonal());
  CHECK(lumped_l2(st, act) <= 0.05);
}

TEST_CASE("solver: identity, dense oracle and gauge fixing") {
  SurfaceState st = sphere_state(1);
  const int n = st.n_vertices();
  SparseOperator I;
  I.mat = SpMat(n, n);
  I.mat.setIdentity();
  I.symmetric = I.spd = true;
  VecX rhs = VecX::LinSpaced(n, -1.0, 1.0);
  CHECK((solve_linear(I, rhs) - rhs).cwiseAbs().maxCoeff() <= 1e-14);

  // SPD mass solve against a dense factorization
  SparseOperator M = assemble_mass(st, 1.0, Arity::Scalar);
  Eigen::MatrixXd dense = Eigen::MatrixXd(M.mat);
  VecX x_dense = dense.ldlt().solve(rhs);
  VecX x_sparse = solve_linear(M, rhs);
  CHECK((x_dense - x_sparse).cwiseAbs().maxCoeff() <= 1e-10);
  VecX x_cg = solve_linear(M, rhs, {SolveMethod::CG, 1e-12, 5000});
  CHECK((x_dense - x_cg).cwiseAbs().maxCoeff() <= 1e-8);
  VecX x_mr = solve_linear(M, rhs, {SolveMethod::MINRES, 1e-12, 5000});
  CHECK((x_dense - x_mr).cwiseAbs().maxCoeff() <= 1e-7);

  // stiffness with mean-zero data: gauge enforced through the nullspace
  SurfaceState st3 = sphere_state(3);
  SliceOps ops = SliceOps::build(st3);
  VecX f = ops.M.mat * (2.0 * zonal(st3));
  std::vector<VecX> ns = {VecX::Ones(st3.n_vertices())};
  VecX u = solve_linear(ops.K, f, {}, &ns);
  CHECK(std::abs(u.sum()) / st3.n_vertices() <= 1e-12);
  CHECK((ops.K.mat * u - f).cwiseAbs().maxCoeff() <=
        1e-9 * f.cwiseAbs().maxCoeff());  // pinned dof absorbs the fp incompatibility
}

TEST_CASE("iterative breakdown raises a solver error with history") {
  SurfaceState st = sphere_state(2);
  SparseOperator K = assemble_stiffness(st, 1.0);
  K.spd = false;
  VecX rhs = VecX::Random(st.n_vertices());
  SolveOptions opts;
  opts.method = SolveMethod::CG;
  opts.tol = 1e-15;
  opts.max_iter = 1;  // cannot converge in one sweep
  try {
    solve_linear(K, rhs, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(!e.residual_history.empty());
  }
}

TEST_CASE("parallel kernels match the serial reference bitwise") {
  SurfaceState st = sphere_state(3, /*analytic=*/false);
  VecX w(st.n_vertices());
  for (int v = 0; v < st.n_vertices(); ++v) w[v] = 1.0 + 0.3 * st.positions[v].z();

  CHECK((assemble_mass(st, Weight(w), Arity::Scalar).mat -
         serial::assemble_mass(st, Weight(w), Arity::Scalar).mat)
            .norm() == 0.0);
  CHECK((assemble_mass(st, Weight(w), Arity::Scalar, true).mat -
         serial::assemble_mass(st, Weight(w), Arity::Scalar, true).mat)
            .norm() == 0.0);
  CHECK((assemble_stiffness(st, Weight(w)).mat - serial::assemble_stiffness(st, Weight(w)).mat)
            .norm() == 0.0);
  CHECK((assemble_deformation(st, Weight(w), 55.0).mat -
         serial::assemble_deformation(st, Weight(w), 55.0).mat)
            .norm() == 0.0);
  VecX z = zonal(st);
  CHECK(integrate_lumped(st, z) == serial::integrate_lumped(st, z));
  CHECK((recover_gradient(st, z).coeffs - serial::recover_gradient(st, z).coeffs).norm() == 0.0);
}

#ifdef _OPENMP
TEST_CASE("assembly is independent of the thread count") {
  SurfaceState st = sphere_state(3, false);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  SpMat m1 = assemble_deformation(st, 1.0, 10.0).mat;
  omp_set_num_threads(std::max(2, saved));
  SpMat m2 = assemble_deformation(st, 1.0, 10.0).mat;
  omp_set_num_threads(saved);
  CHECK((m1 - m2).norm() == 0.0);
}
#endif
