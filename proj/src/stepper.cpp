#include "sphase/stepper.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>

namespace sphase {

// Saddle systems above this size go through BiCGSTAB with a lag-refreshed
// ILUT preconditioner; a full LU refactorization per Picard sweep does not
// fit the desk-scale time budget there (measured ~5 s at subdivision 5).
struct SaddleCache {
  Eigen::IncompleteLUT<double> ilut;
  bool ready = false;
  int age = 0;
  int refresh_every = 5;
};

SaddleCachePtr make_saddle_cache() { return std::make_shared<SaddleCache>(); }

namespace {

constexpr int kSaddleDirectLimit = 8000;

// Forwards applications to an externally owned ILUT and ignores the
// compute() calls Eigen's Krylov drivers issue, so the factorization can lag
// behind the matrix.
struct LaggedPreconditioner {
  using StorageIndex = int;
  Eigen::IncompleteLUT<double>* inner = nullptr;

  LaggedPreconditioner() = default;
  template <class Mat>
  explicit LaggedPreconditioner(const Mat&) {}
  template <class Mat>
  LaggedPreconditioner& analyzePattern(const Mat&) { return *this; }
  template <class Mat>
  LaggedPreconditioner& factorize(const Mat&) { return *this; }
  template <class Mat>
  LaggedPreconditioner& compute(const Mat&) { return *this; }
  template <class Rhs>
  VecX solve(const Rhs& b) const { return inner->solve(b); }
  Eigen::ComputationInfo info() const { return Eigen::Success; }
};

// rhs_i += sign * int w C_f : grad psi_i over each face (C_f per-face matrix,
// w a P1 scalar); used for the weak form of P div(w C) forcings.
void add_tensor_gradient_rhs(const SurfaceState& state, const std::vector<Mat3>& C,
                             const VecX& w, double sign, VecX& rhs) {
  const int nf = state.n_faces();
  std::vector<std::array<Vec3, 3>> contrib(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    const double wint = state.face_area[f] * (w[fc[0]] + w[fc[1]] + w[fc[2]]) / 3.0;
    for (int i = 0; i < 3; ++i) contrib[f][i] = sign * wint * (C[f] * state.face_grad[f][i]);
  });
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) rhs[3 * fc[i] + c] += contrib[f][i](c);
  }
}

// rhs_i += sign * int w (grad s) . psi_i for a P1 scalar s (per-face constant
// gradient) and P1 weight w.
void add_known_gradient_rhs(const SurfaceState& state, const VecX& s, const VecX& w, double sign,
                            VecX& rhs) {
  constexpr double kLambda[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
  const std::vector<Vec3> gs = face_gradients(state, s);
  const int nf = state.n_faces();
  std::vector<std::array<Vec3, 3>> contrib(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    const auto& fc = state.mesh->faces[f];
    const double a3 = state.face_area[f] / 3.0;
    for (int i = 0; i < 3; ++i) {
      double wsum = 0.0;
      for (int q = 0; q < 3; ++q) {
        double wq = 0.0;
        for (int k = 0; k < 3; ++k) wq += kLambda[q][k] * w[fc[k]];
        wsum += a3 * wq * kLambda[q][i];
      }
      contrib[f][i] = sign * wsum * gs[f];
    }
  });
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) rhs[3 * fc[i] + c] += contrib[f][i](c);
  }
}

VecX pointwise_product(const VecX& a, const VecX& b) { return a.cwiseProduct(b); }


double lumped_minv_norm(const SliceOps& ops, const VecX& r) {
  const VecX& ml = ops.Ml.mat.diagonal();
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) s += r[i] * r[i] / ml[i];
  return std::sqrt(s);
}

// Assemble and solve the stabilized saddle system
//   [ A    B^T ] [V ]   [rhs]
//   [ B   -S   ] [pi] = [0  ]
// with S = gamma_h2 * K_p (momentum row A V + B^T pi = rhs, constraint row
// B V - gamma h^2 K pi = 0). The pressure block must carry the adjoint sign
// of the momentum coupling, or the Schur complement loses definiteness.
// The pressure gauge is fixed by pinning one dof (a dense mean-zero Lagrange
// row would ruin the LU fill-in); the solved pressure is shifted to mean
// zero afterwards.
StokesResult solve_saddle(const SurfaceState& state, const SliceOps& ops, const SpMat& A,
                          const VecX& rhs_v, double gamma_h2, const SolveOptions& sopts,
                          const SaddleCachePtr& cache) {
  const int nv = state.n_vertices();
  const int nV = 3 * nv;
  const int ntot = nV + nv;
  const int pin = nV;  // pressure dof 0

  std::vector<Triplet> trips;
  trips.reserve(A.nonZeros() + 2 * ops.B.mat.nonZeros() + ops.K.mat.nonZeros() + 1);
  for (int col = 0; col < A.outerSize(); ++col)
    for (SpMat::InnerIterator it(A, col); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), col, it.value());
  for (int col = 0; col < ops.B.mat.outerSize(); ++col)
    for (SpMat::InnerIterator it(ops.B.mat, col); it; ++it) {
      // B rows are scalar (pressure) indices, cols velocity indices.
      const int prow = nV + static_cast<int>(it.row());
      if (prow != pin) trips.emplace_back(prow, col, it.value());
      trips.emplace_back(col, prow, it.value());
    }
  if (gamma_h2 > 0.0)
    for (int col = 0; col < ops.K.mat.outerSize(); ++col)
      for (SpMat::InnerIterator it(ops.K.mat, col); it; ++it) {
        const int prow = nV + static_cast<int>(it.row());
        if (prow != pin) trips.emplace_back(prow, nV + col, -gamma_h2 * it.value());
      }
  trips.emplace_back(pin, pin, 1.0);

  SparseOperator sys;
  sys.mat = SpMat(ntot, ntot);
  sys.mat.setFromTriplets(trips.begin(), trips.end());
  sys.mat.makeCompressed();

  VecX rhs = VecX::Zero(ntot);
  rhs.head(nV) = rhs_v;

  VecX sol;
  const bool force_direct = sopts.method == SolveMethod::DirectLU ||
                            sopts.method == SolveMethod::DirectLDLT;
  if (force_direct || ntot <= kSaddleDirectLimit || !cache) {
    SolveOptions direct = sopts;
    direct.method = SolveMethod::DirectLU;  // coupled block is nonsymmetric
    sol = solve_linear(sys, rhs, direct);
  } else {
    auto rebuild = [&] {
      cache->ilut.setFillfactor(14);
      cache->ilut.setDroptol(1e-5);
      cache->ilut.compute(sys.mat);
      cache->ready = true;
      cache->age = 0;
    };
    if (!cache->ready || cache->age >= cache->refresh_every) rebuild();
    const double tol = std::min(1e-11, sopts.tol);
    auto attempt = [&](double* err) {
      Eigen::BiCGSTAB<SpMat, LaggedPreconditioner> bi;
      bi.preconditioner().inner = &cache->ilut;
      bi.setTolerance(tol);
      bi.setMaxIterations(300);
      bi.compute(sys.mat);
      sol = bi.solve(rhs);
      *err = bi.error();
      return bi.info() == Eigen::Success || bi.error() <= 10 * sopts.tol;
    };
    double err = 0;
    if (!attempt(&err)) {
      rebuild();  // stale preconditioner: refresh and retry once
      if (!attempt(&err))
        throw SolverError("stokes saddle: BiCGSTAB stalled at error " + std::to_string(err),
                          {err});
    }
    ++cache->age;
  }

  StokesResult out;
  out.V = Field::vector(sol.head(nV), true);
  out.pi = sol.segment(nV, nv);
  out.pi.array() -= ops.pressure_gauge.dot(out.pi) / state.total_area;  // mean-zero gauge
  VecX cres = ops.B.mat * out.V.coeffs - gamma_h2 * (ops.K.mat * out.pi);
  cres[0] = 0.0;  // pinned row replaced the constraint at dof 0
  out.constraint_residual = lumped_minv_norm(ops, cres);
  return out;
}

}  // namespace

ChResult step_cahn_hilliard(const SurfaceState& state, const SliceOps& ops, const Field& v_adv,
                            const VecX& phi_tilde, const VecX& mass_anchor, double dt,
                            const PotentialSpec& pot, const SolveOptions& sopts,
                            const SaddleCachePtr& cache) {
  const int nv = state.n_vertices();
  const VecX ml = ops.Ml.mat.diagonal();

  VecX conv_d2(nv), lin_rhs(nv);
  parallel_for(nv, [&](std::ptrdiff_t v) {
    const double p = phi_tilde[v];
    conv_d2[v] = psi_convex_d2(pot, p);
    lin_rhs[v] = psi_convex_d1(pot, p) - conv_d2[v] * p + psi_concave_d1(pot, p);
  });

  const SparseOperator C = assemble_advection(state, v_adv, 1.0, Arity::Scalar);

  // The mixed system
  //   (1/dt) Ml phi + K mu            = anchor/dt + C^T phi_tilde
  //   -K phi - Ml D phi + Ml mu       = Ml r          (D = Psi_c''(phi_tilde))
  // has a diagonal mu-pivot, so mu is eliminated exactly:
  //   [(1/dt) Ml + K Ml^-1 K + K D] phi = anchor/dt + C^T phi_tilde - K r.
  const VecX mlinv = ml.cwiseInverse();
  SparseOperator sys;
  sys.mat = ops.K.mat * mlinv.asDiagonal() * ops.K.mat;
  sys.mat += SpMat(ops.K.mat * conv_d2.asDiagonal());
  SpMat mdt(nv, nv);
  {
    std::vector<Triplet> trips;
    trips.reserve(nv);
    for (int i = 0; i < nv; ++i) trips.emplace_back(i, i, ml[i] / dt);
    mdt.setFromTriplets(trips.begin(), trips.end());
  }
  sys.mat += mdt;
  sys.mat.makeCompressed();

  VecX rhs = mass_anchor / dt + C.mat.transpose() * phi_tilde - ops.K.mat * lin_rhs;

  VecX phi;
  const bool force_direct = sopts.method == SolveMethod::DirectLU ||
                            sopts.method == SolveMethod::DirectLDLT;
  if (force_direct || nv <= kSaddleDirectLimit || !cache) {
    SolveOptions direct = sopts;
    direct.method = SolveMethod::DirectLU;  // K D breaks symmetry
    phi = solve_linear(sys, rhs, direct);
  } else {
    auto rebuild = [&] {
      cache->ilut.setFillfactor(12);
      cache->ilut.setDroptol(1e-7);
      cache->ilut.compute(sys.mat);
      cache->ready = true;
      cache->age = 0;
    };
    if (!cache->ready || cache->age >= cache->refresh_every) rebuild();
    auto attempt = [&](double* err) {
      Eigen::BiCGSTAB<SpMat, LaggedPreconditioner> bi;
      bi.preconditioner().inner = &cache->ilut;
      bi.setTolerance(1e-13);
      bi.setMaxIterations(400);
      bi.compute(sys.mat);
      phi = bi.solve(rhs);
      *err = bi.error();
      return bi.info() == Eigen::Success || bi.error() <= 10 * sopts.tol;
    };
    double err = 0;
    if (!attempt(&err)) {
      rebuild();
      if (!attempt(&err))
        throw SolverError("cahn-hilliard solve stalled at error " + std::to_string(err), {err});
    }
    ++cache->age;
  }

  ChResult out;
  out.phi = phi;
  out.mu = mlinv.cwiseProduct(ops.K.mat * phi) + conv_d2.cwiseProduct(phi) + lin_rhs;
  if (pot.kind == PotentialSpec::Kind::RegularizedLog) {
    for (int v = 0; v < nv; ++v) {
      if (out.phi[v] > 1.0) {
        out.phi[v] = 1.0;
        ++out.clamp_events;
      } else if (out.phi[v] < -1.0) {
        out.phi[v] = -1.0;
        ++out.clamp_events;
      }
    }
  }
  return out;
}

StokesResult step_stokes(const SurfaceState& state, const SliceOps& ops, const VecX& phi,
                         const VecX& mu, const Field& V_tilde, const Field& V_wind,
                         const Field& u_hat, const Field& du_hat_dt, const MaterialSpec& mat,
                         const StokesParams& prm) {
  const int nv = state.n_vertices();
  const VecX rho = density(mat, phi);
  long clamps = 0;
  const VecX nu = viscosity(mat, phi, &clamps);
  const Field jrho = flux_jrho(state, mu, mat);

  // Lagged advection wind rho*V + J_rho + rho*u_hat.
  Field wind = Field::vector_zero(nv, false);
  parallel_for(nv, [&](std::ptrdiff_t i) {
    const int v = static_cast<int>(i);
    wind.set(v, rho[v] * V_wind.at(v) + jrho.at(v) + rho[v] * u_hat.at(v));
  });

  const SparseOperator Mrho = assemble_mass(state, Weight(rho), Arity::Vector3, false, 1e-14);
  const SparseOperator Adef = assemble_deformation(state, Weight(nu), prm.beta, mat.nu_floor);
  const SparseOperator N = assemble_advection(state, wind, 1.0, Arity::Vector3);
  const VecX rho_vn = pointwise_product(rho, state.v_n);
  const SparseOperator TH = assemble_tensor_mass(state, state.weingarten, Weight(rho_vn));
  const std::vector<Mat3> grad_uhat = face_vector_gradients(state, u_hat);
  const SparseOperator TG = assemble_tensor_mass(state, grad_uhat, Weight(rho));

  SpMat A = Mrho.mat / prm.dt;
  A += Adef.mat;
  A += N.mat;
  A += TH.mat;
  A += TG.mat;

  // Right-hand side.
  VecX rhs = Mrho.mat * V_tilde.coeffs / prm.dt;
  rhs += korteweg_rhs(state, phi);

  // -v_n H J_rho and -rho v_n H u_hat (TH already carries rho v_n).
  {
    const SparseOperator THJ = assemble_tensor_mass(state, state.weingarten, Weight(state.v_n));
    rhs -= THJ.mat * jrho.coeffs;
  }
  rhs -= TH.mat * u_hat.coeffs;

  // -((rho u_hat + J_rho) . grad) u_hat.
  {
    Field carrier = Field::vector_zero(nv, false);
    parallel_for(nv, [&](std::ptrdiff_t i) {
      const int v = static_cast<int>(i);
      carrier.set(v, rho[v] * u_hat.at(v) + jrho.at(v));
    });
    const SparseOperator Tc = assemble_tensor_mass(state, grad_uhat, 1.0);
    rhs -= Tc.mat * carrier.coeffs;
  }

  // +2 P div(nu E_S(u_hat)) weakly: -2 int nu E_S(u_hat):E_S(psi).
  {
    const SparseOperator Adef0 = assemble_deformation(state, Weight(nu), 0.0, mat.nu_floor);
    rhs -= Adef0.mat * u_hat.coeffs;
  }

  // +2 P div(nu v_n H) weakly: -2 int nu v_n H : grad psi.
  add_tensor_gradient_rhs(state, state.weingarten, 2.0 * pointwise_product(nu, state.v_n), -1.0,
                          rhs);

  // +(rho/2) grad(v_n^2).
  add_known_gradient_rhs(state, pointwise_product(state.v_n, state.v_n), rho, 0.5, rhs);

  // -rho P dt_uhat.
  rhs -= Mrho.mat * du_hat_dt.coeffs;

  return solve_saddle(state, ops, A, rhs, prm.gamma_h2, prm.solve, prm.cache);
}

Field stokes_resolvent(const SurfaceState& state, const SliceOps& ops, const VecX& phi,
                       const Field& f, double omega, const MaterialSpec& mat,
                       const StokesParams& prm) {
  if (!(omega > 0)) throw ContractViolation("stokes_resolvent: omega must be positive");
  if (f.arity != Arity::Vector3)
    throw ContractViolation("stokes_resolvent: vector forcing expected");
  const VecX nu = viscosity(mat, phi);
  const SparseOperator Adef = assemble_deformation(state, Weight(nu), prm.beta, mat.nu_floor);
  SpMat A = Adef.mat + omega * ops.Mvec.mat;
  VecX rhs = ops.Mvec.mat * f.coeffs;
  return solve_saddle(state, ops, A, rhs, prm.gamma_h2, prm.solve, prm.cache).V;
}

TransportResult transport_step(const StepState& prev, const FlowFrame& frame,
                               const SurfaceState& new_state, double tangency_tol) {
  (void)new_state;
  TransportResult out;
  // Project first: the penalty method leaves an O(1/beta) normal defect that
  // the Piola map's tangency contract would reject.
  Field Vt = project_tangential(prev.surf, prev.V);
  out.V_tilde = piola_push(frame, Vt, prev.surf, tangency_tol);
  out.phi_tilde = prev.phi;  // nodal carryover
  return out;
}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  saddle_cache_ = make_saddle_cache();
  ch_cache_ = make_saddle_cache();
  preset_ = cfg_.geometry_preset();
  mat_ = cfg_.material_spec();
  pot_ = cfg_.potential_spec();
  mesh_ = make_icosphere(cfg_.subdivisions, cfg_.radius);
  initialize();
}

void Simulator::initialize() {
  cur_.surf = compute_surface_state(mesh_, mesh_.vertices, 0.0, preset_);
  ops_ = SliceOps::build(cur_.surf);
  h_ = mean_edge_length(mesh_, cur_.surf.positions);

  cur_.phi = eval_phi0(cfg_, cur_.surf);
  cur_.mu = chemical_potential(cur_.surf, ops_, cur_.phi, pot_).coeffs;

  const Field v0 = eval_v0(cfg_, cur_.surf);
  cur_.V = helmholtz_project(cur_.surf, ops_, v0, cfg_.solve_options()).div_free;
  const LiftResult lift = harmonic_lift(cur_.surf, ops_, cfg_.solve_options());
  cur_.u_hat = lift.u_hat;
  cur_.v_total = Field::vector(cur_.V.coeffs + cur_.u_hat.coeffs, true);
  cur_.pi = VecX::Zero(mesh_.n_vertices());
  cur_.div_residual = lumped_minv_norm(ops_, ops_.B.mat * cur_.V.coeffs) /
                      std::max(1.0, l2_norm(cur_.surf, cur_.V));
  if (cfg_.monitor_separation)
    cur_.separation_flag = cur_.phi.cwiseAbs().maxCoeff() > 1.0 - cfg_.delta0;
}

double Simulator::penalty_beta() const {
  return cfg_.penalty_beta > 0 ? cfg_.penalty_beta : 100.0 * mat_.nu_max() / h_;
}

double Simulator::gamma_h2() const { return cfg_.stab_gamma * h_ * h_; }

void Simulator::step() {
  const double dt = cfg_.dt;
  const VecX mass_anchor = ops_.Ml.mat.diagonal().cwiseProduct(cur_.phi);

  // Geometry advance and transport.
  std::vector<Vec3> new_pos = advance_positions(cur_.surf, preset_, dt, cfg_.min_quality);
  SurfaceState new_state =
      compute_surface_state(mesh_, std::move(new_pos), cur_.surf.t + dt, preset_);
  const FlowFrame frame =
      compute_flow_frame(mesh_, cur_.surf.positions, new_state.positions, cur_.surf, new_state);
  TransportResult tr = transport_step(cur_, frame, new_state, cfg_.tangency_tol);

  SliceOps new_ops = SliceOps::build(new_state);
  h_ = mean_edge_length(mesh_, new_state.positions);

  const LiftResult lift = harmonic_lift(new_state, new_ops, cfg_.solve_options());
  Field dudt = Field::vector_zero(mesh_.n_vertices(), true);
  parallel_for(mesh_.n_vertices(), [&](std::ptrdiff_t i) {
    const int v = static_cast<int>(i);
    dudt.set(v, new_state.projector[v] * ((lift.u_hat.at(v) - cur_.u_hat.at(v)) / dt));
  });

  StokesParams sp;
  sp.dt = dt;
  sp.beta = penalty_beta();
  sp.gamma_h2 = gamma_h2();
  sp.solve = cfg_.solve_options();
  sp.cache = saddle_cache_;

  // Picard sweeps over {Cahn-Hilliard, Stokes}.
  Field V_iter = tr.V_tilde;
  VecX phi_iter = tr.phi_tilde;
  ChResult ch;
  StokesResult stk;
  double rel_update = 0.0;
  int sweeps = 0;
  for (int k = 0; k < cfg_.picard_max; ++k) {
    Field v_adv = Field::vector(V_iter.coeffs + lift.u_hat.coeffs, true);
    ch = step_cahn_hilliard(new_state, new_ops, v_adv, tr.phi_tilde, mass_anchor, dt, pot_,
                            cfg_.solve_options(), ch_cache_);
    stk = step_stokes(new_state, new_ops, ch.phi, ch.mu, tr.V_tilde, V_iter, lift.u_hat, dudt,
                      mat_, sp);
    const double vn = l2_norm(new_state, stk.V) + 1e-30;
    const double pn = std::sqrt(ch.phi.dot(new_ops.Ml.mat * ch.phi)) + 1e-30;
    Field dV = Field::vector(stk.V.coeffs - V_iter.coeffs);
    VecX dphi = ch.phi - phi_iter;
    rel_update = l2_norm(new_state, dV) / vn + std::sqrt(dphi.dot(new_ops.Ml.mat * dphi)) / pn;
    V_iter = stk.V;
    phi_iter = ch.phi;
    ++sweeps;
    if (rel_update < cfg_.picard_tol) break;
  }
  if (cfg_.picard_strict && sweeps == cfg_.picard_max && rel_update > 10.0 * cfg_.picard_tol)
    throw StepError("picard iteration stalled at relative update " + std::to_string(rel_update) +
                    " after " + std::to_string(sweeps) + " sweeps");

  const long clamp_total = cur_.clamp_events + ch.clamp_events;
  cur_.surf = std::move(new_state);
  cur_.V = stk.V;
  cur_.u_hat = lift.u_hat;
  cur_.v_total = Field::vector(stk.V.coeffs + lift.u_hat.coeffs, true);
  cur_.pi = stk.pi;
  cur_.phi = ch.phi;
  cur_.mu = ch.mu;
  cur_.picard_iters = sweeps;
  cur_.picard_residual = rel_update;
  cur_.clamp_events = clamp_total;
  cur_.div_residual = stk.constraint_residual / std::max(1.0, l2_norm(cur_.surf, cur_.V));
  if (cfg_.monitor_separation)
    cur_.separation_flag = cur_.phi.cwiseAbs().maxCoeff() > 1.0 - cfg_.delta0;
  ops_ = std::move(new_ops);
  ++step_;
}

}  // namespace sphase
