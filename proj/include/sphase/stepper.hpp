#pragma once

#include "sphase/config.hpp"

#include <memory>
#include "sphase/piola.hpp"
#include "sphase/projector.hpp"

namespace sphase {

// Solver unknowns on one slice.
struct StepState {
  SurfaceState surf;
  Field V;        // weakly divergence-free tangential velocity
  Field u_hat;    // harmonic lift
  Field v_total;  // V + u_hat
  VecX pi;        // pressure, mean zero
  VecX phi;
  VecX mu;
  int picard_iters = 0;
  double picard_residual = 0.0;
  long clamp_events = 0;       // cumulative over the run
  bool separation_flag = false;
  double div_residual = 0.0;   // constraint-row residual of the Stokes solve
};

// Reusable preconditioner state for the stabilized saddle solves. Large
// systems are solved by ILUT-preconditioned BiCGSTAB; the preconditioner is
// refreshed on a fixed step schedule (the matrix drifts slowly along the
// evolution) and rebuilt immediately whenever the iteration stalls.
struct SaddleCache;
using SaddleCachePtr = std::shared_ptr<SaddleCache>;
SaddleCachePtr make_saddle_cache();

struct ChResult {
  VecX phi, mu;
  long clamp_events = 0;
};

// Semi-implicit mixed Cahn-Hilliard step in conservative form:
//   (1/dt)(Ml phi - mass_anchor) + K mu - C(v)^T phi_tilde = 0
//   Ml mu = K phi + Ml [Psi_c'(phi_tilde) + Psi_c''(phi_tilde)(phi - phi_tilde)
//                       + Psi_e'(phi_tilde)]
// mass_anchor is Ml_old .* phi_old from the previous slice, which makes the
// lumped mass integral of phi exactly conserved for any advection wind.
ChResult step_cahn_hilliard(const SurfaceState& state, const SliceOps& ops, const Field& v_adv,
                            const VecX& phi_tilde, const VecX& mass_anchor, double dt,
                            const PotentialSpec& pot, const SolveOptions& sopts,
                            const SaddleCachePtr& cache = nullptr);

struct StokesParams {
  double dt = 1e-3;
  double beta = 0.0;      // tangency penalty
  double gamma_h2 = 0.0;  // pressure stabilization coefficient gamma * h^2
  SolveOptions solve;
  SaddleCachePtr cache;   // optional
};

struct StokesResult {
  Field V;
  VecX pi;
  double constraint_residual = 0.0;  // ||B V - gamma h^2 K pi|| (lumped M^-1 norm)
};

// One linearized momentum solve of the divergence-free formulation: the
// advection wind (rho V_wind + J_rho + rho u_hat) is lagged (Picard), the
// mass/deformation/curvature blocks implicit, and the lift forcing collected
// on the right-hand side.
StokesResult step_stokes(const SurfaceState& state, const SliceOps& ops, const VecX& phi,
                         const VecX& mu, const Field& V_tilde, const Field& V_wind,
                         const Field& u_hat, const Field& du_hat_dt, const MaterialSpec& mat,
                         const StokesParams& prm);

// Divergence-constrained resolvent problem
//   2 int nu(phi) E_S(u):E_S(eta) + omega int u.eta = int f.eta
// over weakly divergence-free eta; omega > 0 required.
Field stokes_resolvent(const SurfaceState& state, const SliceOps& ops, const VecX& phi,
                       const Field& f, double omega, const MaterialSpec& mat,
                       const StokesParams& prm);

// Transport of the unknowns to a freshly advanced slice: V by the Piola
// pushforward (tangentially projected first), phi by nodal carryover.
struct TransportResult {
  Field V_tilde;
  VecX phi_tilde;
};
TransportResult transport_step(const StepState& prev, const FlowFrame& frame,
                               const SurfaceState& new_state, double tangency_tol);

// Owns the evolving mesh and advances the coupled system.
class Simulator {
public:
  explicit Simulator(SimConfig cfg);
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const SimConfig& config() const { return cfg_; }
  const TriMesh& mesh() const { return mesh_; }
  const StepState& current() const { return cur_; }
  const SliceOps& slice_ops() const { return ops_; }
  int step_index() const { return step_; }

  // Geometry advance, transport, harmonic lift, then the Picard loop over
  // {Cahn-Hilliard, Stokes}. Throws StepError on non-convergence in strict
  // mode and propagates geometry/solver errors.
  void step();

  double penalty_beta() const;
  double gamma_h2() const;

private:
  SimConfig cfg_;
  TriMesh mesh_;
  GeometryPreset preset_;
  MaterialSpec mat_;
  PotentialSpec pot_;
  StepState cur_;
  SliceOps ops_;
  SaddleCachePtr saddle_cache_;
  SaddleCachePtr ch_cache_;
  double h_ = 0.0;  // mean edge length of the current slice
  int step_ = 0;

  void initialize();
};

}  // namespace sphase
