#include "sphase/physics.hpp"

#include <cmath>

namespace sphase {

namespace {

// Flory-Huggins entropy part, valid for |s| < 1.
double ent(double theta, double s, int k) {
  switch (k) {
    case 0: return 0.5 * theta * ((1 + s) * std::log(1 + s) + (1 - s) * std::log(1 - s));
    case 1: return 0.5 * theta * (std::log(1 + s) - std::log(1 - s));
    case 2: return theta / (1 - s * s);
    case 3: return theta * 2 * s / ((1 - s * s) * (1 - s * s));
    case 4: {
      const double d = 1 - s * s;
      return theta * (2 + 6 * s * s) / (d * d * d);
    }
  }
  return 0.0;
}

// k-th derivative of the regularized convex part: exact inside the window,
// Taylor continuation of order `order` outside (C^order at the junction).
double convex_dk(const PotentialSpec& spec, double s, int k) {
  const double edge = 1.0 - spec.delta_reg;
  const double a = std::abs(s);
  const double sign = (s < 0 && (k % 2 == 1)) ? -1.0 : 1.0;  // even function
  if (a <= edge) return sign * ent(spec.theta, a, k);
  const double u = a - edge;
  const int order = spec.taylor_order;
  double val = 0.0, upow = 1.0, fact = 1.0;
  for (int j = 0; j + k <= order; ++j) {
    if (j > 0) {
      upow *= u;
      fact *= j;
    }
    val += ent(spec.theta, edge, k + j) * upow / fact;
  }
  return sign * val;
}

double quartic_convex_dk(double s, int k) {
  switch (k) {
    case 0: return 0.25 * (s * s * s * s + 1.0);
    case 1: return s * s * s;
    case 2: return 3 * s * s;
    case 3: return 6 * s;
  }
  return 0.0;
}

double concave_coeff(const PotentialSpec& spec) {
  return spec.kind == PotentialSpec::Kind::RegularizedLog ? spec.theta_c : 1.0;
}

}  // namespace

double psi_convex_eval(const PotentialSpec& spec, double s) {
  return spec.kind == PotentialSpec::Kind::Quartic ? quartic_convex_dk(s, 0)
                                                   : convex_dk(spec, s, 0);
}
double psi_convex_d1(const PotentialSpec& spec, double s) {
  return spec.kind == PotentialSpec::Kind::Quartic ? quartic_convex_dk(s, 1)
                                                   : convex_dk(spec, s, 1);
}
double psi_convex_d2(const PotentialSpec& spec, double s) {
  return spec.kind == PotentialSpec::Kind::Quartic ? quartic_convex_dk(s, 2)
                                                   : convex_dk(spec, s, 2);
}
double psi_concave_d1(const PotentialSpec& spec, double s) { return -concave_coeff(spec) * s; }

double psi_eval(const PotentialSpec& spec, double s) {
  return psi_convex_eval(spec, s) - 0.5 * concave_coeff(spec) * s * s;
}
double psi_d1(const PotentialSpec& spec, double s) {
  return psi_convex_d1(spec, s) - concave_coeff(spec) * s;
}
double psi_d2(const PotentialSpec& spec, double s) {
  return psi_convex_d2(spec, s) - concave_coeff(spec);
}
double psi_d3(const PotentialSpec& spec, double s) {
  return spec.kind == PotentialSpec::Kind::Quartic ? quartic_convex_dk(s, 3)
                                                   : convex_dk(spec, s, 3);
}

double MaterialSpec::nu_max() const {
  switch (nu_profile) {
    case NuProfile::Constant: return nu0;
    case NuProfile::Affine: return std::max({nu0 + nu1, nu0 - nu1, nu_floor});
    case NuProfile::SmoothInterp: return std::max({nu0, nu1, nu_floor});
  }
  return nu0;
}

double density_scalar(const MaterialSpec& mat, double s) {
  return 0.5 * (mat.rho1 + mat.rho2) + 0.5 * (mat.rho2 - mat.rho1) * s;
}

double viscosity_scalar(const MaterialSpec& mat, double s, long* clamp_events) {
  double nu = mat.nu0;
  switch (mat.nu_profile) {
    case MaterialSpec::NuProfile::Constant: break;
    case MaterialSpec::NuProfile::Affine: nu = mat.nu0 + mat.nu1 * s; break;
    case MaterialSpec::NuProfile::SmoothInterp:
      nu = mat.nu0 + (mat.nu1 - mat.nu0) * 0.5 * (1.0 + std::tanh(2.0 * s));
      break;
  }
  if (nu < mat.nu_floor) {
    if (clamp_events) ++*clamp_events;
    nu = mat.nu_floor;
  }
  return nu;
}

VecX density(const MaterialSpec& mat, const VecX& phi) {
  VecX out(phi.size());
  parallel_for(phi.size(), [&](std::ptrdiff_t i) { out[i] = density_scalar(mat, phi[i]); });
  return out;
}

VecX viscosity(const MaterialSpec& mat, const VecX& phi, long* clamp_events) {
  VecX out(phi.size());
  std::vector<long> clamps(phi.size(), 0);
  parallel_for(phi.size(), [&](std::ptrdiff_t i) {
    long c = 0;
    out[i] = viscosity_scalar(mat, phi[i], &c);
    clamps[i] = c;
  });
  if (clamp_events)
    *clamp_events += std::accumulate(clamps.begin(), clamps.end(), 0L);
  return out;
}

Field chemical_potential(const SurfaceState& state, const SliceOps& ops, const VecX& phi,
                         const PotentialSpec& spec) {
  VecX k_phi = ops.K.mat * phi;
  VecX mu(phi.size());
  const VecX& ml = ops.Ml.mat.diagonal();
  parallel_for(phi.size(),
               [&](std::ptrdiff_t v) { mu[v] = k_phi[v] / ml[v] + psi_d1(spec, phi[v]); });
  (void)state;
  return Field::scalar(mu);
}

Field flux_jrho(const SurfaceState& state, const VecX& mu, const MaterialSpec& mat) {
  const double pref = -0.5 * (mat.rho1 - mat.rho2);
  if (pref == 0.0) return Field::vector_zero(state.n_vertices(), true);
  Field g = recover_gradient(state, mu, /*project=*/true);
  g.coeffs *= pref;
  return g;
}

VecX korteweg_rhs(const SurfaceState& state, const VecX& phi) {
  const std::vector<Vec3> g = face_gradients(state, phi);
  const int nf = state.n_faces();
  std::vector<std::array<Vec3, 3>> contrib(nf);
  parallel_for(nf, [&](std::ptrdiff_t f) {
    for (int i = 0; i < 3; ++i)
      contrib[f][i] = state.face_area[f] * g[f].dot(state.face_grad[f][i]) * g[f];
  });
  VecX rhs = VecX::Zero(3 * state.n_vertices());
  for (int f = 0; f < nf; ++f) {
    const auto& fc = state.mesh->faces[f];
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) rhs[3 * fc[i] + c] += contrib[f][i](c);
  }
  return rhs;
}

}  // namespace sphase
