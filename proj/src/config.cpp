#include "sphase/config.hpp"

#include <cmath>
#include <sstream>

namespace sphase {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  return out;
}

double to_num(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number '" + s + "' in " + what);
  }
}

}  // namespace

GeometryPreset SimConfig::geometry_preset() const {
  GeometryPreset p;
  if (preset == "stationary_sphere")
    p.kind = GeometryPreset::Kind::StationarySphere;
  else if (preset == "oscillating_harmonic_sphere")
    p.kind = GeometryPreset::Kind::OscillatingHarmonicSphere;
  else if (preset == "custom_normal_field") {
    p.kind = GeometryPreset::Kind::CustomNormalField;
    // Default hook: a gentle non-harmonic zonal profile.
    const double freq = frequency;
    p.custom_vn = [freq](const Vec3& x, double t) {
      const Vec3 u = x.normalized();
      return std::cos(freq * t) * u.z() * (u.z() * u.z() - 0.3);
    };
  } else
    throw ConfigError("geometry.preset: unknown preset '" + preset + "'");
  p.amplitude = amplitude;
  p.frequency = frequency;
  p.radius = radius;
  p.l = harmonic_l;
  p.m = harmonic_m;
  return p;
}

MaterialSpec SimConfig::material_spec() const {
  MaterialSpec m;
  m.rho1 = rho1;
  m.rho2 = rho2;
  if (nu_profile == "constant")
    m.nu_profile = MaterialSpec::NuProfile::Constant;
  else if (nu_profile == "affine")
    m.nu_profile = MaterialSpec::NuProfile::Affine;
  else if (nu_profile == "smooth_interp")
    m.nu_profile = MaterialSpec::NuProfile::SmoothInterp;
  else
    throw ConfigError("material.nu_profile: unknown profile '" + nu_profile + "'");
  m.nu0 = nu0;
  m.nu1 = nu1;
  m.nu_floor = nu_floor;
  return m;
}

PotentialSpec SimConfig::potential_spec() const {
  PotentialSpec p;
  if (potential == "regularized_log")
    p.kind = PotentialSpec::Kind::RegularizedLog;
  else if (potential == "quartic")
    p.kind = PotentialSpec::Kind::Quartic;
  else
    throw ConfigError("potential.kind: unknown kind '" + potential + "'");
  p.theta = theta;
  p.theta_c = theta_c;
  p.delta_reg = delta_reg;
  p.taylor_order = taylor_order;
  return p;
}

SolveOptions SimConfig::solve_options() const {
  SolveOptions o;
  if (solver == "auto")
    o.method = SolveMethod::Auto;
  else if (solver == "direct")
    o.method = SolveMethod::DirectLU;
  else if (solver == "cg")
    o.method = SolveMethod::CG;
  else if (solver == "minres")
    o.method = SolveMethod::MINRES;
  else
    throw ConfigError("numerics.solver: unknown method '" + solver + "'");
  o.tol = solver_tol;
  o.max_iter = solver_max_iter;
  return o;
}

void SimConfig::validate() const {
  geometry_preset();
  material_spec();
  potential_spec();
  solve_options();
  auto require = [](bool ok, const std::string& key, const std::string& why) {
    if (!ok) throw ConfigError(key + ": " + why);
  };
  require(subdivisions >= 0 && subdivisions <= 7, "geometry.subdivisions", "must be in [0,7]");
  require(radius > 0, "geometry.radius", "must be positive");
  require(harmonic_l >= 0 && harmonic_l <= 3 && std::abs(harmonic_m) <= harmonic_l,
          "geometry.l/geometry.m", "need 0 <= l <= 3 and |m| <= l");
  require(rho1 > 0, "material.rho1", "must be positive");
  require(rho2 > 0, "material.rho2", "must be positive");
  require(nu_floor > 0, "material.nu_floor", "must be positive");
  require(mobility == 1.0, "material.mobility", "mobility is fixed to 1");
  require(theta > 0, "potential.theta", "must be positive");
  require(theta_c > 0, "potential.theta_c", "must be positive");
  require(delta_reg > 0 && delta_reg < 0.1, "potential.delta_reg", "must be in (0, 0.1)");
  require(taylor_order == 2 || taylor_order == 4, "potential.taylor_order", "must be 2 or 4");
  require(dt > 0, "numerics.dt", "must be positive");
  require(dt <= dt_max, "numerics.dt", "exceeds numerics.dt_max");
  require(t_end >= 0, "numerics.t_end", "must be nonnegative");
  require(omega >= 0, "numerics.omega", "must be nonnegative");
  require(picard_max >= 1, "numerics.picard_max", "must be at least 1");
  require(picard_tol > 0, "numerics.picard_tol", "must be positive");
  require(stab_gamma >= 0, "numerics.stab_gamma", "must be nonnegative");
  require(solver_tol > 0, "numerics.solver_tol", "must be positive");
  require(min_quality > 0 && min_quality < 1, "numerics.min_quality", "must be in (0,1)");
  require(delta0 > 0 && delta0 < 0.5, "numerics.delta0", "must be in (0, 0.5)");
  require(cadence >= 1, "output.cadence", "must be at least 1");

  // Initial-data expressions must parse; separation is checked on evaluation.
  const auto p = split(phi0, ':');
  if (p.empty() || (p[0] != "constant" && p[0] != "harmonic"))
    throw ConfigError("numerics.phi0: unknown expression '" + phi0 + "'");
  const auto v = split(v0, ':');
  if (v.empty() || (v[0] != "zero" && v[0] != "rotation" && v[0] != "harmonic_grad"))
    throw ConfigError("numerics.v0: unknown expression '" + v0 + "'");
}

VecX eval_phi0(const SimConfig& cfg, const SurfaceState& state) {
  const auto parts = split(cfg.phi0, ':');
  VecX phi(state.n_vertices());
  if (parts[0] == "constant") {
    if (parts.size() != 2) throw ConfigError("numerics.phi0: constant:<value>");
    phi.setConstant(to_num(parts[1], "numerics.phi0"));
  } else if (parts[0] == "harmonic") {
    if (parts.size() != 4 && parts.size() != 5)
      throw ConfigError("numerics.phi0: harmonic:<l>:<m>:<amp>[:<offset>]");
    const int l = static_cast<int>(to_num(parts[1], "numerics.phi0"));
    const int m = static_cast<int>(to_num(parts[2], "numerics.phi0"));
    const double amp = to_num(parts[3], "numerics.phi0");
    const double off = parts.size() == 5 ? to_num(parts[4], "numerics.phi0") : 0.0;
    for (int v = 0; v < state.n_vertices(); ++v)
      phi[v] = off + amp * solid_harmonic(l, m, state.positions[v]);
  } else {
    throw ConfigError("numerics.phi0: unknown expression '" + cfg.phi0 + "'");
  }
  if (cfg.monitor_separation) {
    const double bound = 1.0 - 2.0 * cfg.delta0;
    const double mx = phi.cwiseAbs().maxCoeff();
    if (mx > bound + 1e-12)
      throw ConfigError("numerics.phi0: max|phi0| = " + std::to_string(mx) +
                        " violates separation bound 1 - 2*delta0 = " + std::to_string(bound));
  }
  return phi;
}

Field eval_v0(const SimConfig& cfg, const SurfaceState& state) {
  const auto parts = split(cfg.v0, ':');
  Field v = Field::vector_zero(state.n_vertices(), true);
  if (parts[0] == "zero") return v;
  if (parts[0] == "rotation") {
    if (parts.size() != 3) throw ConfigError("numerics.v0: rotation:<ax>,<ay>,<az>:<amp>");
    const auto ax = split(parts[1], ',');
    if (ax.size() != 3) throw ConfigError("numerics.v0: rotation axis needs 3 components");
    const Vec3 axis(to_num(ax[0], "numerics.v0"), to_num(ax[1], "numerics.v0"),
                    to_num(ax[2], "numerics.v0"));
    const double amp = to_num(parts[2], "numerics.v0");
    for (int i = 0; i < state.n_vertices(); ++i)
      v.set(i, state.projector[i] * (amp * axis.cross(state.positions[i])));
    return v;
  }
  if (parts[0] == "harmonic_grad") {
    if (parts.size() != 4) throw ConfigError("numerics.v0: harmonic_grad:<l>:<m>:<amp>");
    const int l = static_cast<int>(to_num(parts[1], "numerics.v0"));
    const int m = static_cast<int>(to_num(parts[2], "numerics.v0"));
    const double amp = to_num(parts[3], "numerics.v0");
    for (int i = 0; i < state.n_vertices(); ++i)
      v.set(i, state.projector[i] *
                   (amp * solid_harmonic_surface_grad(l, m, state.positions[i].normalized())));
    return v;
  }
  throw ConfigError("numerics.v0: unknown expression '" + cfg.v0 + "'");
}

}  // namespace sphase
