#include "sphase/io.hpp"

#include "sphase/oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace sphase {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct KeyBinding {
  enum class Type { Double, Int, Bool, String } type;
  std::function<void(SimConfig&, const std::string&, const std::string&)> set;
};

std::map<std::string, KeyBinding> key_table() {
  std::map<std::string, KeyBinding> t;
  auto num = [](double SimConfig::*field) {
    return KeyBinding{KeyBinding::Type::Double,
                      [field](SimConfig& c, const std::string& v, const std::string& key) {
                        try {
                          size_t pos = 0;
                          c.*field = std::stod(v, &pos);
                          if (pos != v.size()) throw std::invalid_argument(v);
                        } catch (const std::exception&) {
                          throw ConfigError(key + ": invalid number '" + v + "'");
                        }
                      }};
  };
  auto integer = [](int SimConfig::*field) {
    return KeyBinding{KeyBinding::Type::Int,
                      [field](SimConfig& c, const std::string& v, const std::string& key) {
                        try {
                          size_t pos = 0;
                          c.*field = std::stoi(v, &pos);
                          if (pos != v.size()) throw std::invalid_argument(v);
                        } catch (const std::exception&) {
                          throw ConfigError(key + ": invalid integer '" + v + "'");
                        }
                      }};
  };
  auto boolean = [](bool SimConfig::*field) {
    return KeyBinding{KeyBinding::Type::Bool,
                      [field](SimConfig& c, const std::string& v, const std::string& key) {
                        if (v == "true")
                          c.*field = true;
                        else if (v == "false")
                          c.*field = false;
                        else
                          throw ConfigError(key + ": expected true or false, got '" + v + "'");
                      }};
  };
  auto str = [](std::string SimConfig::*field) {
    return KeyBinding{KeyBinding::Type::String,
                      [field](SimConfig& c, const std::string& v, const std::string& key) {
                        (void)key;
                        c.*field = v;
                      }};
  };

  t["geometry.preset"] = str(&SimConfig::preset);
  t["geometry.subdivisions"] = integer(&SimConfig::subdivisions);
  t["geometry.radius"] = num(&SimConfig::radius);
  t["geometry.amplitude"] = num(&SimConfig::amplitude);
  t["geometry.frequency"] = num(&SimConfig::frequency);
  t["geometry.l"] = integer(&SimConfig::harmonic_l);
  t["geometry.m"] = integer(&SimConfig::harmonic_m);
  t["material.rho1"] = num(&SimConfig::rho1);
  t["material.rho2"] = num(&SimConfig::rho2);
  t["material.nu_profile"] = str(&SimConfig::nu_profile);
  t["material.nu0"] = num(&SimConfig::nu0);
  t["material.nu1"] = num(&SimConfig::nu1);
  t["material.nu_floor"] = num(&SimConfig::nu_floor);
  t["material.mobility"] = num(&SimConfig::mobility);
  t["potential.kind"] = str(&SimConfig::potential);
  t["potential.theta"] = num(&SimConfig::theta);
  t["potential.theta_c"] = num(&SimConfig::theta_c);
  t["potential.delta_reg"] = num(&SimConfig::delta_reg);
  t["potential.taylor_order"] = integer(&SimConfig::taylor_order);
  t["numerics.dt"] = num(&SimConfig::dt);
  t["numerics.t_end"] = num(&SimConfig::t_end);
  t["numerics.dt_max"] = num(&SimConfig::dt_max);
  t["numerics.omega"] = num(&SimConfig::omega);
  t["numerics.picard_max"] = integer(&SimConfig::picard_max);
  t["numerics.picard_tol"] = num(&SimConfig::picard_tol);
  t["numerics.picard_strict"] = boolean(&SimConfig::picard_strict);
  t["numerics.penalty_beta"] = num(&SimConfig::penalty_beta);
  t["numerics.stab_gamma"] = num(&SimConfig::stab_gamma);
  t["numerics.solver"] = str(&SimConfig::solver);
  t["numerics.solver_tol"] = num(&SimConfig::solver_tol);
  t["numerics.solver_max_iter"] = integer(&SimConfig::solver_max_iter);
  t["numerics.min_quality"] = num(&SimConfig::min_quality);
  t["numerics.monitor_separation"] = boolean(&SimConfig::monitor_separation);
  t["numerics.delta0"] = num(&SimConfig::delta0);
  t["numerics.tangency_tol"] = num(&SimConfig::tangency_tol);
  t["numerics.phi0"] = str(&SimConfig::phi0);
  t["numerics.v0"] = str(&SimConfig::v0);
  t["output.cadence"] = integer(&SimConfig::cadence);
  t["output.vtk"] = boolean(&SimConfig::vtk);
  return t;
}

const std::vector<std::string> kSections = {"geometry", "material", "potential", "numerics",
                                            "output"};

}  // namespace

SimConfig parse_config_string(const std::string& text, const std::string& origin) {
  static const std::map<std::string, KeyBinding> table = key_table();
  SimConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside quotes
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + ": key outside a section");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    const std::string full = section + "." + key;
    auto it = table.find(full);
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + full + "'");
    it->second.set(cfg, value, full);
  }
  cfg.validate();
  return cfg;
}

SimConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path.string());
}

std::string serialize_config(const SimConfig& c) {
  std::ostringstream o;
  o << "[geometry]\n";
  o << "preset = \"" << c.preset << "\"\n";
  o << "subdivisions = " << c.subdivisions << "\n";
  o << "radius = " << fmt17(c.radius) << "\n";
  o << "amplitude = " << fmt17(c.amplitude) << "\n";
  o << "frequency = " << fmt17(c.frequency) << "\n";
  o << "l = " << c.harmonic_l << "\n";
  o << "m = " << c.harmonic_m << "\n";
  o << "\n[material]\n";
  o << "rho1 = " << fmt17(c.rho1) << "\n";
  o << "rho2 = " << fmt17(c.rho2) << "\n";
  o << "nu_profile = \"" << c.nu_profile << "\"\n";
  o << "nu0 = " << fmt17(c.nu0) << "\n";
  o << "nu1 = " << fmt17(c.nu1) << "\n";
  o << "nu_floor = " << fmt17(c.nu_floor) << "\n";
  o << "mobility = " << fmt17(c.mobility) << "\n";
  o << "\n[potential]\n";
  o << "kind = \"" << c.potential << "\"\n";
  o << "theta = " << fmt17(c.theta) << "\n";
  o << "theta_c = " << fmt17(c.theta_c) << "\n";
  o << "delta_reg = " << fmt17(c.delta_reg) << "\n";
  o << "taylor_order = " << c.taylor_order << "\n";
  o << "\n[numerics]\n";
  o << "dt = " << fmt17(c.dt) << "\n";
  o << "t_end = " << fmt17(c.t_end) << "\n";
  o << "dt_max = " << fmt17(c.dt_max) << "\n";
  o << "omega = " << fmt17(c.omega) << "\n";
  o << "picard_max = " << c.picard_max << "\n";
  o << "picard_tol = " << fmt17(c.picard_tol) << "\n";
  o << "picard_strict = " << (c.picard_strict ? "true" : "false") << "\n";
  o << "penalty_beta = " << fmt17(c.penalty_beta) << "\n";
  o << "stab_gamma = " << fmt17(c.stab_gamma) << "\n";
  o << "solver = \"" << c.solver << "\"\n";
  o << "solver_tol = " << fmt17(c.solver_tol) << "\n";
  o << "solver_max_iter = " << c.solver_max_iter << "\n";
  o << "min_quality = " << fmt17(c.min_quality) << "\n";
  o << "monitor_separation = " << (c.monitor_separation ? "true" : "false") << "\n";
  o << "delta0 = " << fmt17(c.delta0) << "\n";
  o << "tangency_tol = " << fmt17(c.tangency_tol) << "\n";
  o << "phi0 = \"" << c.phi0 << "\"\n";
  o << "v0 = \"" << c.v0 << "\"\n";
  o << "\n[output]\n";
  o << "cadence = " << c.cadence << "\n";
  o << "vtk = " << (c.vtk ? "true" : "false") << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// VTK.
// ---------------------------------------------------------------------------

void write_vtk(const StepState& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vtk: cannot open " + path.string());
  const SurfaceState& st = s.surf;
  const int nv = st.n_vertices();
  const int nf = st.n_faces();
  out << "# vtk DataFile Version 3.0\n";
  out << "surface two-phase flow snapshot t = " << fmt17(st.t) << "\n";
  out << "ASCII\nDATASET POLYDATA\n";
  out << "POINTS " << nv << " double\n";
  for (int v = 0; v < nv; ++v)
    out << fmt17(st.positions[v].x()) << " " << fmt17(st.positions[v].y()) << " "
        << fmt17(st.positions[v].z()) << "\n";
  out << "POLYGONS " << nf << " " << 4 * nf << "\n";
  for (int f = 0; f < nf; ++f) {
    const auto& fc = st.mesh->faces[f];
    out << "3 " << fc[0] << " " << fc[1] << " " << fc[2] << "\n";
  }
  out << "POINT_DATA " << nv << "\n";
  auto scalars = [&](const std::string& name, const std::function<double(int)>& get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < nv; ++v) out << fmt17(get(v)) << "\n";
  };
  scalars("phi", [&](int v) { return s.phi[v]; });
  scalars("mu", [&](int v) { return s.mu[v]; });
  scalars("pi", [&](int v) { return s.pi[v]; });
  scalars("H", [&](int v) { return st.mean_curv[v]; });
  scalars("K", [&](int v) { return st.gauss_curv[v]; });
  scalars("vn", [&](int v) { return st.v_n[v]; });
  auto vectors = [&](const std::string& name, const std::function<Vec3(int)>& get) {
    out << "VECTORS " << name << " double\n";
    for (int v = 0; v < nv; ++v) {
      const Vec3 x = get(v);
      out << fmt17(x.x()) << " " << fmt17(x.y()) << " " << fmt17(x.z()) << "\n";
    }
  };
  vectors("V", [&](int v) { return s.V.at(v); });
  vectors("u_hat", [&](int v) { return s.u_hat.at(v); });
  vectors("v_total", [&](int v) { return s.v_total.at(v); });
  vectors("normal", [&](int v) { return st.normal[v]; });
}

VtkSnapshot read_vtk(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_vtk: cannot open " + path.string());
  VtkSnapshot snap;
  std::string tok;
  int nv = 0;
  while (in >> tok) {
    if (tok == "POINTS") {
      std::string type;
      in >> nv >> type;
      snap.points.resize(nv);
      for (int v = 0; v < nv; ++v) in >> snap.points[v].x() >> snap.points[v].y() >> snap.points[v].z();
    } else if (tok == "POLYGONS") {
      int nf, total;
      in >> nf >> total;
      snap.polys.resize(nf);
      for (int f = 0; f < nf; ++f) {
        int k;
        in >> k >> snap.polys[f][0] >> snap.polys[f][1] >> snap.polys[f][2];
        if (k != 3) throw std::runtime_error("read_vtk: non-triangular polygon");
      }
    } else if (tok == "SCALARS") {
      std::string name, type;
      int comps;
      in >> name >> type >> comps;
      std::string lut, lutname;
      in >> lut >> lutname;
      VecX vals(nv);
      for (int v = 0; v < nv; ++v) in >> vals[v];
      snap.scalars[name] = vals;
    } else if (tok == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      VecX vals(3 * nv);
      for (int v = 0; v < 3 * nv; ++v) in >> vals[v];
      snap.vectors[name] = vals;
    }
  }
  return snap;
}

// ---------------------------------------------------------------------------
// CSV.
// ---------------------------------------------------------------------------

static const char* kCsvHeader =
    "t,mass,area,energy,kinetic,potential,gradient,max_abs_phi,separation_margin,"
    "div_residual,constraint_residual,tangency_max,picard_iters,wall_time";

void write_csv(const std::vector<DiagRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  out << kCsvHeader << "\n";
  for (const auto& r : rows) {
    out << fmt17(r.t) << "," << fmt17(r.mass) << "," << fmt17(r.area) << "," << fmt17(r.energy)
        << "," << fmt17(r.kinetic) << "," << fmt17(r.potential) << "," << fmt17(r.gradient)
        << "," << fmt17(r.max_abs_phi) << "," << fmt17(r.separation_margin) << ","
        << fmt17(r.div_residual) << "," << fmt17(r.constraint_residual) << ","
        << fmt17(r.tangency_max) << "," << fmt17(r.picard_iters) << "," << fmt17(r.wall_time)
        << "\n";
  }
}

std::vector<DiagRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file");
  if (line != kCsvHeader) throw std::runtime_error("read_csv: unexpected header");
  std::vector<DiagRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 14) throw std::runtime_error("read_csv: wrong column count");
    DiagRow r;
    r.t = vals[0];
    r.mass = vals[1];
    r.area = vals[2];
    r.energy = vals[3];
    r.kinetic = vals[4];
    r.potential = vals[5];
    r.gradient = vals[6];
    r.max_abs_phi = vals[7];
    r.separation_margin = vals[8];
    r.div_residual = vals[9];
    r.constraint_residual = vals[10];
    r.tangency_max = vals[11];
    r.picard_iters = vals[12];
    r.wall_time = vals[13];
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Manifest and runner.
// ---------------------------------------------------------------------------

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = m.version;
  j["config"] = m.config_toml;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["steps_completed"] = m.steps_completed;
  j["aborted"] = m.aborted;
  if (m.aborted) {
    j["abort"] = {{"kind", m.abort_kind}, {"message", m.abort_message}};
  }
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

int run_simulation(const SimConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunManifest manifest;
  manifest.config_toml = serialize_config(cfg);
  manifest.started_at = timestamp();

  const MaterialSpec mat = cfg.material_spec();
  const PotentialSpec pot = cfg.potential_spec();
  std::vector<DiagRow> rows;

  auto snapshot_name = [&](int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snap_%06d.vtk", k);
    return out_dir / buf;
  };

  int exit_code = 0;
  try {
    Simulator sim(cfg);
    rows.push_back(make_diag_row(sim.current(), sim.slice_ops(), mat, pot, 0.0));
    if (cfg.vtk) write_vtk(sim.current(), snapshot_name(0));
    const int n = cfg.n_steps();
    for (int k = 1; k <= n; ++k) {
      const auto tic = std::chrono::steady_clock::now();
      sim.step();
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
      if (k % cfg.cadence == 0) {
        rows.push_back(make_diag_row(sim.current(), sim.slice_ops(), mat, pot, wall));
        if (cfg.vtk) write_vtk(sim.current(), snapshot_name(k));
      }
      manifest.steps_completed = k;
    }
  } catch (const GeometryError& e) {
    manifest.aborted = true;
    manifest.abort_kind = "geometry";
    manifest.abort_message = e.what();
    exit_code = 2;
  } catch (const SolverError& e) {
    manifest.aborted = true;
    manifest.abort_kind = "solver";
    manifest.abort_message = e.what();
    exit_code = 2;
  } catch (const StepError& e) {
    manifest.aborted = true;
    manifest.abort_kind = "step";
    manifest.abort_message = e.what();
    exit_code = 2;
  } catch (const PhysicsError& e) {
    manifest.aborted = true;
    manifest.abort_kind = "physics";
    manifest.abort_message = e.what();
    exit_code = 2;
  }

  write_csv(rows, out_dir / "diag.csv");
  manifest.finished_at = timestamp();
  write_manifest(manifest, out_dir / "manifest.json");
  return exit_code;
}

}  // namespace sphase
