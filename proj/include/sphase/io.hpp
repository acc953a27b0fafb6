#pragma once

#include "sphase/diagnostics.hpp"

#include <filesystem>
#include <map>

namespace sphase {

// Sectioned key = value configuration (TOML syntax subset: [section],
// key = value, # comments, quoted strings, numbers, booleans). Unknown keys
// or sections are hard errors.
SimConfig parse_config(const std::filesystem::path& path);
SimConfig parse_config_string(const std::string& text, const std::string& origin = "<string>");

// Serializes every resolved value; parse(serialize(cfg)) == cfg.
std::string serialize_config(const SimConfig& cfg);

// Legacy ASCII VTK POLYDATA snapshot: POINTS/POLYGONS, POINT_DATA scalars
// {phi, mu, pi, H, K, vn} and vectors {V, u_hat, v_total, normal}, in this
// order, floats with 17 significant digits.
void write_vtk(const StepState& s, const std::filesystem::path& path);

// Bundled reader for round-trip checks: returns points and the named arrays.
struct VtkSnapshot {
  std::vector<Vec3> points;
  std::vector<std::array<int, 3>> polys;
  std::map<std::string, VecX> scalars;  // per name, n entries
  std::map<std::string, VecX> vectors;  // per name, 3n entries
};
VtkSnapshot read_vtk(const std::filesystem::path& path);

// CSV diagnostics. Header pinned:
// t,mass,area,energy,kinetic,potential,gradient,max_abs_phi,separation_margin,
// div_residual,constraint_residual,tangency_max,picard_iters,wall_time
void write_csv(const std::vector<DiagRow>& rows, const std::filesystem::path& path);
std::vector<DiagRow> read_csv(const std::filesystem::path& path);

// Run manifest: resolved config echo, version, timestamps, abort record.
struct RunManifest {
  std::string config_toml;
  std::string version = "0.1.0";
  std::string started_at;
  std::string finished_at;
  bool aborted = false;
  std::string abort_kind;     // empty when clean
  std::string abort_message;
  int steps_completed = 0;
};
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

// Executes a full run into out_dir (manifest + diag.csv + VTK snapshots).
// Returns the process exit code (0 ok, 2 numerical abort).
int run_simulation(const SimConfig& cfg, const std::filesystem::path& out_dir);

// CLI entry: run | verify | presets.
int cli_main(int argc, char** argv);

}  // namespace sphase
