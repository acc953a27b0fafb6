// Wall-clock comparison of the OpenMP kernels against the serial reference
// implementations on a refined sphere mesh.

#include "sphase/fem.hpp"
#include "sphase/serial_ref.hpp"

#include <chrono>
#include <cstdio>

using namespace sphase;

namespace {

template <class F>
double time_ms(F&& f, int reps) {
  const auto tic = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  const auto toc = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(toc - tic).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  const int subdiv = argc > 1 ? std::atoi(argv[1]) : 5;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  GeometryPreset preset;
  preset.kind = GeometryPreset::Kind::StationarySphere;
  TriMesh mesh = make_icosphere(subdiv, 1.0);
  SurfaceState st = compute_surface_state(mesh, mesh.vertices, 0.0, preset);
  VecX phi(st.n_vertices());
  for (int v = 0; v < st.n_vertices(); ++v) phi[v] = st.positions[v].z();

  std::printf("mesh: subdiv %d, %d vertices, %d faces, %d thread(s)\n", subdiv,
              st.n_vertices(), st.n_faces(), num_threads());
  std::printf("%-28s %12s %12s %8s\n", "kernel", "serial [ms]", "parallel [ms]", "speedup");

  struct Row {
    const char* name;
    double serial_ms, parallel_ms;
  };
  std::vector<Row> rows;

  rows.push_back({"assemble_mass",
                  time_ms([&] { serial::assemble_mass(st, 1.0, Arity::Scalar); }, reps),
                  time_ms([&] { assemble_mass(st, 1.0, Arity::Scalar); }, reps)});
  rows.push_back({"assemble_stiffness",
                  time_ms([&] { serial::assemble_stiffness(st, 1.0); }, reps),
                  time_ms([&] { assemble_stiffness(st, 1.0); }, reps)});
  rows.push_back({"assemble_deformation",
                  time_ms([&] { serial::assemble_deformation(st, 1.0, 100.0); }, reps),
                  time_ms([&] { assemble_deformation(st, 1.0, 100.0); }, reps)});
  rows.push_back({"integrate_lumped",
                  time_ms([&] { serial::integrate_lumped(st, phi); }, 50 * reps),
                  time_ms([&] { integrate_lumped(st, phi); }, 50 * reps)});
  rows.push_back({"recover_gradient",
                  time_ms([&] { serial::recover_gradient(st, phi); }, 10 * reps),
                  time_ms([&] { recover_gradient(st, phi); }, 10 * reps)});

  for (const auto& r : rows)
    std::printf("%-28s %12.3f %12.3f %8.2fx\n", r.name, r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms);
  return 0;
}
