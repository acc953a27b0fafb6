#pragma once

#include "sphase/core.hpp"

#include <array>

namespace sphase {

// Fixed connectivity of the initial-surface triangulation. Connectivity never
// changes during a run; only vertex positions evolve.
struct TriMesh {
  std::vector<Vec3> vertices;             // reference positions
  std::vector<std::array<int, 3>> faces;  // CCW seen from outside
  std::vector<std::vector<int>> vertex_faces;  // incident faces, sorted

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
};

// Icosphere: subdivided icosahedron projected to radius r.
// Vertex count 10*4^s + 2, face count 20*4^s. subdivisions <= 7.
TriMesh make_icosphere(int subdivisions, double radius);

// Closed orientable 2-manifold check: every edge shared by exactly two faces
// with opposite orientation, no degenerate faces. Throws GeometryError.
void validate_closed_manifold(const TriMesh& mesh);

// Triangle shape quality 2*r_in/r_circ in (0,1], 1 for equilateral.
double triangle_radius_ratio(const Vec3& a, const Vec3& b, const Vec3& c);
double min_radius_ratio(const TriMesh& mesh, const std::vector<Vec3>& positions);

double mean_edge_length(const TriMesh& mesh, const std::vector<Vec3>& positions);

}  // namespace sphase
