#include "sphase/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sphase {

namespace {

void build_vertex_faces(TriMesh& mesh) {
  mesh.vertex_faces.assign(mesh.vertices.size(), {});
  for (int f = 0; f < mesh.n_faces(); ++f)
    for (int k = 0; k < 3; ++k) mesh.vertex_faces[mesh.faces[f][k]].push_back(f);
  for (auto& vf : mesh.vertex_faces) std::sort(vf.begin(), vf.end());
}

int midpoint(std::map<std::pair<int, int>, int>& cache, std::vector<Vec3>& verts,
             int a, int b, double radius) {
  auto key = std::minmax(a, b);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Vec3 m = (verts[a] + verts[b]).normalized() * radius;
  int idx = static_cast<int>(verts.size());
  verts.push_back(m);
  cache.emplace(key, idx);
  return idx;
}

}  // namespace

TriMesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 7)
    throw ConfigError("make_icosphere: subdivisions must be in [0,7], got " +
                      std::to_string(subdivisions));
  if (!(radius > 0)) throw ConfigError("make_icosphere: radius must be positive");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v = v.normalized() * radius;

  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> cache;
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = midpoint(cache, verts, f[0], f[1], radius);
      int bc = midpoint(cache, verts, f[1], f[2], radius);
      int ca = midpoint(cache, verts, f[2], f[0], radius);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  // Outward orientation: flip faces whose normal points inward.
  for (auto& f : faces) {
    const Vec3 a = verts[f[0]], b = verts[f[1]], c = verts[f[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0) std::swap(f[1], f[2]);
  }

  TriMesh mesh;
  mesh.vertices = std::move(verts);
  mesh.faces = std::move(faces);
  build_vertex_faces(mesh);
  validate_closed_manifold(mesh);
  return mesh;
}

void validate_closed_manifold(const TriMesh& mesh) {
  // Directed-edge census: closed + consistently oriented iff every directed
  // edge appears exactly once and its reverse exactly once.
  std::map<std::pair<int, int>, int> count;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      if (a == b) throw GeometryError("validate_closed_manifold: degenerate face");
      if (++count[{a, b}] > 1)
        throw GeometryError("validate_closed_manifold: duplicated directed edge " +
                            std::to_string(a) + "->" + std::to_string(b));
    }
  }
  for (const auto& [e, c] : count) {
    (void)c;
    if (count.find({e.second, e.first}) == count.end())
      throw GeometryError("validate_closed_manifold: boundary or misoriented edge " +
                          std::to_string(e.first) + "->" + std::to_string(e.second));
  }
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const auto& fc = mesh.faces[f];
    const Vec3 n = (mesh.vertices[fc[1]] - mesh.vertices[fc[0]])
                       .cross(mesh.vertices[fc[2]] - mesh.vertices[fc[0]]);
    if (!(0.5 * n.norm() > 0))
      throw GeometryError("validate_closed_manifold: zero-area face " + std::to_string(f));
  }
}

double triangle_radius_ratio(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  const double s = 0.5 * (la + lb + lc);
  const double area = 0.5 * (b - a).cross(c - a).norm();
  if (!(area > 0) || !(s > 0)) return 0.0;
  const double r_in = area / s;
  const double r_circ = la * lb * lc / (4.0 * area);
  return 2.0 * r_in / r_circ;
}

double min_radius_ratio(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  std::vector<double> q(mesh.n_faces());
  parallel_for(mesh.n_faces(), [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    q[f] = triangle_radius_ratio(positions[fc[0]], positions[fc[1]], positions[fc[2]]);
  });
  return *std::min_element(q.begin(), q.end());
}

double mean_edge_length(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  double total = parallel_sum(mesh.n_faces(), [&](std::ptrdiff_t f) {
    const auto& fc = mesh.faces[f];
    return ((positions[fc[0]] - positions[fc[1]]).norm() +
            (positions[fc[1]] - positions[fc[2]]).norm() +
            (positions[fc[2]] - positions[fc[0]]).norm());
  });
  return total / (3.0 * mesh.n_faces());  // each edge counted twice, uniformly
}

}  // namespace sphase
