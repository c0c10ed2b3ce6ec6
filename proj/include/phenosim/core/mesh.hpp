#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "phenosim/core/geometry.hpp"

namespace phenosim {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }

  void validate() const {
    for (const auto& t : triangles)
      for (auto idx : t)
        if (idx >= vertices.size())
          throw std::invalid_argument("triangle index out of range");
  }

  Aabb bounds() const {
    Aabb box;
    for (const auto& v : vertices) box.expand(v);
    return box;
  }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

inline double mesh_surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles)
    area += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                          mesh.vertices[t[2]]);
  return area;
}

inline TriangleMesh transformed(const TriangleMesh& mesh, const Pose& pose) {
  TriangleMesh out;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(pose.apply(v));
  out.triangles = mesh.triangles;
  return out;
}

// Drops triangles below the area floor; vertices are kept as-is.
inline void remove_degenerate_triangles(TriangleMesh& mesh,
                                        double min_area = 1e-12) {
  std::vector<std::array<std::uint32_t, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    if (triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                      mesh.vertices[t[2]]) >= min_area)
      kept.push_back(t);
  }
  mesh.triangles = std::move(kept);
}

inline void append_mesh(TriangleMesh& dst, const TriangleMesh& src) {
  std::uint32_t base = std::uint32_t(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(),
                      src.vertices.end());
  for (const auto& t : src.triangles)
    dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

inline TriangleMesh make_box(const Vec3& min, const Vec3& max) {
  TriangleMesh m;
  m.vertices = {{min.x(), min.y(), min.z()}, {max.x(), min.y(), min.z()},
                {max.x(), max.y(), min.z()}, {min.x(), max.y(), min.z()},
                {min.x(), min.y(), max.z()}, {max.x(), min.y(), max.z()},
                {max.x(), max.y(), max.z()}, {min.x(), max.y(), max.z()}};
  m.triangles = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7},
                 {0, 1, 5}, {0, 5, 4}, {2, 3, 7}, {2, 7, 6},
                 {1, 2, 6}, {1, 6, 5}, {3, 0, 4}, {3, 4, 7}};
  return m;
}

// Icosphere by repeated midpoint subdivision of an icosahedron.
inline TriangleMesh make_icosphere(double radius, int subdivisions,
                                   const Vec3& center = Vec3::Zero()) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : m.vertices) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      Vec3 mid = (m.vertices[a] + m.vertices[b]).normalized();
      std::uint32_t idx = std::uint32_t(m.vertices.size());
      m.vertices.push_back(mid);
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      std::uint32_t ab = midpoint(tri[0], tri[1]);
      std::uint32_t bc = midpoint(tri[1], tri[2]);
      std::uint32_t ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v = center + radius * v;
  return m;
}

}  // namespace phenosim
