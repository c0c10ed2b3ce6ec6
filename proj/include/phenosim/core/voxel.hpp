#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>

#include "phenosim/core/mesh.hpp"

namespace phenosim {

struct VoxelKey {
  std::int32_t i, j, k;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& v) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::int32_t x) {
      h ^= std::uint64_t(std::uint32_t(x));
      h *= 0x100000001b3ull;
    };
    mix(v.i);
    mix(v.j);
    mix(v.k);
    return std::size_t(h);
  }
};

// Surface-occupancy grid on a lattice anchored at the world origin.
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.003;
  std::unordered_set<VoxelKey, VoxelKeyHash> occupied;
};

inline std::size_t occupied_count(const VoxelGrid& grid) {
  return grid.occupied.size();
}

// Separating-axis triangle vs axis-aligned box test (Akenine-Moller).
// Box given by center and half extents; touching counts as overlap.
inline bool triangle_box_overlap(const Vec3& center, const Vec3& half,
                                 const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 v0 = a - center, v1 = b - center, v2 = c - center;
  Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;

  auto axis_test = [&](const Vec3& axis) {
    double p0 = v0.dot(axis), p1 = v1.dot(axis), p2 = v2.dot(axis);
    double mn = std::min({p0, p1, p2}), mx = std::max({p0, p1, p2});
    double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) +
               half.z() * std::abs(axis.z());
    return mn > r || mx < -r;  // true => separating axis found
  };

  // 9 cross-product axes
  const Vec3 edges[3] = {e0, e1, e2};
  for (const Vec3& e : edges) {
    if (axis_test(Vec3(0, -e.z(), e.y()))) return false;
    if (axis_test(Vec3(e.z(), 0, -e.x()))) return false;
    if (axis_test(Vec3(-e.y(), e.x(), 0))) return false;
  }
  // box face normals
  for (int axisIdx = 0; axisIdx < 3; ++axisIdx) {
    double mn = std::min({v0[axisIdx], v1[axisIdx], v2[axisIdx]});
    double mx = std::max({v0[axisIdx], v1[axisIdx], v2[axisIdx]});
    if (mn > half[axisIdx] || mx < -half[axisIdx]) return false;
  }
  // triangle plane
  Vec3 n = e0.cross(e1);
  double d = n.dot(v0);
  double r = half.x() * std::abs(n.x()) + half.y() * std::abs(n.y()) +
             half.z() * std::abs(n.z());
  return std::abs(d) <= r;
}

// Marks every lattice cell that intersects at least one triangle. The lattice
// is anchored at the world origin so counts are reproducible across meshes.
inline VoxelGrid voxelize_surface(const TriangleMesh& mesh, double voxel_size) {
  if (voxel_size <= 0.0) throw std::invalid_argument("voxel_size must be > 0");
  VoxelGrid grid;
  grid.voxel_size = voxel_size;
  grid.origin = Vec3::Zero();
  const Vec3 half = Vec3::Constant(0.5 * voxel_size);

  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    Aabb box;
    box.expand(a);
    box.expand(b);
    box.expand(c);
    // one extra layer each way: touching counts as overlap, and a triangle
    // lying exactly on a lattice plane touches the cell on the far side
    std::int32_t lo[3], hi[3];
    for (int axis = 0; axis < 3; ++axis) {
      lo[axis] = std::int32_t(std::floor(box.min[axis] / voxel_size)) - 1;
      hi[axis] = std::int32_t(std::floor(box.max[axis] / voxel_size)) + 1;
    }
    for (std::int32_t i = lo[0]; i <= hi[0]; ++i)
      for (std::int32_t j = lo[1]; j <= hi[1]; ++j)
        for (std::int32_t k = lo[2]; k <= hi[2]; ++k) {
          VoxelKey key{i, j, k};
          if (grid.occupied.count(key)) continue;
          Vec3 center((i + 0.5) * voxel_size, (j + 0.5) * voxel_size,
                      (k + 0.5) * voxel_size);
          if (triangle_box_overlap(center, half, a, b, c))
            grid.occupied.insert(key);
        }
  }
  return grid;
}

}  // namespace phenosim
