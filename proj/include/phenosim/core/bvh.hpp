#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "phenosim/core/mesh.hpp"

namespace phenosim {

struct RayHit {
  double t = 0.0;
  std::uint32_t triangle = 0;
};

// Moller-Trumbore with inclusive edge handling; hits at u,v in [0,1] count so
// rays through shared edges cannot slip between triangles.
inline bool ray_triangle(const Vec3& orig, const Vec3& dir, const Vec3& a,
                         const Vec3& b, const Vec3& c, double& t_out) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return false;  // parallel
  double inv_det = 1.0 / det;
  const Vec3 tvec = orig - a;
  double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qvec = tvec.cross(e1);
  double v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return false;
  double t = e2.dot(qvec) * inv_det;
  if (t <= 0.0) return false;
  t_out = t;
  return true;
}

// Binary BVH, median split on the longest centroid axis. Built once per mesh;
// queries are const and safe to run concurrently.
class Bvh {
 public:
  explicit Bvh(const TriangleMesh& mesh) : mesh_(&mesh) {
    std::size_t n = mesh.triangles.size();
    tri_order_.resize(n);
    centroids_.resize(n);
    boxes_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      tri_order_[i] = i;
      const auto& t = mesh.triangles[i];
      Aabb box;
      box.expand(mesh.vertices[t[0]]);
      box.expand(mesh.vertices[t[1]]);
      box.expand(mesh.vertices[t[2]]);
      boxes_[i] = box;
      centroids_[i] = box.center();
    }
    if (n > 0) build(0, std::uint32_t(n));
  }

  Bvh(const Bvh&) = delete;
  Bvh& operator=(const Bvh&) = delete;

  // Nearest positive hit; ties in t resolved toward the lowest triangle index.
  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir) const {
    if (nodes_.empty()) return std::nullopt;
    Vec3 inv_dir;
    for (int a = 0; a < 3; ++a)
      inv_dir[a] = dir[a] != 0.0 ? 1.0 / dir[a]
                                 : std::numeric_limits<double>::infinity();
    double best_t = std::numeric_limits<double>::infinity();
    std::uint32_t best_tri = 0;
    bool found = false;

    std::uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
      std::uint32_t idx = stack[--sp];
      const Node& node = nodes_[idx];
      if (!ray_box(origin, inv_dir, node.box, best_t)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          std::uint32_t tri = tri_order_[i];
          const auto& tv = mesh_->triangles[tri];
          double t;
          if (ray_triangle(origin, dir, mesh_->vertices[tv[0]],
                           mesh_->vertices[tv[1]], mesh_->vertices[tv[2]], t)) {
            if (t < best_t || (t == best_t && tri < best_tri)) {
              best_t = t;
              best_tri = tri;
              found = true;
            }
          }
        }
      } else {
        // left child is laid out at idx + 1, right child index in `first`
        stack[sp++] = node.first;
        stack[sp++] = idx + 1;
      }
    }
    if (!found) return std::nullopt;
    return RayHit{best_t, best_tri};
  }

  // Occlusion query: does any triangle intersect the ray with t < t_max?
  // Returns on the first hit found, so it is much cheaper than intersect().
  bool intersect_any(const Vec3& origin, const Vec3& dir, double t_max) const {
    if (nodes_.empty()) return false;
    Vec3 inv_dir;
    for (int a = 0; a < 3; ++a)
      inv_dir[a] = dir[a] != 0.0 ? 1.0 / dir[a]
                                 : std::numeric_limits<double>::infinity();
    std::uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
      std::uint32_t idx = stack[--sp];
      const Node& node = nodes_[idx];
      if (!ray_box(origin, inv_dir, node.box, t_max)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          const auto& tv = mesh_->triangles[tri_order_[i]];
          double t;
          if (ray_triangle(origin, dir, mesh_->vertices[tv[0]],
                           mesh_->vertices[tv[1]], mesh_->vertices[tv[2]],
                           t) &&
              t < t_max)
            return true;
        }
      } else {
        stack[sp++] = node.first;
        stack[sp++] = idx + 1;
      }
    }
    return false;
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: slot in tri_order_; inner: left child
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  static bool ray_box(const Vec3& origin, const Vec3& inv_dir, const Aabb& box,
                      double t_max) {
    double t0 = 0.0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double near = (box.min[a] - origin[a]) * inv_dir[a];
      double far = (box.max[a] - origin[a]) * inv_dir[a];
      if (near > far) std::swap(near, far);
      t0 = std::max(t0, near);
      t1 = std::min(t1, far);
      if (t0 > t1) return false;
    }
    return true;
  }

  // Returns node index; recurses over tri_order_[begin, end).
  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    std::uint32_t node_idx = std::uint32_t(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) box.expand(boxes_[tri_order_[i]]);
    nodes_[node_idx].box = box;

    std::uint32_t count = end - begin;
    if (count <= 4) {
      // keep leaf triangles in index order for deterministic iteration
      std::sort(tri_order_.begin() + begin, tri_order_.begin() + end);
      nodes_[node_idx].first = begin;
      nodes_[node_idx].count = count;
      return node_idx;
    }
    Aabb cbox;
    for (std::uint32_t i = begin; i < end; ++i)
      cbox.expand(centroids_[tri_order_[i]]);
    Vec3 ext = cbox.extent();
    int axis = 0;
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    std::uint32_t mid = begin + count / 2;
    std::nth_element(tri_order_.begin() + begin, tri_order_.begin() + mid,
                     tri_order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       double ca = centroids_[a][axis], cb = centroids_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    build(begin, mid);  // left child lands at node_idx + 1
    std::uint32_t right = build(mid, end);
    nodes_[node_idx].first = right;
    nodes_[node_idx].count = 0;
    return node_idx;
  }

  const TriangleMesh* mesh_;
  std::vector<std::uint32_t> tri_order_;
  std::vector<Vec3> centroids_;
  std::vector<Aabb> boxes_;
  std::vector<Node> nodes_;
};

inline std::optional<RayHit> ray_mesh_intersect(const Ray& ray, const Bvh& bvh) {
  return bvh.intersect(ray.origin, ray.direction);
}

}  // namespace phenosim
