#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "phenosim/core/mesh.hpp"
#include "phenosim/core/pointcloud.hpp"

namespace phenosim {

// Surface reconstruction via a signed distance-to-cloud field sampled on a
// lattice of pitch `cell`. Sign is resolved by flood filling the exterior:
// lattice nodes unreachable from the domain boundary without entering the
// dilated point band are treated as interior, so a closed point set (e.g. a
// sampled sphere) yields a single outer surface while an open sheet yields a
// two-sided shell. Extraction uses a tetrahedral decomposition of each
// lattice cube at an iso level one cell away from the points; the extracted
// vertices are then pulled back by the iso offset toward their nearest cloud
// point, which removes both the dilation bias and the bumpiness of the
// offset surface (distance to a discrete point set is a union of spheres).
inline TriangleMesh reconstruct_surface(const PointCloud& cloud, double cell) {
  if (cell <= 0.0) throw std::invalid_argument("cell must be > 0");
  if (cloud.size() < 4) throw std::invalid_argument("insufficient points");

  const double iso = cell;          // crossing distance from the cloud
  const double band = 1.5 * cell;   // dilation radius blocking the flood fill
  const int pad = 3;

  Aabb box;
  for (const auto& p : cloud.points) box.expand(p);
  Vec3 origin = box.min - Vec3::Constant(pad * cell);
  int nx = int(std::ceil((box.max.x() - box.min.x()) / cell)) + 2 * pad + 1;
  int ny = int(std::ceil((box.max.y() - box.min.y()) / cell)) + 2 * pad + 1;
  int nz = int(std::ceil((box.max.z() - box.min.z()) / cell)) + 2 * pad + 1;

  auto node_index = [&](int i, int j, int k) {
    return (std::size_t(k) * ny + j) * nx + i;
  };
  const std::size_t n_nodes = std::size_t(nx) * ny * nz;
  const double far2 = 9.0 * cell * cell;
  std::vector<float> dist2(n_nodes, float(far2));

  // Splat: each point updates min squared distance on nearby nodes. A 2-cell
  // splat radius keeps every crossing edge exact (|f| <= cell there).
  for (const auto& p : cloud.points) {
    int ci = int(std::floor((p.x() - origin.x()) / cell));
    int cj = int(std::floor((p.y() - origin.y()) / cell));
    int ck = int(std::floor((p.z() - origin.z()) / cell));
    for (int i = std::max(0, ci - 2); i <= std::min(nx - 1, ci + 3); ++i)
      for (int j = std::max(0, cj - 2); j <= std::min(ny - 1, cj + 3); ++j)
        for (int k = std::max(0, ck - 2); k <= std::min(nz - 1, ck + 3); ++k) {
          Vec3 node = origin + cell * Vec3(i, j, k);
          float d2 = float((node - p).squaredNorm());
          float& slot = dist2[node_index(i, j, k)];
          if (d2 < slot) slot = d2;
        }
  }

  // Exterior flood fill (6-connected) over nodes outside the dilated band.
  const float band2 = float(band * band);
  std::vector<std::uint8_t> outside(n_nodes, 0);
  std::deque<std::array<int, 3>> queue;
  auto try_push = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return;
    std::size_t idx = node_index(i, j, k);
    if (outside[idx] || dist2[idx] <= band2) return;
    outside[idx] = 1;
    queue.push_back({i, j, k});
  };
  for (int j = 0; j < ny; ++j)
    for (int k = 0; k < nz; ++k) {
      try_push(0, j, k);
      try_push(nx - 1, j, k);
    }
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < nz; ++k) {
      try_push(i, 0, k);
      try_push(i, ny - 1, k);
    }
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      try_push(i, j, 0);
      try_push(i, j, nz - 1);
    }
  while (!queue.empty()) {
    auto [i, j, k] = queue.front();
    queue.pop_front();
    try_push(i - 1, j, k);
    try_push(i + 1, j, k);
    try_push(i, j - 1, k);
    try_push(i, j + 1, k);
    try_push(i, j, k - 1);
    try_push(i, j, k + 1);
  }

  auto field = [&](int i, int j, int k) {
    std::size_t idx = node_index(i, j, k);
    double f = std::sqrt(double(dist2[idx])) - iso;
    if (f > 0.0 && !outside[idx]) f = -f;  // enclosed interior
    return f;
  };

  // Marching tetrahedra: 6 tets per cube sharing the main diagonal.
  static const int tets[6][4] = {{0, 5, 1, 6}, {0, 1, 2, 6}, {0, 2, 3, 6},
                                 {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}};
  static const int corner_off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0},
                                       {0, 1, 0}, {0, 0, 1}, {1, 0, 1},
                                       {1, 1, 1}, {0, 1, 1}};

  TriangleMesh mesh;
  auto edge_point = [&](const Vec3& pa, double fa, const Vec3& pb, double fb) {
    double t = fa / (fa - fb);
    t = std::clamp(t, 0.0, 1.0);
    return Vec3(pa + t * (pb - pa));
  };
  auto emit = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
    if (triangle_area(a, b, c) < 1e-12) return;
    std::uint32_t base = std::uint32_t(mesh.vertices.size());
    mesh.vertices.push_back(a);
    mesh.vertices.push_back(b);
    mesh.vertices.push_back(c);
    mesh.triangles.push_back({base, base + 1, base + 2});
  };

  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        double f[8];
        Vec3 p[8];
        bool any_neg = false, any_pos = false;
        for (int c = 0; c < 8; ++c) {
          int ci = i + corner_off[c][0], cj = j + corner_off[c][1],
              ck = k + corner_off[c][2];
          f[c] = field(ci, cj, ck);
          p[c] = origin + cell * Vec3(ci, cj, ck);
          (f[c] < 0.0 ? any_neg : any_pos) = true;
        }
        if (!any_neg || !any_pos) continue;
        for (const auto& tet : tets) {
          int neg[4], pos[4], nn = 0, np = 0;
          for (int v = 0; v < 4; ++v) {
            if (f[tet[v]] < 0.0)
              neg[nn++] = tet[v];
            else
              pos[np++] = tet[v];
          }
          if (nn == 0 || nn == 4) continue;
          if (nn == 1) {
            Vec3 a = edge_point(p[neg[0]], f[neg[0]], p[pos[0]], f[pos[0]]);
            Vec3 b = edge_point(p[neg[0]], f[neg[0]], p[pos[1]], f[pos[1]]);
            Vec3 c = edge_point(p[neg[0]], f[neg[0]], p[pos[2]], f[pos[2]]);
            emit(a, b, c);
          } else if (nn == 3) {
            Vec3 a = edge_point(p[neg[0]], f[neg[0]], p[pos[0]], f[pos[0]]);
            Vec3 b = edge_point(p[neg[1]], f[neg[1]], p[pos[0]], f[pos[0]]);
            Vec3 c = edge_point(p[neg[2]], f[neg[2]], p[pos[0]], f[pos[0]]);
            emit(a, b, c);
          } else {  // 2/2 split -> quad as two triangles
            Vec3 a = edge_point(p[neg[0]], f[neg[0]], p[pos[0]], f[pos[0]]);
            Vec3 b = edge_point(p[neg[0]], f[neg[0]], p[pos[1]], f[pos[1]]);
            Vec3 c = edge_point(p[neg[1]], f[neg[1]], p[pos[1]], f[pos[1]]);
            Vec3 d = edge_point(p[neg[1]], f[neg[1]], p[pos[0]], f[pos[0]]);
            emit(a, b, c);
            emit(a, c, d);
          }
        }
      }

  // Pull each vertex back onto the cloud: move it to the centroid of the
  // nearby points. The centroid varies smoothly with the vertex position, so
  // this removes the iso offset and the union-of-spheres bumpiness of the
  // extracted shell without crumpling the triangulation.
  detail::PointGrid grid(cloud.points, cell);
  for (auto& v : mesh.vertices) {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    grid.for_each_in_radius(v, 2.0 * cell, [&](std::uint32_t idx, double) {
      sum += cloud.points[idx];
      ++count;
    });
    if (count > 0) v = sum / double(count);
  }
  remove_degenerate_triangles(mesh);
  return mesh;
}

}  // namespace phenosim
