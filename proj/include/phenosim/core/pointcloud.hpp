#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "phenosim/core/geometry.hpp"
#include "phenosim/core/rng.hpp"

namespace phenosim {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit normal per point

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }

  void validate() const {
    if (!normals.empty() && normals.size() != points.size())
      throw std::invalid_argument("normal count mismatch");
    for (const auto& n : normals)
      if (std::abs(n.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("normal not unit length");
  }
};

namespace detail {

// Uniform-grid hash over points, for fixed-radius and kNN queries.
class PointGrid {
 public:
  PointGrid(const std::vector<Vec3>& points, double cell)
      : points_(points), cell_(cell) {
    cells_.reserve(points.size());
    for (std::uint32_t i = 0; i < points.size(); ++i)
      cells_[key(points[i])].push_back(i);
  }

  template <typename Fn>
  void for_each_in_radius(const Vec3& q, double radius, Fn&& fn) const {
    double r2 = radius * radius;
    int span = int(std::ceil(radius / cell_));
    auto [ci, cj, ck] = coords(q);
    for (int di = -span; di <= span; ++di)
      for (int dj = -span; dj <= span; ++dj)
        for (int dk = -span; dk <= span; ++dk) {
          auto it = cells_.find(pack(ci + di, cj + dj, ck + dk));
          if (it == cells_.end()) continue;
          for (std::uint32_t idx : it->second) {
            double d2 = (points_[idx] - q).squaredNorm();
            if (d2 <= r2) fn(idx, d2);
          }
        }
  }

  // Squared distances to the k nearest neighbors of points_[self],
  // excluding self. Expands the search shell until k are guaranteed.
  std::vector<double> knn_sq(std::uint32_t self, int k) const {
    const Vec3& q = points_[self];
    std::vector<double> best;
    int span = 1;
    const int max_span = 64;
    while (span <= max_span) {
      best.clear();
      auto [ci, cj, ck] = coords(q);
      for (int di = -span; di <= span; ++di)
        for (int dj = -span; dj <= span; ++dj)
          for (int dk = -span; dk <= span; ++dk) {
            auto it = cells_.find(pack(ci + di, cj + dj, ck + dk));
            if (it == cells_.end()) continue;
            for (std::uint32_t idx : it->second) {
              if (idx == self) continue;
              best.push_back((points_[idx] - q).squaredNorm());
            }
          }
      double guaranteed = double(span) * cell_;  // radius fully covered
      std::sort(best.begin(), best.end());
      if (int(best.size()) >= k && best[k - 1] <= guaranteed * guaranteed) {
        best.resize(k);
        return best;
      }
      span *= 2;
    }
    std::sort(best.begin(), best.end());
    if (int(best.size()) > k) best.resize(k);
    return best;
  }

 private:
  std::tuple<int, int, int> coords(const Vec3& p) const {
    return {int(std::floor(p.x() / cell_)), int(std::floor(p.y() / cell_)),
            int(std::floor(p.z() / cell_))};
  }
  static std::uint64_t pack(int i, int j, int k) {
    auto u = [](int v) { return std::uint64_t(std::uint32_t(v + (1 << 20))); };
    return (u(i) << 42) | (u(j) << 21) | u(k);
  }
  std::uint64_t key(const Vec3& p) const {
    auto [i, j, k] = coords(p);
    return pack(i, j, k);
  }

  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace detail

// Statistical outlier removal: drop points whose mean kNN distance exceeds
// global mean + std_ratio * global std. Clouds with <= k points pass through.
inline PointCloud remove_outliers(const PointCloud& cloud, int k_neighbors,
                                  double std_ratio) {
  if (k_neighbors < 1) throw std::invalid_argument("k_neighbors must be >= 1");
  if (cloud.size() <= std::size_t(k_neighbors)) return cloud;

  Aabb box;
  for (const auto& p : cloud.points) box.expand(p);
  double diag = box.extent().norm();
  double cell = std::max(1e-9, diag / std::cbrt(double(cloud.size())) );
  detail::PointGrid grid(cloud.points, cell);

  std::vector<double> mean_dist(cloud.size());
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    auto d2 = grid.knn_sq(i, k_neighbors);
    double sum = 0.0;
    for (double v : d2) sum += std::sqrt(v);
    mean_dist[i] = d2.empty() ? 0.0 : sum / double(d2.size());
  }
  double mu = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) /
              double(mean_dist.size());
  double var = 0.0;
  for (double d : mean_dist) var += (d - mu) * (d - mu);
  double sigma = std::sqrt(var / double(mean_dist.size()));
  double cutoff = mu + std_ratio * sigma;

  PointCloud out;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] <= cutoff) {
      out.points.push_back(cloud.points[i]);
      if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    }
  }
  return out;
}

// Keeps points strictly inside the box (boundary points are dropped).
inline PointCloud crop_to_region(const PointCloud& cloud, const Aabb& box) {
  for (int a = 0; a < 3; ++a)
    if (!(box.min[a] < box.max[a]))
      throw std::invalid_argument("inverted crop box");
  PointCloud out;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    if (box.contains_strict(cloud.points[i])) {
      out.points.push_back(cloud.points[i]);
      if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    }
  }
  return out;
}

// Greedy dart throwing over a seeded shuffle of the input order. Output is a
// maximal subset with pairwise distances >= radius.
inline PointCloud poisson_disk_sample(const PointCloud& cloud, double radius,
                                      std::uint64_t seed = 0) {
  if (radius <= 0.0) throw std::invalid_argument("radius must be > 0");
  std::vector<std::uint32_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_below(std::uint32_t(i))]);

  detail::PointGrid grid(cloud.points, radius);
  std::vector<char> accepted(cloud.size(), 0);
  for (std::uint32_t idx : order) {
    bool blocked = false;
    grid.for_each_in_radius(cloud.points[idx], radius,
                            [&](std::uint32_t j, double d2) {
                              if (accepted[j] && d2 < radius * radius)
                                blocked = true;
                            });
    if (!blocked) accepted[idx] = 1;
  }
  PointCloud out;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    if (accepted[i]) {
      out.points.push_back(cloud.points[i]);
      if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    }
  }
  return out;
}

}  // namespace phenosim
