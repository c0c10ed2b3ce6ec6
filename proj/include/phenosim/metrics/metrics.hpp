#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "phenosim/core/pointcloud.hpp"
#include "phenosim/core/reconstruct.hpp"
#include "phenosim/core/voxel.hpp"
#include "phenosim/capture/capture.hpp"

namespace phenosim {

struct MetricsConfig {
  int outlier_k_neighbors = 8;
  double outlier_std_ratio = 2.0;
  // plant-frame crop: substrate removed below, canopy envelope around
  Aabb crop_box{Vec3(-0.17, -0.17, 0.002), Vec3(0.17, 0.17, 0.40)};
  double sample_radius_m = 0.0015;  // half the voxel pitch
  double recon_cell_m = 0.003;
  double voxel_size_m = 0.003;
  std::uint64_t seed = 0;
};

struct SurfaceMetrics {
  double surface_area_m2 = 0.0;
  std::size_t voxel_count = 0;
};

// Cloud -> cleaned cloud -> uniform resample -> mesh -> area + voxel count.
// The density-equalizing resample runs before meshing so the distance field
// sees uniform support; its radius is half the voxel pitch to keep the 3mm
// voxelization unbiased.
inline SurfaceMetrics estimate_metrics(const PointCloud& cloud,
                                       const MetricsConfig& cfg) {
  if (cloud.size() == 0) throw std::invalid_argument("insufficient points");
  PointCloud cleaned =
      remove_outliers(cloud, cfg.outlier_k_neighbors, cfg.outlier_std_ratio);
  cleaned = crop_to_region(cleaned, cfg.crop_box);
  cleaned = poisson_disk_sample(cleaned, cfg.sample_radius_m,
                                derive_seed(cfg.seed, "resample"));
  TriangleMesh mesh = reconstruct_surface(cleaned, cfg.recon_cell_m);
  SurfaceMetrics out;
  out.surface_area_m2 = mesh_surface_area(mesh);
  out.voxel_count = occupied_count(voxelize_surface(mesh, cfg.voxel_size_m));
  return out;
}

// Pinhole back-projection of a pixel count at the base depth.
inline double projected_area(std::size_t pixel_count, const CameraModel& cam,
                             double base_depth_z_m) {
  if (base_depth_z_m <= 0) throw std::invalid_argument("depth must be > 0");
  return double(pixel_count) * base_depth_z_m * base_depth_z_m /
         (cam.fx * cam.fy);
}

// One row per (plant, method): ground truth plus whichever estimates the
// method produces. Baseline 1 carries only the projected area.
struct MetricRow {
  std::string plant_id;
  int experiment = 0;
  double age_days = 0.0;
  double gt_fresh_g = 0.0;
  double gt_dry_g = 0.0;
  std::string method_tag;
  std::optional<double> surface_area_m2;
  std::optional<std::size_t> voxel_count;
  std::optional<double> projected_area_m2;

  std::optional<double> voxel_volume_m3(double voxel_size = 0.003) const {
    if (!voxel_count) return std::nullopt;
    return double(*voxel_count) * voxel_size * voxel_size * voxel_size;
  }
};

}  // namespace phenosim
