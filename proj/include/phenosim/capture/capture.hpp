#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "phenosim/core/bvh.hpp"
#include "phenosim/core/mesh.hpp"
#include "phenosim/core/pointcloud.hpp"
#include "phenosim/core/rng.hpp"
#include "phenosim/plan/views.hpp"

namespace phenosim {

struct CameraModel {
  double fx = 110.0, fy = 110.0;  // pixels
  double cx = 80.0, cy = 60.0;
  int width = 160, height = 120;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw std::invalid_argument("focal length <= 0");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw std::invalid_argument("principal point outside image");
  }

  // Pixel coordinates of a point given in the camera frame; false if behind.
  bool project(const Vec3& p_cam, double& u, double& v) const {
    if (p_cam.z() <= 1e-9) return false;
    u = fx * p_cam.x() / p_cam.z() + cx;
    v = fy * p_cam.y() / p_cam.z() + cy;
    return u >= 0.0 && u < double(width) && v >= 0.0 && v < double(height);
  }
};

struct CaptureParams {
  double samples_per_m2 = 2e5;  // of (two-sided) mesh surface
  int min_views_visible = 2;
  double noise_sigma_m = 5e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (min_views_visible < 1)
      throw std::invalid_argument("min_views_visible must be >= 1");
    if (noise_sigma_m < 0) throw std::invalid_argument("negative noise sigma");
  }
};

// World pose of the plant canonical frame (base at the plant position,
// growth axis +z of the canonical frame mapped onto world +x).
inline Pose plant_frame_pose(const Vec3& plant_position) {
  Pose pose;
  pose.rotation.col(0) = Vec3(0, 1, 0);
  pose.rotation.col(1) = Vec3(0, 0, 1);
  pose.rotation.col(2) = Vec3(1, 0, 0);
  pose.translation = plant_position;
  return pose;
}

namespace detail {

// Seeded area-weighted surface samples, independent of view set so that
// different view plans filter the same candidate list.
inline std::vector<Vec3> sample_mesh_surface(const TriangleMesh& mesh,
                                             double samples_per_m2,
                                             std::uint64_t seed) {
  double total_area = mesh_surface_area(mesh);
  std::size_t n = std::size_t(std::llround(samples_per_m2 * total_area));
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double acc = 0.0;
  for (const auto& t : mesh.triangles) {
    acc += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                         mesh.vertices[t[2]]);
    cumulative.push_back(acc);
  }
  Rng rng(seed);
  std::vector<Vec3> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pick = rng.uniform() * acc;
    std::size_t tri =
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
        cumulative.begin();
    if (tri >= mesh.triangles.size()) tri = mesh.triangles.size() - 1;
    double r1 = rng.uniform(), r2 = rng.uniform();
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    const auto& t = mesh.triangles[tri];
    samples.push_back(mesh.vertices[t[0]] +
                      r1 * (mesh.vertices[t[1]] - mesh.vertices[t[0]]) +
                      r2 * (mesh.vertices[t[2]] - mesh.vertices[t[0]]));
  }
  return samples;
}

}  // namespace detail

// Capture + SfM proxy: a candidate surface sample survives if it falls inside
// the image of at least min_views_visible views with a clear line of sight
// to the camera (self-occlusion via ray casting). Survivors get isotropic
// Gaussian noise and are expressed in the plant canonical frame (optionally
// composed with an alignment error for the manual-placement baseline).
// The mesh and BVH are expected in the plant canonical frame.
//
// A session holds the seeded candidate samples and per-candidate noise, so
// every view subset of the same plant filters the same candidate list. It
// also memoizes per-(view, candidate) visibility: a baseline subset of an
// already-captured plan reuses the ray-cast results for its shared views.
class CaptureSession {
 public:
  CaptureSession(const TriangleMesh& mesh, const Bvh& bvh,
                 const Vec3& plant_position, const CameraModel& cam,
                 const CaptureParams& params)
      : bvh_(bvh), cam_(cam), params_(params) {
    cam.validate();
    params.validate();
    samples_ = detail::sample_mesh_surface(mesh, params.samples_per_m2,
                                           derive_seed(params.seed, "samples"));
    Rng noise_rng(derive_seed(params.seed, "noise"));
    noise_.resize(samples_.size());
    for (auto& n : noise_)
      n = Vec3(noise_rng.normal(), noise_rng.normal(), noise_rng.normal()) *
          params.noise_sigma_m;
    world_to_canonical_ = plant_frame_pose(plant_position).inverse();
  }

  std::size_t candidate_count() const { return samples_.size(); }

  PointCloud capture(const ViewPlan& plan,
                     const Pose& output_from_canonical = Pose{}) {
    if (plan.views.empty()) throw std::invalid_argument("empty view plan");

    struct ViewRef {
      Pose cam_pose;                 // canonical frame
      std::vector<std::uint8_t>* memo;  // null when the pose is not cached
    };
    std::vector<ViewRef> refs;
    refs.reserve(plan.views.size());
    for (const auto& view : plan.views) {
      ViewRef ref;
      ref.cam_pose = world_to_canonical_.compose(view.pose);
      ref.memo = memo_slot(view, ref.cam_pose);
      refs.push_back(ref);
    }

    PointCloud out;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      int visible = 0;
      for (const auto& ref : refs) {
        std::uint8_t state = ref.memo ? (*ref.memo)[i] : kUnknown;
        if (state == kUnknown) {
          state = test_visibility(samples_[i], ref.cam_pose);
          if (ref.memo) (*ref.memo)[i] = state;
        }
        if (state == kVisible && ++visible >= params_.min_views_visible)
          break;
      }
      if (visible >= params_.min_views_visible)
        out.points.push_back(output_from_canonical.apply(samples_[i] +
                                                         noise_[i]));
    }
    return out;
  }

 private:
  static constexpr std::uint8_t kUnknown = 0, kVisible = 1, kHidden = 2;

  std::uint8_t test_visibility(const Vec3& s, const Pose& c) const {
    const double eps = 1e-5;
    Vec3 p_cam = c.rotation.transpose() * (s - c.translation);
    double u, v;
    if (!cam_.project(p_cam, u, v)) return kHidden;
    Vec3 to_cam = c.translation - s;
    double dist = to_cam.norm();
    to_cam /= dist;
    if (bvh_.intersect_any(s + eps * to_cam, to_cam, dist - 2.0 * eps))
      return kHidden;  // self-occluded
    return kVisible;
  }

  // Cache rows are keyed by (ring, index); a pose mismatch under the same key
  // (e.g. a jittered plan) bypasses the cache rather than poisoning it.
  std::vector<std::uint8_t>* memo_slot(const CameraView& view,
                                       const Pose& cam_pose) {
    auto key = std::make_pair(view.ring_id, view.index_in_ring);
    auto it = memo_.find(key);
    if (it == memo_.end()) {
      auto& entry = memo_[key];
      entry.pose = cam_pose;
      entry.state.assign(samples_.size(), kUnknown);
      return &entry.state;
    }
    if (it->second.pose.translation != cam_pose.translation ||
        it->second.pose.rotation != cam_pose.rotation)
      return nullptr;
    return &it->second.state;
  }

  struct MemoEntry {
    Pose pose;
    std::vector<std::uint8_t> state;
  };

  const Bvh& bvh_;
  CameraModel cam_;
  CaptureParams params_;
  std::vector<Vec3> samples_;
  std::vector<Vec3> noise_;
  Pose world_to_canonical_;
  std::map<std::pair<int, int>, MemoEntry> memo_;
};

inline PointCloud simulate_reconstruction(
    const TriangleMesh& mesh, const Bvh& bvh, const Vec3& plant_position,
    const ViewPlan& plan, const CameraModel& cam, const CaptureParams& params,
    const Pose& output_from_canonical = Pose{}) {
  CaptureSession session(mesh, bvh, plant_position, cam, params);
  return session.capture(plan, output_from_canonical);
}

// Ground-truth segmentation stand-in: one ray per pixel center, counting
// pixels whose ray hits the plant mesh. Camera pose in the canonical frame.
inline std::size_t topdown_pixel_count(const Bvh& bvh, const Pose& cam_pose,
                                       const CameraModel& cam) {
  cam.validate();
  std::size_t count = 0;
  for (int iy = 0; iy < cam.height; ++iy)
    for (int ix = 0; ix < cam.width; ++ix) {
      Vec3 dir_cam((ix + 0.5 - cam.cx) / cam.fx, (iy + 0.5 - cam.cy) / cam.fy,
                   1.0);
      Vec3 dir = (cam_pose.rotation * dir_cam).normalized();
      if (bvh.intersect(cam_pose.translation, dir)) ++count;
    }
  return count;
}

}  // namespace phenosim
