#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "phenosim/core/geometry.hpp"
#include "phenosim/core/rng.hpp"
#include "phenosim/plant/plant.hpp"
#include "phenosim/robot/robot.hpp"

namespace phenosim {

enum class MethodTag { kFull, kBaseline1, kBaseline2, kBaseline3 };

inline const char* method_name(MethodTag tag) {
  switch (tag) {
    case MethodTag::kFull: return "full";
    case MethodTag::kBaseline1: return "baseline1";
    case MethodTag::kBaseline2: return "baseline2";
    case MethodTag::kBaseline3: return "baseline3";
  }
  return "?";
}

struct CameraView {
  Pose pose;  // world frame; optical axis +z toward the plant look-at point
  int ring_id = 0;        // 0 = top-down, 1..3 = rings
  int index_in_ring = 0;  // 0..20
  double standoff_m = 0.0;
};

struct ViewPlan {
  std::string plant_id;
  Vec3 plant_position = Vec3::Zero();
  MethodTag method_tag = MethodTag::kFull;
  std::vector<CameraView> views;
};

struct ViewPlanParams {
  std::array<double, 3> ring_elevations_rad = {20.0 * kPi / 180.0,
                                               25.0 * kPi / 180.0,
                                               70.0 * kPi / 180.0};
  int views_per_ring = 21;
  double standoff_base_m = 0.18;     // s0
  double standoff_scale_m = 0.012;   // s1, applied to cbrt(mass)
  double lookat_height_m = 0.05;     // along the growth axis from the base
  double azimuth_start_rad = 0.0;
  double azimuth_span_rad = 2.0 * kPi;
};

inline double standoff_for_age(double age_days, const GrowthParams& growth,
                               const ViewPlanParams& params) {
  return params.standoff_base_m +
         params.standoff_scale_m * std::cbrt(logistic_mass(age_days, growth));
}

// The 64-view schedule: one view down the growth axis plus three rings of
// constant elevation. View angles stay fixed over plant age; only the
// standoff grows. Every view is validated through system_ik and the realized
// pose comes from arm forward kinematics, so camera roll matches the
// mechanism. On an infeasible view the standoff is retried once at +10%.
inline ViewPlan plan_views(const std::string& plant_id,
                           const Vec3& plant_position, double age_days,
                           const GrowthParams& growth,
                           const ViewPlanParams& params,
                           const RobotConfig& robot) {
  if (age_days < 0) throw std::invalid_argument("age must be >= 0");
  ViewPlan plan;
  plan.plant_id = plant_id;
  plan.plant_position = plant_position;
  plan.method_tag = MethodTag::kFull;

  const Vec3 axis(1.0, 0.0, 0.0);  // growth axis, toward the robot plane
  const Vec3 lookat = plant_position + params.lookat_height_m * axis;
  const double standoff = standoff_for_age(age_days, growth, params);

  auto realize = [&](double elevation, double azimuth, int ring,
                     int index) {
    for (double s : {standoff, 1.1 * standoff}) {
      Vec3 dir(std::sin(elevation),
               std::cos(elevation) * std::cos(azimuth),
               std::cos(elevation) * std::sin(azimuth));
      Vec3 eye = lookat + s * dir;
      Pose nominal = look_at(eye, lookat);
      try {
        SystemSolution sol = system_ik(nominal, plant_position, robot);
        Pose base = robot.base_pose(sol.platform);
        CameraView view;
        view.pose = base.compose(arm_fk(sol.joints, robot.arm));
        view.ring_id = ring;
        view.index_in_ring = index;
        view.standoff_m = s;
        plan.views.push_back(view);
        return;
      } catch (const KinematicsError& e) {
        if (e.code() == KinematicsError::Code::OutOfWorkspace || s != standoff)
          throw;
      }
    }
  };

  realize(0.5 * kPi, 0.0, 0, 0);
  for (int ring = 1; ring <= 3; ++ring) {
    double elevation = params.ring_elevations_rad[ring - 1];
    for (int i = 0; i < params.views_per_ring; ++i) {
      double azimuth = params.azimuth_start_rad +
                       params.azimuth_span_rad * double(i) /
                           double(params.views_per_ring);
      realize(elevation, azimuth, ring, i);
    }
  }
  return plan;
}

// Single top-down photo.
inline ViewPlan filter_baseline1(const ViewPlan& plan) {
  ViewPlan out;
  out.plant_id = plan.plant_id;
  out.plant_position = plan.plant_position;
  out.method_tag = MethodTag::kBaseline1;
  for (const auto& view : plan.views)
    if (view.ring_id == 0) out.views.push_back(view);
  return out;
}

// Over-canopy subset: keeps views whose camera coordinate along the growth
// axis (the paper's camera x) is at least the threshold, dropping all
// reach-around views.
inline ViewPlan filter_baseline2(const ViewPlan& plan,
                                 double x_threshold_m = 0.17) {
  ViewPlan out;
  out.plant_id = plan.plant_id;
  out.plant_position = plan.plant_position;
  out.method_tag = MethodTag::kBaseline2;
  for (const auto& view : plan.views) {
    double x = view.pose.translation.x() - plan.plant_position.x();
    if (x >= x_threshold_m) out.views.push_back(view);
  }
  return out;
}

// Manual arm placement: one seeded rigid error (translation in the tower
// plane plus yaw about the growth axis) shared by all views of the plant.
inline ViewPlan jitter_baseline3(const ViewPlan& plan, double sigma_xy_m,
                                 double sigma_yaw_rad, std::uint64_t seed) {
  Rng rng(derive_seed(seed, plan.plant_id));
  double dy = rng.normal(0.0, sigma_xy_m);
  double dz = rng.normal(0.0, sigma_xy_m);
  double dyaw = rng.normal(0.0, sigma_yaw_rad);

  Pose err;
  err.rotation = rot_x(dyaw);  // about the growth axis at the plant base
  err.translation = plan.plant_position -
                    err.rotation * plan.plant_position + Vec3(0.0, dy, dz);

  ViewPlan out;
  out.plant_id = plan.plant_id;
  out.plant_position = plan.plant_position;
  out.method_tag = MethodTag::kBaseline3;
  out.views.reserve(plan.views.size());
  for (const auto& view : plan.views) {
    CameraView v = view;
    v.pose = err.compose(view.pose);
    out.views.push_back(v);
  }
  return out;
}

inline void write_view_plan_csv(std::ostream& out, const ViewPlan& plan) {
  char line[512];
  for (const auto& v : plan.views) {
    const Mat3& r = v.pose.rotation;
    const Vec3& t = v.pose.translation;
    std::snprintf(line, sizeof line,
                  "%s,%d,%d,"
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                  "%.12g,%.12g,%.12g,%.9g,%s\n",
                  plan.plant_id.c_str(), v.ring_id, v.index_in_ring, r(0, 0),
                  r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0),
                  r(2, 1), r(2, 2), t.x(), t.y(), t.z(), v.standoff_m,
                  method_name(plan.method_tag));
    out << line;
  }
}

inline const char* view_plan_csv_header() {
  return "plant_id,ring,index,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,"
         "standoff,method_tag\n";
}

}  // namespace phenosim
