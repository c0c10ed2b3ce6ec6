#pragma once

#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "phenosim/capture/capture.hpp"
#include "phenosim/metrics/metrics.hpp"
#include "phenosim/plan/views.hpp"
#include "phenosim/plant/plant.hpp"
#include "phenosim/robot/robot.hpp"

namespace phenosim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BaselineParams {
  double b2_x_threshold_m = 0.17;
  double b3_sigma_xy_m = 0.02;
  double b3_sigma_yaw_rad = 0.05;
};

struct PipelineConfig {
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  int jobs = 1;
  std::vector<MethodTag> methods = {MethodTag::kFull, MethodTag::kBaseline1,
                                    MethodTag::kBaseline2,
                                    MethodTag::kBaseline3};
  CohortConfig cohort = default_cohort_config(1);
  double attrition_fraction = 0.0;  // seeded plant drop, off by default
  RobotConfig robot;
  ViewPlanParams views;
  CameraModel camera;
  CaptureParams capture;
  MetricsConfig metrics;
  BaselineParams baselines;
  std::vector<Vec2> stations;  // optional explicit per-plant stations

  // Default station grid inside the CDPR workspace, one per cohort slot.
  Vec2 station_for(std::size_t plant_index) const {
    if (!stations.empty()) {
      if (plant_index >= stations.size())
        throw ConfigError("station table shorter than cohort");
      return stations[plant_index];
    }
    // stay clear of the side walls: near the bottom rows the minimum-tension
    // bound makes stations close to a wall statically infeasible
    return Vec2(0.60 + 0.21 * double(plant_index % 9),
                0.35 + 0.33 * double(plant_index / 9));
  }

  Vec3 plant_position(std::size_t plant_index) const {
    Vec2 s = station_for(plant_index);
    return Vec3(0.0, s.x(), s.y());
  }
};

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline MethodTag parse_method(const std::string& name) {
  if (name == "full") return MethodTag::kFull;
  if (name == "baseline1") return MethodTag::kBaseline1;
  if (name == "baseline2") return MethodTag::kBaseline2;
  if (name == "baseline3") return MethodTag::kBaseline3;
  throw ConfigError("unknown method tag: " + name);
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j) {
  using detail::maybe;
  PipelineConfig cfg;
  try {
    maybe(j, "master_seed", cfg.master_seed);
    maybe(j, "output_dir", cfg.output_dir);
    maybe(j, "jobs", cfg.jobs);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j.at("methods"))
        cfg.methods.push_back(detail::parse_method(m.get<std::string>()));
      if (cfg.methods.empty()) throw ConfigError("methods list is empty");
    }

    if (j.contains("cohort")) {
      const auto& c = j.at("cohort");
      maybe(c, "leaf_area_density", cfg.cohort.leaf_area_density_g_per_m2);
      maybe(c, "dry_fraction", cfg.cohort.dry_fraction);
      maybe(c, "mass_variation", cfg.cohort.mass_variation);
      maybe(c, "attrition_fraction", cfg.attrition_fraction);
      if (c.contains("experiments")) {
        cfg.cohort.experiments.clear();
        for (const auto& e : c.at("experiments")) {
          ExperimentPlan plan;
          plan.experiment_id = e.at("id").get<int>();
          for (const auto& [age, count] : e.at("ages").items())
            plan.plants_per_age[std::stoi(age)] = count.get<int>();
          if (e.contains("growth")) {
            const auto& g = e.at("growth");
            maybe(g, "K", plan.growth.asymptotic_mass_g);
            maybe(g, "r", plan.growth.rate_per_day);
            maybe(g, "t0", plan.growth.inflection_day);
            maybe(g, "nutrient_multiplier", plan.growth.nutrient_multiplier);
          }
          cfg.cohort.experiments.push_back(std::move(plan));
        }
      }
    }
    cfg.cohort.master_seed = cfg.master_seed;

    if (j.contains("robot")) {
      const auto& r = j.at("robot");
      maybe(r, "plane_offset", cfg.robot.plane_offset_m);
      maybe(r, "min_tension", cfg.robot.cdpr.min_tension_n);
      maybe(r, "max_tension", cfg.robot.cdpr.max_tension_n);
      maybe(r, "platform_mass", cfg.robot.cdpr.platform_mass_kg);
      if (r.contains("anchors"))
        for (int i = 0; i < 4; ++i)
          cfg.robot.cdpr.anchors[i] =
              Vec2(r.at("anchors")[i][0].get<double>(),
                   r.at("anchors")[i][1].get<double>());
      if (r.contains("attachments"))
        for (int i = 0; i < 4; ++i)
          cfg.robot.cdpr.attachments[i] =
              Vec2(r.at("attachments")[i][0].get<double>(),
                   r.at("attachments")[i][1].get<double>());
      if (r.contains("workspace")) {
        cfg.robot.cdpr.workspace_min =
            Vec2(r.at("workspace")[0][0].get<double>(),
                 r.at("workspace")[0][1].get<double>());
        cfg.robot.cdpr.workspace_max =
            Vec2(r.at("workspace")[1][0].get<double>(),
                 r.at("workspace")[1][1].get<double>());
      }
      if (r.contains("link_lengths"))
        for (int i = 0; i < 3; ++i)
          cfg.robot.arm.link_lengths_m[i] =
              r.at("link_lengths")[i].get<double>();
      if (r.contains("joint_limits"))
        for (int i = 0; i < 4; ++i)
          for (int b = 0; b < 2; ++b)
            cfg.robot.arm.joint_limits_rad[i][b] =
                r.at("joint_limits")[i][b].get<double>();
      if (r.contains("stations"))
        for (const auto& s : r.at("stations"))
          cfg.stations.emplace_back(s[0].get<double>(), s[1].get<double>());
    }

    if (j.contains("views")) {
      const auto& v = j.at("views");
      if (v.contains("elevations_deg"))
        for (int i = 0; i < 3; ++i)
          cfg.views.ring_elevations_rad[i] =
              v.at("elevations_deg")[i].get<double>() * kPi / 180.0;
      maybe(v, "views_per_ring", cfg.views.views_per_ring);
      maybe(v, "standoff_base", cfg.views.standoff_base_m);
      maybe(v, "standoff_scale", cfg.views.standoff_scale_m);
      maybe(v, "lookat_height", cfg.views.lookat_height_m);
      maybe(v, "azimuth_start", cfg.views.azimuth_start_rad);
      maybe(v, "azimuth_span", cfg.views.azimuth_span_rad);
    }

    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      maybe(c, "fx", cfg.camera.fx);
      maybe(c, "fy", cfg.camera.fy);
      maybe(c, "cx", cfg.camera.cx);
      maybe(c, "cy", cfg.camera.cy);
      maybe(c, "width", cfg.camera.width);
      maybe(c, "height", cfg.camera.height);
      cfg.camera.validate();
    }

    if (j.contains("capture")) {
      const auto& c = j.at("capture");
      maybe(c, "samples_per_m2", cfg.capture.samples_per_m2);
      maybe(c, "min_views_visible", cfg.capture.min_views_visible);
      maybe(c, "noise_sigma", cfg.capture.noise_sigma_m);
      cfg.capture.validate();
    }

    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      maybe(m, "outlier_k", cfg.metrics.outlier_k_neighbors);
      maybe(m, "outlier_std_ratio", cfg.metrics.outlier_std_ratio);
      if (m.contains("crop_min"))
        for (int i = 0; i < 3; ++i)
          cfg.metrics.crop_box.min[i] = m.at("crop_min")[i].get<double>();
      if (m.contains("crop_max"))
        for (int i = 0; i < 3; ++i)
          cfg.metrics.crop_box.max[i] = m.at("crop_max")[i].get<double>();
      maybe(m, "sample_radius", cfg.metrics.sample_radius_m);
      maybe(m, "recon_cell", cfg.metrics.recon_cell_m);
      maybe(m, "voxel_size", cfg.metrics.voxel_size_m);
    }

    if (j.contains("baselines")) {
      const auto& b = j.at("baselines");
      maybe(b, "b2_x_threshold", cfg.baselines.b2_x_threshold_m);
      maybe(b, "b3_sigma_xy", cfg.baselines.b3_sigma_xy_m);
      maybe(b, "b3_sigma_yaw", cfg.baselines.b3_sigma_yaw_rad);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace phenosim
