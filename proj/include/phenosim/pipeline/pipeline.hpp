#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "phenosim/capture/capture.hpp"
#include "phenosim/core/io.hpp"
#include "phenosim/metrics/metrics.hpp"
#include "phenosim/pipeline/config.hpp"
#include "phenosim/pipeline/svg.hpp"
#include "phenosim/stats/stats.hpp"

namespace phenosim {

// Raised when a statistical stage cannot produce a meaningful result
// (empty clouds, degenerate groupings, collinear regressors).
class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Published lettuce-study values shown alongside our synthetic results in the
// output tables and plots. Row order: surface area, volume, b1 projected
// area, b2 surface area, b2 volume.
struct RegressionRef {
  const char* metric;
  double fresh_r2, fresh_mae_g, dry_r2, dry_mae_g;
};
inline constexpr RegressionRef kRegressionRefs[5] = {
    {"surface_area", 0.845, 11.216, 0.846, 0.586},
    {"volume", 0.833, 11.671, 0.832, 0.617},
    {"baseline1_projected_area", 0.537, 19.976, 0.505, 1.084},
    {"baseline2_surface_area", 0.292, 26.049, 0.285, 1.401},
    {"baseline2_volume", 0.277, 26.439, 0.269, 1.422},
};

struct AnovaRef {
  const char* metric;
  double exp1_age_p, exp2_age_p, nutrient_p;
};
inline constexpr AnovaRef kAnovaRefs[7] = {
    {"fresh_mass_gt", 0.00156, 0.00037, 0.00284},
    {"dry_mass_gt", 0.00137, 0.00263, 0.00288},
    {"surface_area", 0.00219, 0.00352, 0.03134},
    {"volume", 0.00204, 0.00338, 0.03766},
    {"baseline1_projected_area", 0.00086, 0.02661, 0.32745},
    {"baseline2_surface_area", 0.00287, 0.31166, 0.32066},
    {"baseline2_volume", 0.00265, 0.26535, 0.28106},
};

struct OcclusionRef {
  const char* metric;
  double fresh_k, dry_k;
};
inline constexpr OcclusionRef kOcclusionRefs[5] = {
    {"surface_area", 0.236, 0.593},
    {"volume", 0.261, 0.659},
    {"baseline1_projected_area", 0.519, 0.883},
    {"baseline2_surface_area", 0.333, 0.680},
    {"baseline2_volume", 0.350, 0.743},
};

inline std::vector<std::vector<std::string>> read_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing input file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline std::string checksum_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot checksum " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string data = ss.str();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                (unsigned long long)fnv1a64(data.data(), data.size()));
  return buf;
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int count = std::min<std::size_t>(jobs, n);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

// Canonical serialization of the full configuration; its hash goes into the
// stage manifests so artifacts can be traced back to one configuration.
inline nlohmann::json dump_config(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  std::vector<std::string> methods;
  for (auto m : cfg.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  nlohmann::json experiments = nlohmann::json::array();
  for (const auto& e : cfg.cohort.experiments) {
    nlohmann::json ages;
    for (const auto& [age, count] : e.plants_per_age)
      ages[std::to_string(age)] = count;
    experiments.push_back({{"id", e.experiment_id},
                           {"ages", ages},
                           {"growth",
                            {{"K", e.growth.asymptotic_mass_g},
                             {"r", e.growth.rate_per_day},
                             {"t0", e.growth.inflection_day},
                             {"nutrient_multiplier",
                              e.growth.nutrient_multiplier}}}});
  }
  j["cohort"] = {{"experiments", experiments},
                 {"leaf_area_density", cfg.cohort.leaf_area_density_g_per_m2},
                 {"dry_fraction", cfg.cohort.dry_fraction},
                 {"mass_variation", cfg.cohort.mass_variation},
                 {"attrition_fraction", cfg.attrition_fraction}};
  j["robot"] = {{"plane_offset", cfg.robot.plane_offset_m},
                {"min_tension", cfg.robot.cdpr.min_tension_n},
                {"max_tension", cfg.robot.cdpr.max_tension_n},
                {"platform_mass", cfg.robot.cdpr.platform_mass_kg},
                {"link_lengths", cfg.robot.arm.link_lengths_m}};
  j["views"] = {{"views_per_ring", cfg.views.views_per_ring},
                {"standoff_base", cfg.views.standoff_base_m},
                {"standoff_scale", cfg.views.standoff_scale_m},
                {"lookat_height", cfg.views.lookat_height_m}};
  j["camera"] = {{"fx", cfg.camera.fx},   {"fy", cfg.camera.fy},
                 {"cx", cfg.camera.cx},   {"cy", cfg.camera.cy},
                 {"width", cfg.camera.width}, {"height", cfg.camera.height}};
  j["capture"] = {{"samples_per_m2", cfg.capture.samples_per_m2},
                  {"min_views_visible", cfg.capture.min_views_visible},
                  {"noise_sigma", cfg.capture.noise_sigma_m}};
  j["metrics"] = {{"outlier_k", cfg.metrics.outlier_k_neighbors},
                  {"outlier_std_ratio", cfg.metrics.outlier_std_ratio},
                  {"sample_radius", cfg.metrics.sample_radius_m},
                  {"recon_cell", cfg.metrics.recon_cell_m},
                  {"voxel_size", cfg.metrics.voxel_size_m}};
  j["baselines"] = {{"b2_x_threshold", cfg.baselines.b2_x_threshold_m},
                    {"b3_sigma_xy", cfg.baselines.b3_sigma_xy_m},
                    {"b3_sigma_yaw", cfg.baselines.b3_sigma_yaw_rad}};
  return j;
}

inline std::string config_fingerprint(const PipelineConfig& cfg) {
  std::string dump = dump_config(cfg).dump();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                (unsigned long long)fnv1a64(dump.data(), dump.size()));
  return buf;
}

struct RunManifest {
  std::string stage;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // path -> checksum
  std::map<std::string, std::string> outputs;  // path -> checksum
  double wall_clock_s = 0.0;
  std::string version = "0.1.0";

  void write(const std::string& path) const {
    nlohmann::json j;
    j["stage"] = stage;
    j["config_hash"] = config_hash;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_clock_s"] = wall_clock_s;
    j["version"] = version;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
  }
};

namespace detail {

class StageTimer {
 public:
  StageTimer(std::string stage, const PipelineConfig& cfg)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.stage = std::move(stage);
    manifest_.config_hash = config_fingerprint(cfg);
    dir_ = cfg.output_dir;
  }
  void input(const std::string& rel) {
    manifest_.inputs[rel] = checksum_file(dir_ + "/" + rel);
  }
  void output(const std::string& rel) {
    manifest_.outputs[rel] = checksum_file(dir_ + "/" + rel);
  }
  void finish() {
    manifest_.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    manifest_.write(dir_ + "/manifest_" + manifest_.stage + ".json");
  }

 private:
  RunManifest manifest_;
  std::string dir_;
  std::chrono::steady_clock::time_point start_;
};

// plants.csv rows carried between stages
struct PlantRecord {
  std::string plant_id;
  int experiment = 1;
  double age_days = 0.0;
  double fresh_g = 0.0;
  double dry_g = 0.0;
};

inline std::vector<PlantRecord> read_plants_csv(const std::string& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 5 || rows[0][0] != "plant_id")
    throw ConfigError("malformed plants.csv: " + path);
  std::vector<PlantRecord> plants;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 5) throw ConfigError("short row in plants.csv");
    PlantRecord p;
    p.plant_id = rows[i][0];
    p.experiment = std::stoi(rows[i][1]);
    p.age_days = std::stod(rows[i][2]);
    p.fresh_g = std::stod(rows[i][3]);
    p.dry_g = std::stod(rows[i][4]);
    plants.push_back(std::move(p));
  }
  return plants;
}

inline GrowthParams growth_for_experiment(const PipelineConfig& cfg,
                                          int experiment) {
  for (const auto& e : cfg.cohort.experiments)
    if (e.experiment_id == experiment) return e.growth;
  throw ConfigError("experiment " + std::to_string(experiment) +
                    " not in config");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// stage 1: cohort synthesis

inline void run_synth(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  detail::StageTimer timer("synth", cfg);
  fs::create_directories(cfg.output_dir + "/meshes");

  std::vector<PlantSpec> specs = build_cohort(cfg.cohort);
  if (cfg.attrition_fraction > 0.0) {
    // seeded attrition: drop a random subset, mimicking lost plants
    std::size_t drop = std::size_t(
        std::llround(cfg.attrition_fraction * double(specs.size())));
    Rng rng(derive_seed(cfg.master_seed, "attrition"));
    for (std::size_t i = 0; i < drop && i + 1 < specs.size(); ++i) {
      std::size_t j = i + rng.next_below(specs.size() - i);
      std::swap(specs[i], specs[j]);
    }
    specs.erase(specs.begin(), specs.begin() + drop);
    std::sort(specs.begin(), specs.end(),
              [](const PlantSpec& a, const PlantSpec& b) {
                return a.plant_id < b.plant_id;
              });
  }

  std::vector<PlantTruth> plants(specs.size());
  detail::parallel_for(specs.size(), cfg.jobs,
                       [&](std::size_t i) { plants[i] = generate_plant(specs[i]); });

  std::ofstream csv(cfg.output_dir + "/plants.csv");
  if (!csv) throw std::runtime_error("cannot write plants.csv");
  csv << "plant_id,experiment,age_days,fresh_mass_g,dry_mass_g\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    csv << specs[i].plant_id << "," << specs[i].experiment_id << ","
        << detail::fmt(specs[i].age_days) << ","
        << detail::fmt(plants[i].fresh_mass_g) << ","
        << detail::fmt(plants[i].dry_mass_g) << "\n";
    write_obj(cfg.output_dir + "/meshes/" + specs[i].plant_id + ".obj",
              plants[i].mesh);
  }
  csv.close();

  timer.output("plants.csv");
  for (const auto& s : specs) timer.output("meshes/" + s.plant_id + ".obj");
  timer.finish();
}

// ---------------------------------------------------------------------------
// stage 2: capture

inline void run_capture(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  detail::StageTimer timer("capture", cfg);
  auto plants = detail::read_plants_csv(cfg.output_dir + "/plants.csv");
  timer.input("plants.csv");
  fs::create_directories(cfg.output_dir + "/clouds");

  bool want_b1 = false;
  for (auto m : cfg.methods)
    if (m == MethodTag::kBaseline1) want_b1 = true;

  struct CaptureResult {
    bool ok = false;
    std::string diagnostic;
    std::vector<std::string> plan_lines;  // one blob per method
    std::map<std::string, std::pair<int, std::size_t>> counts;  // n_views, n_points
    std::map<std::string, std::pair<std::size_t, std::size_t>> coverage;
    std::size_t pixel_count = 0;
    double base_depth_m = 0.0;
  };
  std::vector<CaptureResult> results(plants.size());

  detail::parallel_for(plants.size(), cfg.jobs, [&](std::size_t i) {
    const auto& plant = plants[i];
    CaptureResult& res = results[i];
    try {
      TriangleMesh mesh =
          read_obj(cfg.output_dir + "/meshes/" + plant.plant_id + ".obj");
      Bvh bvh(mesh);
      Vec3 position = cfg.plant_position(i);
      GrowthParams growth = detail::growth_for_experiment(cfg, plant.experiment);
      ViewPlan full = plan_views(plant.plant_id, position, plant.age_days,
                                 growth, cfg.views, cfg.robot);
      CaptureParams params = cfg.capture;
      params.seed = derive_seed(cfg.master_seed, plant.plant_id + "|capture");
      Pose canonical = plant_frame_pose(position);
      CaptureSession session(mesh, bvh, position, cfg.camera, params);
      std::size_t candidates = session.candidate_count();

      auto capture_one = [&](const ViewPlan& plan,
                             const Pose& output_from_canonical) {
        PointCloud cloud = session.capture(plan, output_from_canonical);
        std::string name =
            plant.plant_id + "_" + method_name(plan.method_tag) + ".ply";
        write_ply(cfg.output_dir + "/clouds/" + name, cloud);
        res.counts[method_name(plan.method_tag)] = {int(plan.views.size()),
                                                    cloud.size()};
        res.coverage[method_name(plan.method_tag)] = {candidates,
                                                      cloud.size()};
        std::ostringstream plan_csv;
        write_view_plan_csv(plan_csv, plan);
        res.plan_lines.push_back(plan_csv.str());
      };

      for (MethodTag tag : cfg.methods) {
        switch (tag) {
          case MethodTag::kFull:
            capture_one(full, Pose{});
            break;
          case MethodTag::kBaseline1: {
            ViewPlan b1 = filter_baseline1(full);
            if (b1.views.empty())
              throw std::runtime_error("no top-down view realized");
            Pose cam_canonical =
                canonical.inverse().compose(b1.views[0].pose);
            Vec3 base_cam = cam_canonical.rotation.transpose() *
                            (Vec3::Zero() - cam_canonical.translation);
            res.pixel_count =
                topdown_pixel_count(bvh, cam_canonical, cfg.camera);
            res.base_depth_m = base_cam.z();
            res.counts[method_name(tag)] = {1, res.pixel_count};
            std::ostringstream plan_csv;
            write_view_plan_csv(plan_csv, b1);
            res.plan_lines.push_back(plan_csv.str());
            break;
          }
          case MethodTag::kBaseline2:
            capture_one(filter_baseline2(full, cfg.baselines.b2_x_threshold_m),
                        Pose{});
            break;
          case MethodTag::kBaseline3: {
            ViewPlan b3 = jitter_baseline3(full, cfg.baselines.b3_sigma_xy_m,
                                           cfg.baselines.b3_sigma_yaw_rad,
                                           cfg.master_seed);
            // the reconstruction trusts the nominal poses, so the cloud
            // comes out rigidly misaligned by the inverse placement error
            Pose err = b3.views[0].pose.compose(full.views[0].pose.inverse());
            Pose misalign =
                canonical.inverse().compose(err.inverse()).compose(canonical);
            capture_one(b3, misalign);
            break;
          }
        }
      }
      res.ok = true;
    } catch (const KinematicsError& e) {
      res.diagnostic = e.what();
    }
  });

  std::ofstream manifest(cfg.output_dir + "/capture_manifest.csv");
  manifest << "plant_id,method_tag,n_views,n_points\n";
  std::ofstream coverage(cfg.output_dir + "/coverage.csv");
  coverage << "plant_id,method_tag,n_candidates,n_points,coverage_fraction\n";
  std::ofstream plans(cfg.output_dir + "/plans.csv");
  plans << view_plan_csv_header();
  std::ofstream pixels;
  if (want_b1) {
    pixels.open(cfg.output_dir + "/pixels.csv");
    pixels << "plant_id,pixel_count,base_depth_m\n";
  }

  std::size_t captured = 0;
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const auto& res = results[i];
    if (!res.ok) {
      std::cerr << "capture: skipping plant " << plants[i].plant_id << ": "
                << res.diagnostic << "\n";
      continue;
    }
    ++captured;
    for (MethodTag tag : cfg.methods) {
      auto it = res.counts.find(method_name(tag));
      if (it == res.counts.end()) continue;
      manifest << plants[i].plant_id << "," << it->first << ","
               << it->second.first << "," << it->second.second << "\n";
      auto cov = res.coverage.find(method_name(tag));
      if (cov != res.coverage.end()) {
        double frac = cov->second.first
                          ? double(cov->second.second) / double(cov->second.first)
                          : 0.0;
        coverage << plants[i].plant_id << "," << it->first << ","
                 << cov->second.first << "," << cov->second.second << ","
                 << detail::fmt(frac) << "\n";
      }
    }
    for (const auto& blob : res.plan_lines) plans << blob;
    if (want_b1)
      pixels << plants[i].plant_id << "," << res.pixel_count << ","
             << detail::fmt(res.base_depth_m) << "\n";
  }
  manifest.close();
  coverage.close();
  plans.close();
  if (pixels.is_open()) pixels.close();

  if (captured == 0)
    throw KinematicsError(KinematicsError::Code::Unreachable,
                          "no plant could be captured");

  timer.output("capture_manifest.csv");
  timer.output("coverage.csv");
  timer.output("plans.csv");
  if (want_b1) timer.output("pixels.csv");
  timer.finish();
}

// ---------------------------------------------------------------------------
// stage 3: analysis

namespace detail {

struct MetricKey {
  const char* name;
  MethodTag method;
  int field;  // 0 = surface area, 1 = voxel volume, 2 = projected area
};
inline constexpr MetricKey kMetricKeys[5] = {
    {"surface_area", MethodTag::kFull, 0},
    {"volume", MethodTag::kFull, 1},
    {"baseline1_projected_area", MethodTag::kBaseline1, 2},
    {"baseline2_surface_area", MethodTag::kBaseline2, 0},
    {"baseline2_volume", MethodTag::kBaseline2, 1},
};

inline std::optional<double> metric_value(const MetricRow& row, int field,
                                          double voxel_size) {
  switch (field) {
    case 0: return row.surface_area_m2;
    case 1: return row.voxel_volume_m3(voxel_size);
    default: return row.projected_area_m2;
  }
}

}  // namespace detail

// Computes metrics.csv rows in memory; exposed separately so the statistics
// can run on the same records without a filesystem round-trip.
inline std::vector<MetricRow> compute_metric_rows(const PipelineConfig& cfg) {
  auto plants = detail::read_plants_csv(cfg.output_dir + "/plants.csv");

  bool want_b1 = false;
  for (auto m : cfg.methods)
    if (m == MethodTag::kBaseline1) want_b1 = true;
  std::map<std::string, std::pair<std::size_t, double>> pixel_rows;
  if (want_b1) {
    auto rows = detail::read_csv(cfg.output_dir + "/pixels.csv");
    for (std::size_t i = 1; i < rows.size(); ++i)
      pixel_rows[rows[i][0]] = {std::stoull(rows[i][1]), std::stod(rows[i][2])};
  }

  struct Task {
    std::size_t plant;
    MethodTag method;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < plants.size(); ++i)
    for (MethodTag tag : cfg.methods) tasks.push_back({i, tag});

  std::vector<MetricRow> rows(tasks.size());
  detail::parallel_for(tasks.size(), cfg.jobs, [&](std::size_t t) {
    const auto& plant = plants[tasks[t].plant];
    MethodTag tag = tasks[t].method;
    MetricRow& row = rows[t];
    row.plant_id = plant.plant_id;
    row.experiment = plant.experiment;
    row.age_days = plant.age_days;
    row.gt_fresh_g = plant.fresh_g;
    row.gt_dry_g = plant.dry_g;
    row.method_tag = method_name(tag);
    if (tag == MethodTag::kBaseline1) {
      auto it = pixel_rows.find(plant.plant_id);
      if (it == pixel_rows.end())
        throw ConfigError("missing pixel row for " + plant.plant_id);
      row.projected_area_m2 =
          projected_area(it->second.first, cfg.camera, it->second.second);
      return;
    }
    std::string path = cfg.output_dir + "/clouds/" + plant.plant_id + "_" +
                       method_name(tag) + ".ply";
    PointCloud cloud = read_ply(path);
    MetricsConfig mcfg = cfg.metrics;
    mcfg.seed = derive_seed(cfg.master_seed, plant.plant_id + "|metrics");
    try {
      SurfaceMetrics m = estimate_metrics(cloud, mcfg);
      row.surface_area_m2 = m.surface_area_m2;
      row.voxel_count = m.voxel_count;
    } catch (const std::invalid_argument& e) {
      throw StatsError(std::string("metrics for ") + plant.plant_id + "/" +
                       method_name(tag) + ": " + e.what());
    }
  });
  return rows;
}

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricRow>& rows,
                              double voxel_size) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "plant_id,experiment,age_days,method_tag,gt_fresh_g,gt_dry_g,"
         "surface_area_m2,voxel_count,voxel_volume_m3,projected_area_m2\n";
  for (const auto& r : rows) {
    out << r.plant_id << "," << r.experiment << "," << detail::fmt(r.age_days)
        << "," << r.method_tag << "," << detail::fmt(r.gt_fresh_g) << ","
        << detail::fmt(r.gt_dry_g) << ",";
    if (r.surface_area_m2) out << detail::fmt(*r.surface_area_m2);
    out << ",";
    if (r.voxel_count) out << *r.voxel_count;
    out << ",";
    if (auto v = r.voxel_volume_m3(voxel_size)) out << detail::fmt(*v);
    out << ",";
    if (r.projected_area_m2) out << detail::fmt(*r.projected_area_m2);
    out << "\n";
  }
}

inline std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  auto raw = detail::read_csv(path);
  if (raw.empty() || raw[0].empty() || raw[0][0] != "plant_id")
    throw ConfigError("malformed metrics.csv: " + path);
  std::vector<MetricRow> rows;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto& f = raw[i];
    if (f.size() < 10) throw ConfigError("short row in metrics.csv");
    MetricRow r;
    r.plant_id = f[0];
    r.experiment = std::stoi(f[1]);
    r.age_days = std::stod(f[2]);
    r.method_tag = f[3];
    r.gt_fresh_g = std::stod(f[4]);
    r.gt_dry_g = std::stod(f[5]);
    if (!f[6].empty()) r.surface_area_m2 = std::stod(f[6]);
    if (!f[7].empty()) r.voxel_count = std::stoull(f[7]);
    if (!f[9].empty()) r.projected_area_m2 = std::stod(f[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void run_analyze(const PipelineConfig& cfg) {
  detail::StageTimer timer("analyze", cfg);
  timer.input("plants.csv");

  std::vector<MetricRow> rows = compute_metric_rows(cfg);
  write_metrics_csv(cfg.output_dir + "/metrics.csv", rows,
                    cfg.metrics.voxel_size_m);

  // gather per-metric paired samples, ordered by plants.csv row order
  auto samples_for = [&](const detail::MetricKey& key, bool fresh,
                         std::vector<double>& x, std::vector<double>& m) {
    x.clear();
    m.clear();
    for (const auto& r : rows) {
      if (r.method_tag != method_name(key.method)) continue;
      auto v = detail::metric_value(r, key.field, cfg.metrics.voxel_size_m);
      if (!v) continue;
      x.push_back(*v);
      m.push_back(fresh ? r.gt_fresh_g : r.gt_dry_g);
    }
  };

  bool have[5];
  for (int k = 0; k < 5; ++k) {
    have[k] = false;
    for (auto m : cfg.methods)
      if (m == detail::kMetricKeys[k].method) have[k] = true;
  }

  try {
    // regression table, one row per estimation metric (fresh pair, dry pair)
    std::ofstream reg(cfg.output_dir + "/regression.csv");
    reg << "metric,n,fresh_slope,fresh_intercept,fresh_r2,fresh_loocv_mae_g,"
           "dry_slope,dry_intercept,dry_r2,dry_loocv_mae_g,"
           "ref_fresh_r2,ref_fresh_mae_g,ref_dry_r2,ref_dry_mae_g\n";
    for (int k = 0; k < 5; ++k) {
      if (!have[k]) continue;
      std::vector<double> x, mf, md;
      samples_for(detail::kMetricKeys[k], true, x, mf);
      samples_for(detail::kMetricKeys[k], false, x, md);
      RegressionResult rf = ols_fit(x, mf);
      RegressionResult rd = ols_fit(x, md);
      const auto& ref = detail::kRegressionRefs[k];
      reg << ref.metric << "," << rf.n << "," << detail::fmt(rf.slope) << ","
          << detail::fmt(rf.intercept) << "," << detail::fmt(rf.r2) << ","
          << detail::fmt(rf.loocv_mae) << "," << detail::fmt(rd.slope) << ","
          << detail::fmt(rd.intercept) << "," << detail::fmt(rd.r2) << ","
          << detail::fmt(rd.loocv_mae) << "," << detail::fmt(ref.fresh_r2)
          << "," << detail::fmt(ref.fresh_mae_g) << ","
          << detail::fmt(ref.dry_r2) << "," << detail::fmt(ref.dry_mae_g)
          << "\n";
    }
    reg.close();

    // ANOVA table: age discrimination per experiment, nutrient at day 28
    auto anova_groups = [&](int metric_idx, int test) -> std::vector<std::vector<double>> {
      // metric_idx: 0 fresh GT, 1 dry GT, 2.. = kMetricKeys[metric_idx-2]
      auto value_of = [&](const MetricRow& r) -> std::optional<double> {
        if (metric_idx == 0) return r.gt_fresh_g;
        if (metric_idx == 1) return r.gt_dry_g;
        const auto& key = detail::kMetricKeys[metric_idx - 2];
        if (r.method_tag != method_name(key.method)) return std::nullopt;
        return detail::metric_value(r, key.field, cfg.metrics.voxel_size_m);
      };
      // ground-truth rows exist once per method; use the full rows (or the
      // first method present) as the per-plant carrier
      std::map<double, std::vector<double>> by_group;
      std::string gt_carrier = method_name(cfg.methods.front());
      for (const auto& r : rows) {
        if (metric_idx <= 1 && r.method_tag != gt_carrier) continue;
        auto v = value_of(r);
        if (!v) continue;
        if (test == 0) {  // experiment 1, ages 15 and 21 only
          if (r.experiment != 1 || (r.age_days != 15 && r.age_days != 21))
            continue;
          by_group[r.age_days].push_back(*v);
        } else if (test == 1) {  // experiment 2, all harvest ages
          if (r.experiment != 2) continue;
          by_group[r.age_days].push_back(*v);
        } else {  // nutrient schedule, day-28 plants across experiments
          if (r.age_days != 28) continue;
          by_group[double(r.experiment)].push_back(*v);
        }
      }
      std::vector<std::vector<double>> groups;
      for (auto& [key, g] : by_group) groups.push_back(std::move(g));
      return groups;
    };

    std::ofstream anova(cfg.output_dir + "/anova.csv");
    anova << "metric,exp1_age_f,exp1_age_p,exp2_age_f,exp2_age_p,"
             "nutrient_f,nutrient_p,ref_exp1_age_p,ref_exp2_age_p,"
             "ref_nutrient_p\n";
    for (int mi = 0; mi < 7; ++mi) {
      if (mi >= 2 && !have[mi - 2]) continue;
      anova << detail::kAnovaRefs[mi].metric;
      for (int test = 0; test < 3; ++test) {
        AnovaResult res = anova_oneway(anova_groups(mi, test));
        anova << "," << detail::fmt(res.f_stat) << ","
              << detail::fmt(res.p_value);
      }
      anova << "," << detail::fmt(detail::kAnovaRefs[mi].exp1_age_p) << ","
            << detail::fmt(detail::kAnovaRefs[mi].exp2_age_p) << ","
            << detail::fmt(detail::kAnovaRefs[mi].nutrient_p) << "\n";
    }
    anova.close();

    // occlusion-compensated fits
    std::ofstream occ(cfg.output_dir + "/occlusion.csv");
    occ << "metric,n,fresh_rho,fresh_k,fresh_sse,dry_rho,dry_k,dry_sse,"
           "ref_fresh_k,ref_dry_k\n";
    for (int k = 0; k < 5; ++k) {
      if (!have[k]) continue;
      std::vector<double> x, mf, md;
      samples_for(detail::kMetricKeys[k], true, x, mf);
      samples_for(detail::kMetricKeys[k], false, x, md);
      OcclusionFit ff = fit_occlusion_model(
          x, mf, derive_seed(cfg.master_seed,
                             std::string("occfit|fresh|") +
                                 detail::kMetricKeys[k].name));
      OcclusionFit fd = fit_occlusion_model(
          x, md, derive_seed(cfg.master_seed,
                             std::string("occfit|dry|") +
                                 detail::kMetricKeys[k].name));
      const auto& ref = detail::kOcclusionRefs[k];
      occ << ref.metric << "," << ff.n << "," << detail::fmt(ff.rho) << ","
          << detail::fmt(ff.k) << "," << detail::fmt(ff.sse) << ","
          << detail::fmt(fd.rho) << "," << detail::fmt(fd.k) << ","
          << detail::fmt(fd.sse) << "," << detail::fmt(ref.fresh_k) << ","
          << detail::fmt(ref.dry_k) << "\n";
    }
    occ.close();
  } catch (const std::invalid_argument& e) {
    throw StatsError(e.what());
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("occlusion model") != std::string::npos)
      throw StatsError(e.what());
    throw;
  }

  timer.output("metrics.csv");
  timer.output("regression.csv");
  timer.output("anova.csv");
  timer.output("occlusion.csv");
  timer.finish();
}

// ---------------------------------------------------------------------------
// stage 4: report

inline void run_report(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  detail::StageTimer timer("report", cfg);
  timer.input("metrics.csv");
  timer.input("regression.csv");
  timer.input("occlusion.csv");
  fs::create_directories(cfg.output_dir + "/report");

  auto rows = read_metrics_csv(cfg.output_dir + "/metrics.csv");
  auto reg = detail::read_csv(cfg.output_dir + "/regression.csv");
  auto occ = detail::read_csv(cfg.output_dir + "/occlusion.csv");

  auto find_row = [](const std::vector<std::vector<std::string>>& table,
                     const std::string& metric)
      -> const std::vector<std::string>* {
    for (std::size_t i = 1; i < table.size(); ++i)
      if (!table[i].empty() && table[i][0] == metric) return &table[i];
    return nullptr;
  };

  std::vector<std::string> written;
  for (int k = 0; k < 5; ++k) {
    const auto& key = detail::kMetricKeys[k];
    const auto* r = find_row(reg, key.name);
    const auto* o = find_row(occ, key.name);
    if (!r) continue;
    for (int target = 0; target < 2; ++target) {
      bool fresh = target == 0;
      std::vector<double> x, m;
      for (const auto& row : rows) {
        if (row.method_tag != method_name(key.method)) continue;
        auto v = detail::metric_value(row, key.field, cfg.metrics.voxel_size_m);
        if (!v) continue;
        x.push_back(*v);
        m.push_back(fresh ? row.gt_fresh_g : row.gt_dry_g);
      }
      if (x.empty()) continue;
      double x_lo = *std::min_element(x.begin(), x.end());
      double x_hi = *std::max_element(x.begin(), x.end());

      double slope = std::stod((*r)[fresh ? 2 : 6]);
      double intercept = std::stod((*r)[fresh ? 3 : 7]);
      double r2 = std::stod((*r)[fresh ? 4 : 8]);
      double mae = std::stod((*r)[fresh ? 5 : 9]);
      double ref_r2 = std::stod((*r)[fresh ? 10 : 12]);
      double ref_mae = std::stod((*r)[fresh ? 11 : 13]);

      std::string gt = fresh ? "fresh" : "dry";
      SvgScatter plot(std::string(key.name) + " vs " + gt + " mass",
                      key.name, gt + " mass (g)");
      plot.add_points(x, m);
      plot.add_curve("linear fit", "#d62728",
                     [&](double v) { return slope * v + intercept; }, x_lo,
                     x_hi);
      char note[160];
      std::snprintf(note, sizeof note, "linear: R2=%.3f MAE=%.3f g", r2, mae);
      plot.add_annotation(note);
      if (o) {
        OcclusionFit fit;
        fit.rho = std::stod((*o)[fresh ? 2 : 5]);
        fit.k = std::stod((*o)[fresh ? 3 : 6]);
        plot.add_curve("occlusion-compensated fit", "#2ca02c",
                       [&](double v) { return predict_occ(fit, v); }, x_lo,
                       x_hi);
        double ref_k = std::stod((*o)[fresh ? 8 : 9]);
        std::snprintf(note, sizeof note,
                      "occlusion: rho=%.4g k=%.3f (study: k=%.3f)", fit.rho,
                      fit.k, ref_k);
        plot.add_annotation(note);
      }
      std::snprintf(note, sizeof note, "study: R2=%.3f MAE=%.3f g", ref_r2,
                    ref_mae);
      plot.add_annotation(note);

      std::string rel =
          "report/" + std::string(key.name) + "_" + gt + ".svg";
      plot.write(cfg.output_dir + "/" + rel);
      written.push_back(rel);
    }
  }

  for (const auto& rel : written) timer.output(rel);
  timer.finish();
}

}  // namespace phenosim
