#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "phenosim/core/mesh.hpp"
#include "phenosim/core/rng.hpp"

namespace phenosim {

struct GrowthParams {
  double asymptotic_mass_g = 180.0;  // K
  double rate_per_day = 0.25;        // r
  double inflection_day = 20.0;      // t0
  double nutrient_multiplier = 1.0;  // scales r

  void validate() const {
    if (asymptotic_mass_g <= 0 || rate_per_day <= 0 || nutrient_multiplier <= 0)
      throw std::invalid_argument("growth parameters must be positive");
  }
};

// Three-parameter logistic growth curve, rate scaled by the nutrient factor.
inline double logistic_mass(double age_days, const GrowthParams& g) {
  if (age_days < 0) throw std::invalid_argument("age must be >= 0");
  g.validate();
  double r = g.rate_per_day * g.nutrient_multiplier;
  return g.asymptotic_mass_g /
         (1.0 + std::exp(-r * (age_days - g.inflection_day)));
}

struct PlantSpec {
  std::string plant_id;
  int experiment_id = 1;
  double age_days = 0.0;
  std::uint64_t seed = 0;
  GrowthParams growth;
  double leaf_area_density_g_per_m2 = 1200.0;  // fresh mass per one-sided area
  double dry_fraction = 0.05;
  double mass_variation = 0.10;  // seeded per-plant spread

  void validate() const {
    if (age_days < 0) throw std::invalid_argument("age must be >= 0");
    if (dry_fraction <= 0 || dry_fraction >= 1)
      throw std::invalid_argument("dry_fraction must be in (0,1)");
    growth.validate();
  }
};

// Plant frame: base at the origin, growth axis +z.
struct PlantTruth {
  TriangleMesh mesh;
  double fresh_mass_g = 0.0;
  double dry_mass_g = 0.0;
  double canopy_radius_m = 0.0;
};

namespace detail {

struct LeafShape {
  double azimuth;
  double length;
  double width;
  double base_elevation;  // midrib elevation at the base, rad from horizontal
  double curl;            // elevation gained along the midrib, rad
};

// One-sided petal sheet: ruled surface over a circular-arc midrib with a
// sine width profile and upward-cupped edges.
inline TriangleMesh tessellate_leaf(const LeafShape& leaf, int nt = 8,
                                    int ns = 4) {
  TriangleMesh m;
  Vec3 e_rad(std::cos(leaf.azimuth), std::sin(leaf.azimuth), 0.0);
  Vec3 e_lat(-std::sin(leaf.azimuth), std::cos(leaf.azimuth), 0.0);
  const double cup = 0.25;
  for (int it = 0; it <= nt; ++it) {
    double t = double(it) / nt;
    double elev0 = leaf.base_elevation;
    double elev1 = elev0 + leaf.curl * t;
    double rad = leaf.length / leaf.curl * (std::sin(elev1) - std::sin(elev0));
    double z = leaf.length / leaf.curl * (std::cos(elev0) - std::cos(elev1));
    double profile = std::sin(kPi * std::pow(t, 0.8));
    for (int is = 0; is <= ns; ++is) {
      double s = 2.0 * double(is) / ns - 1.0;
      double lat = 0.5 * leaf.width * profile * s;
      double lift = cup * leaf.width * (profile * s) * (profile * s);
      m.vertices.push_back(rad * e_rad + lat * e_lat + Vec3(0, 0, z + lift));
    }
  }
  for (int it = 0; it < nt; ++it)
    for (int is = 0; is < ns; ++is) {
      std::uint32_t a = std::uint32_t(it * (ns + 1) + is);
      std::uint32_t b = a + 1;
      std::uint32_t c = a + std::uint32_t(ns + 1);
      std::uint32_t d = c + 1;
      m.triangles.push_back({a, c, b});
      m.triangles.push_back({b, c, d});
    }
  return m;
}

}  // namespace detail

// Procedural rosette with a known mass-area tie: fresh mass is exactly
// leaf_area_density times the one-sided leaf area of the generated mesh.
// Leaves are emitted as two sheets 0.8mm apart, so the total mesh area is
// twice the one-sided area. Deterministic per spec.seed.
inline PlantTruth generate_plant(const PlantSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  double variation = 1.0 + spec.mass_variation * (2.0 * rng.uniform() - 1.0);
  double target_mass = logistic_mass(spec.age_days, spec.growth) * variation;
  double target_area = target_mass / spec.leaf_area_density_g_per_m2;

  const double max_radius = 0.0849;  // keeps canopy inside the 17cm envelope
  // radius is capped below, but length is not: past the footprint cap the
  // plant keeps growing upward, and only the side views can see that
  const double length_cap = 0.140;
  double ref_mass = spec.growth.asymptotic_mass_g;
  double length = std::min(
      length_cap, 0.035 + 0.085 * std::cbrt(target_mass / ref_mass));
  double width = 0.62 * length;

  // leaf count from a shape-factor area estimate (the 0.58 factor is the mean
  // of the inner-to-outer length taper squared); width absorbs the residual
  double est_leaf_area = 0.40 * length * width * 0.58;
  int n_leaves = std::max(4, std::min(200, int(std::lround(
                                               target_area / est_leaf_area))));

  const double golden = 2.39996322972865332;
  // per-plant canopy openness: how steeply the inner leaves stand up. A
  // tighter head hides more of its interior from directly above, so this is
  // the main nuisance factor for over-canopy imaging.
  double upright = rng.uniform(1.35, 2.25);
  std::vector<detail::LeafShape> shapes;
  shapes.reserve(n_leaves);
  for (int i = 0; i < n_leaves; ++i) {
    double q = n_leaves > 1 ? double(i) / (n_leaves - 1) : 0.0;  // 0 = outer
    detail::LeafShape leaf;
    leaf.azimuth = i * golden + rng.uniform(-0.15, 0.15);
    // inner leaves are young and small; most area sits on the exposed
    // outer rosette
    leaf.length = length * (1.0 - 0.5 * q) * rng.uniform(0.9, 1.1);
    leaf.width = width;
    // outer leaves droop into a skirt, inner leaves stand upright
    leaf.base_elevation = -0.6 + upright * q + rng.uniform(-0.1, 0.1);
    leaf.curl = rng.uniform(0.95, 1.45);
    shapes.push_back(leaf);
  }

  // two width-scaling passes to land on the target one-sided area
  double one_sided = 0.0;
  std::vector<TriangleMesh> sheets;
  for (int pass = 0; pass < 2; ++pass) {
    sheets.clear();
    one_sided = 0.0;
    for (const auto& leaf : shapes) {
      TriangleMesh sheet = detail::tessellate_leaf(leaf);
      one_sided += mesh_surface_area(sheet);
      sheets.push_back(std::move(sheet));
    }
    if (pass == 1) break;
    double factor = std::clamp(target_area / one_sided, 0.4, 2.5);
    for (auto& leaf : shapes) leaf.width *= factor;
  }

  PlantTruth out;
  const double collar_z = 0.02;  // stem collar height; keeps the skirt above
                                 // the substrate crop plane
  for (const auto& sheet : sheets) {
    TriangleMesh lower = sheet, upper = sheet;
    for (auto& v : lower.vertices) v.z() += collar_z - 0.0004;
    for (auto& v : upper.vertices) v.z() += collar_z + 0.0004;
    append_mesh(out.mesh, lower);
    append_mesh(out.mesh, upper);
  }
  remove_degenerate_triangles(out.mesh);

  double canopy = 0.0;
  for (const auto& v : out.mesh.vertices)
    canopy = std::max(canopy, std::hypot(v.x(), v.y()));
  if (canopy > max_radius) {
    double squeeze = max_radius / canopy;
    for (auto& v : out.mesh.vertices) {
      v.x() *= squeeze;
      v.y() *= squeeze;
    }
    canopy = max_radius;
    // area changed; re-derive the one-sided area from the mesh
    one_sided = 0.5 * mesh_surface_area(out.mesh);
  }
  out.canopy_radius_m = canopy;
  out.fresh_mass_g = spec.leaf_area_density_g_per_m2 * one_sided;
  double dry_variation =
      1.0 + spec.mass_variation * (2.0 * rng.uniform() - 1.0);
  out.dry_mass_g = spec.dry_fraction * out.fresh_mass_g * dry_variation;
  return out;
}

struct ExperimentPlan {
  int experiment_id;
  std::map<int, int> plants_per_age;  // age_days -> count
  GrowthParams growth;
};

struct CohortConfig {
  std::uint64_t master_seed = 1;
  std::vector<ExperimentPlan> experiments;
  double leaf_area_density_g_per_m2 = 1200.0;
  double dry_fraction = 0.05;
  double mass_variation = 0.10;
};

// Harvest-age schedule of the two growth cycles.
inline CohortConfig default_cohort_config(std::uint64_t master_seed = 1) {
  CohortConfig cfg;
  cfg.master_seed = master_seed;
  ExperimentPlan e1;
  e1.experiment_id = 1;
  e1.plants_per_age = {{8, 6}, {15, 11}, {21, 11}, {28, 3}};
  e1.growth.nutrient_multiplier = 1.0;
  ExperimentPlan e2;
  e2.experiment_id = 2;
  e2.plants_per_age = {{21, 3}, {22, 3}, {23, 2}, {24, 3},
                       {25, 3}, {26, 3}, {27, 3}, {28, 3}};
  e2.growth.nutrient_multiplier = 1.15;
  cfg.experiments = {e1, e2};
  return cfg;
}

inline std::vector<PlantSpec> build_cohort(const CohortConfig& cfg) {
  if (cfg.experiments.empty())
    throw std::invalid_argument("cohort config names no experiments");
  std::vector<PlantSpec> specs;
  for (const auto& exp : cfg.experiments) {
    if (exp.experiment_id != 1 && exp.experiment_id != 2)
      throw std::invalid_argument("unknown experiment id");
    for (const auto& [age, count] : exp.plants_per_age) {
      for (int k = 0; k < count; ++k) {
        PlantSpec spec;
        char id[32];
        std::snprintf(id, sizeof id, "e%d_a%02d_%02d", exp.experiment_id, age,
                      k);
        spec.plant_id = id;
        spec.experiment_id = exp.experiment_id;
        spec.age_days = age;
        spec.growth = exp.growth;
        spec.leaf_area_density_g_per_m2 = cfg.leaf_area_density_g_per_m2;
        spec.dry_fraction = cfg.dry_fraction;
        spec.mass_variation = cfg.mass_variation;
        spec.seed = derive_seed(cfg.master_seed, spec.plant_id);
        specs.push_back(std::move(spec));
      }
    }
  }
  return specs;
}

}  // namespace phenosim
