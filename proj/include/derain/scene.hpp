// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parametric clean-weather scenes and a ray caster that turns them into
// labeled scans on a calibrated beam grid. Scenes live in a world frame with
// the sensor at (0, 0, sensor_height); emitted points are in the sensor frame.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "derain/core.hpp"
#include "derain/geometry.hpp"
#include "derain/pgm.hpp"

namespace derain {

struct SceneBox {
  OrientedBox box;
  SemanticClass class_id = SemanticClass::Car;
  double reflectance = 0.5;

  friend bool operator==(const SceneBox& a, const SceneBox& b) {
    return a.box.center == b.box.center && a.box.half_extents == b.box.half_extents &&
           a.box.yaw == b.box.yaw && a.class_id == b.class_id && a.reflectance == b.reflectance;
  }
};

struct SceneSpec {
  Plane ground_plane;
  std::vector<SceneBox> boxes;
  std::vector<Vec2> road_polygon;
  double ground_reflectance = 0.3;

  friend bool operator==(const SceneSpec& a, const SceneSpec& b) {
    return a.ground_plane.normal == b.ground_plane.normal &&
           a.ground_plane.offset == b.ground_plane.offset && a.boxes == b.boxes &&
           a.road_polygon == b.road_polygon && a.ground_reflectance == b.ground_reflectance;
  }
};

inline bool is_object_class(SemanticClass c) {
  const auto id = static_cast<std::uint16_t>(c);
  return id >= static_cast<std::uint16_t>(SemanticClass::Car) && id < kNumClasses;
}

inline void validate_scene(const SceneSpec& spec) {
  const Vec3& n = spec.ground_plane.normal;
  if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-9 || !(n.z() > 0.0) ||
      !std::isfinite(spec.ground_plane.offset)) {
    throw Error(ErrorCode::InvalidSpec, "ground normal must be a unit vector with z > 0");
  }
  for (std::size_t i = 0; i < spec.boxes.size(); ++i) {
    const SceneBox& b = spec.boxes[i];
    if (!b.box.center.allFinite() || !std::isfinite(b.box.yaw) ||
        !(b.box.half_extents.array() > 0.0).all() || !b.box.half_extents.allFinite()) {
      throw Error(ErrorCode::InvalidSpec, "box geometry invalid", i);
    }
    if (!is_object_class(b.class_id)) {
      throw Error(ErrorCode::InvalidSpec, "box class must be in 3..7", i);
    }
    if (!(b.reflectance >= 0.0 && b.reflectance <= 1.0)) {
      throw Error(ErrorCode::InvalidSpec, "box reflectance outside [0, 1]", i);
    }
  }
  if (!is_simple_polygon(spec.road_polygon)) {
    throw Error(ErrorCode::InvalidSpec, "road polygon must be simple with >= 3 vertices");
  }
  if (!(spec.ground_reflectance >= 0.0 && spec.ground_reflectance <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "ground reflectance outside [0, 1]");
  }
}

namespace detail {

inline SceneBox make_box(Vec3 center, Vec3 half, double yaw, SemanticClass cls,
                         double reflectance) {
  SceneBox b;
  b.box.center = center;
  b.box.half_extents = half;
  b.box.yaw = yaw;
  b.class_id = cls;
  b.reflectance = reflectance;
  return b;
}

}  // namespace detail

/// Fixed fixtures:
///  - "minimal": flat ground z = 0, no objects, 40 m square road centered on
///    the sensor.
///  - "corridor": a 7 m wide road strip lined with parked cars.
///  - "rehearse-like": a test track with a car, a pedestrian, a bike, two
///    rain sprinklers at the road edges and two target boards.
inline SceneSpec builtin_scene(std::string_view name) {
  using detail::make_box;
  SceneSpec s;
  s.ground_plane = Plane{Vec3::UnitZ(), 0.0};
  s.ground_reflectance = 0.3;
  if (name == "minimal") {
    s.road_polygon = {{-20.0, -20.0}, {20.0, -20.0}, {20.0, 20.0}, {-20.0, 20.0}};
    return s;
  }
  if (name == "corridor") {
    s.road_polygon = {{1.0, -3.5}, {40.0, -3.5}, {40.0, 3.5}, {1.0, 3.5}};
    const Vec3 car{2.2, 0.9, 0.75};
    for (double x : {8.0, 16.0, 24.0}) {
      s.boxes.push_back(make_box({x, -5.0, 0.75}, car, 0.0, SemanticClass::Car, 0.6));
    }
    for (double x : {12.0, 20.0}) {
      s.boxes.push_back(make_box({x, 5.0, 0.75}, car, 0.0, SemanticClass::Car, 0.6));
    }
    return s;
  }
  if (name == "rehearse-like") {
    s.road_polygon = {{1.0, -4.5}, {40.0, -4.5}, {40.0, 4.5}, {1.0, 4.5}};
    s.boxes = {
        make_box({12.0, -2.2, 0.75}, {2.2, 0.9, 0.75}, 0.05, SemanticClass::Car, 0.7),
        make_box({9.0, 1.8, 0.9}, {0.25, 0.3, 0.9}, 0.0, SemanticClass::Pedestrian, 0.5),
        make_box({14.5, 2.5, 0.6}, {0.9, 0.3, 0.6}, 0.3, SemanticClass::Bike, 0.4),
        make_box({7.0, -4.0, 1.5}, {0.15, 0.15, 1.5}, 0.0, SemanticClass::Sprinkler, 0.35),
        make_box({7.0, 4.0, 1.5}, {0.15, 0.15, 1.5}, 0.0, SemanticClass::Sprinkler, 0.35),
        make_box({17.0, 0.5, 0.5}, {0.05, 0.5, 0.5}, 0.0, SemanticClass::Targets, 0.9),
        make_box({18.0, -1.5, 0.5}, {0.05, 0.5, 0.5}, 0.0, SemanticClass::Targets, 0.9),
    };
    return s;
  }
  throw Error(ErrorCode::UnknownScene, "no builtin scene named '" + std::string(name) + "'");
}

struct ScanWithLabels {
  PolarGridMap pgm;
  LabelSet labels;  // one per grid cell, elevation-major
};

/// Casts every calibrated beam into the scene. The nearest surface hit with
/// range in [r_min, r_max] becomes the return; its range is then perturbed
/// along the ray by N(0, noise_sigma) drawn from a per-beam generator seeded
/// by (seed, cell index) and clamped back into [r_min, r_max].
inline ScanWithLabels raycast_scene(const SceneSpec& spec, const SensorCalibration& calib,
                                    double noise_sigma, std::uint64_t seed) {
  try {
    validate_scene(spec);
    validate_calibration(calib);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::InvalidSpec, "noise_sigma must be >= 0");
  }

  ScanWithLabels out;
  out.pgm = empty_grid(calib);
  out.labels.assign(out.pgm.cells(), SemanticClass::Background);
  const Vec3 origin{0.0, 0.0, calib.sensor_height};

  parallel_for(out.pgm.cells(), [&](std::size_t idx) {
    const std::size_t row = idx / out.pgm.cols;
    const std::size_t col = idx % out.pgm.cols;
    const Vec3 dir = to_euclidean(1.0, calib.azimuths[col], calib.elevations[row]);

    auto in_window = [&](double t) { return t >= calib.r_min && t <= calib.r_max; };
    std::optional<double> best;
    const SceneBox* best_box = nullptr;
    if (auto t = spec.ground_plane.intersect(origin, dir); t && in_window(*t)) best = t;
    for (const SceneBox& b : spec.boxes) {
      auto t = b.box.intersect(origin, dir);
      if (t && in_window(*t) && (!best || *t < *best)) {
        best = t;
        best_box = &b;
      }
    }
    if (!best) return;

    double t = *best;
    if (noise_sigma > 0.0) {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
      std::normal_distribution<double> noise(0.0, noise_sigma);
      t = std::clamp(t + noise(rng), calib.r_min, calib.r_max);
    }

    out.pgm.unreturned[idx] = false;
    out.pgm.range[idx] = t;
    out.pgm.coords[idx] = t * dir;
    if (best_box) {
      out.pgm.intensity[idx] = best_box->reflectance;
      out.labels[idx] = best_box->class_id;
    } else {
      out.pgm.intensity[idx] = spec.ground_reflectance;
      const Vec3 hit = origin + *best * dir;
      out.labels[idx] = point_in_polygon(hit.head<2>(), spec.road_polygon)
                            ? SemanticClass::Road
                            : SemanticClass::Background;
    }
  });
  return out;
}

}  // namespace derain
