// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Automatic annotation: RANSAC road plane, box labels, road polygon, and
// rain by elimination. Sparse clouds (radar) inherit labels from their
// nearest LiDAR point.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "derain/core.hpp"
#include "derain/geometry.hpp"
#include "derain/scene.hpp"
#include "derain/spatial_index.hpp"

namespace derain {

struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  /// Support of the winning hypothesis before the least-squares refit.
  std::size_t inlier_count = 0;

  Plane plane() const { return Plane{normal, offset}; }
};

struct RansacConfig {
  int iterations = 200;
  double inlier_threshold = 0.05;  // m
  std::uint64_t seed = 0;
};

namespace detail {

/// Least-squares plane through `pts`: centroid plus the eigenvector of the
/// scatter matrix with the smallest eigenvalue.
inline Plane fit_plane_least_squares(const std::vector<Vec3>& pts) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const Vec3& p : pts) {
    const Vec3 d = p - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  Vec3 n = solver.eigenvectors().col(0).normalized();
  return Plane{n, -n.dot(centroid)};
}

inline void canonicalize(Plane& p) {
  if (p.normal.z() < 0.0) {
    p.normal = -p.normal;
    p.offset = -p.offset;
  }
}

}  // namespace detail

/// Best-of-N three-point RANSAC followed by a least-squares refit on the
/// winning inliers. Iteration i draws its sample from a generator seeded by
/// (seed, i), so a longer run only ever adds hypotheses. Degenerate samples
/// (repeated or collinear points) use up their iteration.
inline PlaneModel ransac_plane(const PointCloud& cloud, const RansacConfig& cfg) {
  validate_cloud(cloud);
  if (cloud.size() < 3) throw Error(ErrorCode::TooFewPoints, "RANSAC needs >= 3 points");
  if (cfg.iterations < 1 || !(cfg.inlier_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "need iterations >= 1 and inlier_threshold > 0");
  }
  const auto& pts = cloud.coords;

  std::size_t best_support = 0;
  Plane best;
  bool found = false;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(it)));
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    const std::array<std::size_t, 3> s{pick(rng), pick(rng), pick(rng)};
    if (s[0] == s[1] || s[1] == s[2] || s[0] == s[2]) continue;
    const Vec3 e1 = pts[s[1]] - pts[s[0]];
    const Vec3 e2 = pts[s[2]] - pts[s[0]];
    const Vec3 cross = e1.cross(e2);
    const double scale = e1.norm() * e2.norm();
    if (!(cross.norm() > 1e-12 * scale)) continue;

    Plane h{cross.normalized(), 0.0};
    h.offset = -h.normal.dot(pts[s[0]]);
    std::size_t support = 0;
    for (const Vec3& p : pts) support += std::abs(h.signed_distance(p)) <= cfg.inlier_threshold;
    if (!found || support > best_support) {
      best_support = support;
      best = h;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::NoValidHypothesis, "every RANSAC sample was degenerate");

  std::vector<Vec3> inliers;
  inliers.reserve(best_support);
  for (const Vec3& p : pts) {
    if (std::abs(best.signed_distance(p)) <= cfg.inlier_threshold) inliers.push_back(p);
  }
  Plane refit = inliers.size() >= 3 ? detail::fit_plane_least_squares(inliers) : best;
  detail::canonicalize(refit);
  return PlaneModel{refit.normal, refit.offset, best_support};
}

struct LabeledBox {
  OrientedBox box;
  SemanticClass class_id = SemanticClass::Car;

  friend bool operator==(const LabeledBox& a, const LabeledBox& b) {
    return a.box.center == b.box.center && a.box.half_extents == b.box.half_extents &&
           a.box.yaw == b.box.yaw && a.class_id == b.class_id;
  }
};

/// Hand-made annotation geometry for one sequence, in the sensor frame.
struct AnnotationScene {
  std::vector<LabeledBox> sprinkler_boxes;
  std::vector<LabeledBox> object_boxes;
  std::vector<Vec2> road_polygon;

  friend bool operator==(const AnnotationScene&, const AnnotationScene&) = default;
};

inline void validate_annotation_scene(const AnnotationScene& scene) {
  for (const auto* list : {&scene.sprinkler_boxes, &scene.object_boxes}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      const LabeledBox& b = (*list)[i];
      if (!is_valid_class(static_cast<std::uint32_t>(b.class_id)) ||
          !(b.box.half_extents.array() > 0.0).all() || !b.box.center.allFinite()) {
        throw Error(ErrorCode::InvalidSpec, "annotation box invalid", i);
      }
    }
  }
  if (!is_simple_polygon(scene.road_polygon)) {
    throw Error(ErrorCode::DegeneratePolygon, "road polygon must be simple with >= 3 vertices");
  }
}

/// Annotation geometry matching a synthetic scene: boxes moved into the
/// sensor frame and grown by `margin` on every side to absorb range noise.
inline AnnotationScene annotation_scene_from(const SceneSpec& spec, double sensor_height,
                                             double margin) {
  validate_scene(spec);
  AnnotationScene out;
  for (const SceneBox& b : spec.boxes) {
    // Grow sideways and upward only; the bottom face stays put so a box
    // resting on the ground does not swallow road returns.
    LabeledBox lb{b.box.inflated(margin), b.class_id};
    lb.box.half_extents.z() = b.box.half_extents.z() + 0.5 * margin;
    lb.box.center.z() = b.box.center.z() + 0.5 * margin - sensor_height;
    (b.class_id == SemanticClass::Sprinkler ? out.sprinkler_boxes : out.object_boxes).push_back(lb);
  }
  out.road_polygon = spec.road_polygon;
  return out;
}

struct AnnotateConfig {
  RansacConfig ransac;
  double plane_tolerance = 0.1;  // m; |distance| within this is "on" the road
};

struct Annotation {
  LabelSet labels;
  PlaneModel plane;
};

/// Label precedence: below-plane points are background; then sprinkler
/// boxes, object boxes, rain (above the plane inside the polygon), road (on
/// the plane inside the polygon), background.
inline Annotation auto_annotate_with_plane(const PointCloud& cloud, const AnnotationScene& scene,
                                           const AnnotateConfig& cfg) {
  validate_annotation_scene(scene);
  if (!(cfg.plane_tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "plane_tolerance must be >= 0");
  }
  Annotation out;
  out.plane = ransac_plane(cloud, cfg.ransac);
  const Plane plane = out.plane.plane();
  out.labels.assign(cloud.size(), SemanticClass::Background);

  parallel_for(cloud.size(), [&](std::size_t i) {
    const Vec3& p = cloud.coords[i];
    const double h = plane.signed_distance(p);
    if (h < -cfg.plane_tolerance) return;
    for (const auto* list : {&scene.sprinkler_boxes, &scene.object_boxes}) {
      for (const LabeledBox& b : *list) {
        if (b.box.contains(p)) {
          out.labels[i] = b.class_id;
          return;
        }
      }
    }
    if (!point_in_polygon(p.head<2>(), scene.road_polygon)) return;
    out.labels[i] = h > cfg.plane_tolerance ? SemanticClass::Rain : SemanticClass::Road;
  });
  return out;
}

inline LabelSet auto_annotate(const PointCloud& cloud, const AnnotationScene& scene,
                              const AnnotateConfig& cfg) {
  return auto_annotate_with_plane(cloud, scene, cfg).labels;
}

/// Each destination point takes the label of its nearest source point
/// (lowest source index on exact ties).
inline LabelSet transfer_labels(const PointCloud& src, const LabelSet& src_labels,
                                const PointCloud& dst) {
  validate_cloud(src);
  validate_cloud(dst);
  if (src.empty()) throw Error(ErrorCode::EmptySource, "no source points to transfer from");
  validate_labels(src_labels, src.size());
  const KdTree tree(src.coords);
  LabelSet out(dst.size());
  parallel_for(dst.size(), [&](std::size_t i) { out[i] = src_labels[tree.nearest(dst.coords[i])]; });
  return out;
}

}  // namespace derain
