// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "derain/core.hpp"

namespace derain {

/// Box rotated by `yaw` about the vertical axis through its center.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  double yaw = 0.0;

  Vec3 to_local(const Vec3& p) const {
    const Vec3 d = p - center;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
  }

  Vec3 direction_to_local(const Vec3& v) const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * v.x() + s * v.y(), -s * v.x() + c * v.y(), v.z()};
  }

  bool contains(const Vec3& p) const {
    const Vec3 l = to_local(p);
    return std::abs(l.x()) <= half_extents.x() && std::abs(l.y()) <= half_extents.y() &&
           std::abs(l.z()) <= half_extents.z();
  }

  OrientedBox inflated(double margin) const {
    OrientedBox b = *this;
    b.half_extents.array() += margin;
    return b;
  }

  /// Smallest t > 0 with origin + t*dir on the box surface (slab method).
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const {
    const Vec3 o = to_local(origin);
    const Vec3 d = direction_to_local(dir);
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      const double h = half_extents[a];
      if (d[a] == 0.0) {
        if (o[a] < -h || o[a] > h) return std::nullopt;
        continue;
      }
      double t0 = (-h - o[a]) / d[a];
      double t1 = (h - o[a]) / d[a];
      if (t0 > t1) std::swap(t0, t1);
      t_near = std::max(t_near, t0);
      t_far = std::min(t_far, t1);
      if (t_near > t_far) return std::nullopt;
    }
    if (t_near > 0.0) return t_near;
    if (t_far > 0.0) return t_far;
    return std::nullopt;
  }
};

/// Plane {p : normal . p + offset = 0}.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }

  std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const {
    const double denom = normal.dot(dir);
    if (denom == 0.0) return std::nullopt;
    const double t = -signed_distance(origin) / denom;
    if (t > 0.0) return t;
    return std::nullopt;
  }
};

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Vec2 ap = p - a;
  const double scale = std::max({1.0, ab.squaredNorm(), ap.squaredNorm()});
  if (std::abs(cross2(ab, ap)) > 1e-12 * scale) return false;
  return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) &&
         p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y());
}

inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross2(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(q1, p1, p2)) || (o2 == 0 && on_segment(q2, p1, p2)) ||
         (o3 == 0 && on_segment(p1, q1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
}

}  // namespace detail

inline double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    a += detail::cross2(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * a;
}

/// At least three vertices, non-zero area, and no two non-adjacent edges touch.
inline bool is_simple_polygon(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3 || polygon_area(poly) == 0.0) return false;
  for (const Vec2& v : poly) {
    if (!v.allFinite()) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

/// Even-odd rule; points on an edge or vertex count as inside.
inline bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
  if (poly.size() < 3 || polygon_area(poly) == 0.0) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon needs >= 3 vertices and non-zero area");
  }
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if (detail::on_segment(p, a, b)) return true;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace derain
