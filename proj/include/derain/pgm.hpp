// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Polar grid maps: list-form scans binned onto the calibrated beam grid, with
// beams that produced no detection materialized at maximum range and zero
// intensity so that every beam of the sensor is represented explicitly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "derain/core.hpp"

namespace derain {

struct PolarCoords {
  std::vector<double> ranges;
  std::vector<double> azimuths;
  std::vector<double> elevations;
};

/// Azimuth atan2(y, x) folded into [-pi, pi); elevation asin(z / r).
inline PolarCoords to_polar(std::span<const Vec3> coords) {
  PolarCoords out;
  out.ranges.resize(coords.size());
  out.azimuths.resize(coords.size());
  out.elevations.resize(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Vec3& p = coords[i];
    const double r = p.norm();
    if (!(r > 0.0)) throw Error(ErrorCode::OriginPoint, "zero-norm point", i);
    double az = std::atan2(p.y(), p.x());
    if (az >= std::numbers::pi) az -= 2.0 * std::numbers::pi;
    out.ranges[i] = r;
    out.azimuths[i] = az;
    out.elevations[i] = std::asin(std::clamp(p.z() / r, -1.0, 1.0));
  }
  return out;
}

inline Vec3 to_euclidean(double range, double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {range * ce * std::cos(azimuth), range * ce * std::sin(azimuth),
          range * std::sin(elevation)};
}

inline std::vector<Vec3> to_euclidean(std::span<const double> ranges,
                                      std::span<const double> azimuths,
                                      std::span<const double> elevations) {
  if (ranges.size() != azimuths.size() || ranges.size() != elevations.size()) {
    throw Error(ErrorCode::LengthMismatch, "polar arrays differ in length");
  }
  std::vector<Vec3> out(ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    out[i] = to_euclidean(ranges[i], azimuths[i], elevations[i]);
  }
  return out;
}

/// Index of the table entry closest to `angle`; exact ties go to the lower
/// index. Angles outside the table clamp to the nearest endpoint.
inline std::size_t nearest_angle_index(double angle, std::span<const double> table) {
  if (table.empty()) throw Error(ErrorCode::EmptyTable, "angle table is empty");
  const auto it = std::lower_bound(table.begin(), table.end(), angle);
  if (it == table.begin()) return 0;
  const auto hi = static_cast<std::size_t>(it - table.begin());
  if (it == table.end()) return table.size() - 1;
  const std::size_t lo = hi - 1;
  return std::abs(table[lo] - angle) <= std::abs(table[hi] - angle) ? lo : hi;
}

/// Dense V x H scan. Cells are stored elevation-major (row = elevation index,
/// column = azimuth index).
struct PolarGridMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Vec3> coords;
  std::vector<double> intensity;
  std::vector<double> range;
  Mask unreturned;

  std::size_t cells() const noexcept { return rows * cols; }
  std::size_t cell(std::size_t row, std::size_t col) const noexcept { return row * cols + col; }
  std::size_t returned_count() const noexcept {
    return static_cast<std::size_t>(std::count(unreturned.begin(), unreturned.end(), false));
  }
};

/// Marks cell `idx` as unreturned: range r_max, intensity 0, coordinates on
/// the calibrated beam.
inline void set_unreturned(PolarGridMap& pgm, std::size_t idx, const SensorCalibration& calib) {
  const std::size_t row = idx / pgm.cols;
  const std::size_t col = idx % pgm.cols;
  pgm.unreturned[idx] = true;
  pgm.intensity[idx] = 0.0;
  pgm.range[idx] = calib.r_max;
  pgm.coords[idx] = to_euclidean(calib.r_max, calib.azimuths[col], calib.elevations[row]);
}

inline PolarGridMap empty_grid(const SensorCalibration& calib) {
  PolarGridMap pgm;
  pgm.rows = calib.rows();
  pgm.cols = calib.cols();
  const std::size_t n = pgm.cells();
  pgm.coords.resize(n);
  pgm.intensity.resize(n);
  pgm.range.resize(n);
  pgm.unreturned.assign(n, true);
  for (std::size_t idx = 0; idx < n; ++idx) set_unreturned(pgm, idx, calib);
  return pgm;
}

/// Bins every point to its nearest calibrated (elevation, azimuth) cell. When
/// several points share a cell the nearest one wins (first return), with the
/// lower input index breaking exact range ties. Points whose range falls
/// outside [r_min, r_max] cannot be a sensor return and are dropped.
inline PolarGridMap project_to_pgm(const PointCloud& cloud, const SensorCalibration& calib) {
  validate_cloud(cloud);
  validate_calibration(calib);
  const PolarCoords polar = to_polar(cloud.coords);

  PolarGridMap pgm = empty_grid(calib);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double r = polar.ranges[i];
    if (r < calib.r_min || r > calib.r_max) continue;
    const std::size_t row = nearest_angle_index(polar.elevations[i], calib.elevations);
    const std::size_t col = nearest_angle_index(polar.azimuths[i], calib.azimuths);
    const std::size_t idx = pgm.cell(row, col);
    if (!pgm.unreturned[idx] && pgm.range[idx] <= r) continue;
    pgm.unreturned[idx] = false;
    pgm.coords[idx] = cloud.coords[i];
    pgm.intensity[idx] = cloud.intensity[i];
    pgm.range[idx] = r;
  }
  return pgm;
}

struct FlatScan {
  PointCloud cloud;  // exactly V*H points, elevation-major
  Mask unreturned;
};

inline FlatScan flatten(const PolarGridMap& pgm) {
  FlatScan out;
  out.cloud.coords = pgm.coords;
  out.cloud.intensity = pgm.intensity;
  out.unreturned = pgm.unreturned;
  return out;
}

/// Inverse of flatten for a grid laid out on `calib`. Ranges are recomputed
/// from the coordinates.
inline PolarGridMap unflatten(const FlatScan& flat, const SensorCalibration& calib) {
  validate_calibration(calib);
  if (flat.cloud.size() != calib.cells() || flat.unreturned.size() != calib.cells()) {
    throw Error(ErrorCode::LengthMismatch, "flat scan does not match calibration grid");
  }
  PolarGridMap pgm;
  pgm.rows = calib.rows();
  pgm.cols = calib.cols();
  pgm.coords = flat.cloud.coords;
  pgm.intensity = flat.cloud.intensity;
  pgm.unreturned = flat.unreturned;
  pgm.range.resize(pgm.cells());
  for (std::size_t idx = 0; idx < pgm.cells(); ++idx) {
    pgm.range[idx] = pgm.unreturned[idx] ? calib.r_max : pgm.coords[idx].norm();
  }
  return pgm;
}

/// Returned cells only, in grid order, with their labels. This is the
/// list-form scan a sensor would have emitted.
inline LabeledCloud returned_points(const PolarGridMap& pgm, const LabelSet& labels) {
  if (labels.size() != pgm.cells()) {
    throw Error(ErrorCode::LabelLengthMismatch, "labels must cover every grid cell");
  }
  LabeledCloud out;
  out.cloud.reserve(pgm.returned_count());
  out.labels.reserve(pgm.returned_count());
  for (std::size_t idx = 0; idx < pgm.cells(); ++idx) {
    if (pgm.unreturned[idx]) continue;
    out.cloud.push_back(pgm.coords[idx], pgm.intensity[idx]);
    out.labels.push_back(labels[idx]);
  }
  return out;
}

}  // namespace derain
