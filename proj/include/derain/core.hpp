// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Domain types shared by every module: point clouds, semantic labels,
// sensor calibration and the binary rain confusion tally.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "derain/error.hpp"

namespace derain {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// One flag (0 or 1) per point. For filter outputs 1 means keep. Bytes rather
/// than std::vector<bool> so parallel writers never share a word.
using Mask = std::vector<std::uint8_t>;

struct PointCloud {
  std::vector<Vec3> coords;      // meters, sensor frame
  std::vector<double> intensity;  // normalized reflectance in [0, 1]

  std::size_t size() const noexcept { return coords.size(); }
  bool empty() const noexcept { return coords.empty(); }

  void push_back(const Vec3& p, double i) {
    coords.push_back(p);
    intensity.push_back(i);
  }
  void reserve(std::size_t n) {
    coords.reserve(n);
    intensity.reserve(n);
  }
};

enum class SemanticClass : std::uint16_t {
  Background = 0,
  Road = 1,
  Rain = 2,
  Car = 3,
  Pedestrian = 4,
  Bike = 5,
  Sprinkler = 6,
  Targets = 7,
};

inline constexpr std::uint16_t kNumClasses = 8;

constexpr bool is_valid_class(std::uint32_t id) { return id < kNumClasses; }

constexpr std::string_view class_name(SemanticClass c) {
  switch (c) {
    case SemanticClass::Background: return "background";
    case SemanticClass::Road: return "road";
    case SemanticClass::Rain: return "rain";
    case SemanticClass::Car: return "car";
    case SemanticClass::Pedestrian: return "pedestrian";
    case SemanticClass::Bike: return "bike";
    case SemanticClass::Sprinkler: return "sprinkler";
    case SemanticClass::Targets: return "targets";
  }
  return "invalid";
}

using LabelSet = std::vector<SemanticClass>;

struct LabeledCloud {
  PointCloud cloud;
  LabelSet labels;
};

/// Binary rain-vs-rest tally. Positive class is rain; "predicted positive"
/// means the filter removed the point.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) noexcept {
    a += b;
    return a;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Calibrated beam pattern of a scanning LiDAR. Both angle tables are
/// strictly ascending; a beam is one (elevation, azimuth) pair.
struct SensorCalibration {
  std::vector<double> elevations;  // radians, (-pi/2, pi/2)
  std::vector<double> azimuths;    // radians, [-pi, pi)
  double r_max = 0.0;
  double r_min = 0.0;
  double sensor_height = 0.0;  // origin height above world ground

  std::size_t rows() const noexcept { return elevations.size(); }
  std::size_t cols() const noexcept { return azimuths.size(); }
  std::size_t cells() const noexcept { return rows() * cols(); }
};

inline void validate_calibration(const SensorCalibration& calib) {
  if (calib.elevations.empty() || calib.azimuths.empty()) {
    throw Error(ErrorCode::EmptyCalibration, "angle tables must be non-empty");
  }
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  for (std::size_t i = 0; i < calib.elevations.size(); ++i) {
    const double e = calib.elevations[i];
    if (!std::isfinite(e) || e <= -kHalfPi || e >= kHalfPi) {
      throw Error(ErrorCode::InvalidCalibration, "elevation outside (-pi/2, pi/2)", i);
    }
    if (i > 0 && !(calib.elevations[i - 1] < e)) {
      throw Error(ErrorCode::InvalidCalibration, "elevations must be strictly ascending", i);
    }
  }
  for (std::size_t j = 0; j < calib.azimuths.size(); ++j) {
    const double a = calib.azimuths[j];
    if (!std::isfinite(a) || a < -std::numbers::pi || a >= std::numbers::pi) {
      throw Error(ErrorCode::InvalidCalibration, "azimuth outside [-pi, pi)", j);
    }
    if (j > 0 && !(calib.azimuths[j - 1] < a)) {
      throw Error(ErrorCode::InvalidCalibration, "azimuths must be strictly ascending", j);
    }
  }
  if (!(calib.r_max > 0.0) || !std::isfinite(calib.r_max)) {
    throw Error(ErrorCode::InvalidCalibration, "r_max must be positive");
  }
  if (!(calib.r_min >= 0.0) || !(calib.r_min < calib.r_max)) {
    throw Error(ErrorCode::InvalidCalibration, "need 0 <= r_min < r_max");
  }
  if (!std::isfinite(calib.sensor_height)) {
    throw Error(ErrorCode::InvalidCalibration, "sensor_height must be finite");
  }
}

/// Evenly spaced beam pattern. Azimuths cover [az_lo, az_hi) so a full
/// sweep (-pi, pi) never duplicates the seam; elevations include both ends.
inline SensorCalibration uniform_calibration(std::size_t rows, std::size_t cols,
                                             double elev_lo, double elev_hi,
                                             double az_lo, double az_hi,
                                             double r_min, double r_max,
                                             double sensor_height) {
  SensorCalibration c;
  c.elevations.resize(rows);
  c.azimuths.resize(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    c.elevations[i] = rows == 1 ? elev_lo
                                : elev_lo + (elev_hi - elev_lo) * static_cast<double>(i) /
                                                static_cast<double>(rows - 1);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    c.azimuths[j] = az_lo + (az_hi - az_lo) * static_cast<double>(j) / static_cast<double>(cols);
  }
  c.r_min = r_min;
  c.r_max = r_max;
  c.sensor_height = sensor_height;
  return c;
}

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Front-facing 32 x 192 beam pattern used for desk-scale experiments:
/// elevation -20..4 deg, azimuth -30..30 deg, 0.5..20 m, mounted 1.8 m high.
inline SensorCalibration desk_calibration() {
  return uniform_calibration(32, 192, deg2rad(-20.0), deg2rad(4.0), deg2rad(-30.0),
                             deg2rad(30.0), 0.5, 20.0, 1.8);
}

inline void validate_cloud(const PointCloud& cloud) {
  if (cloud.coords.size() != cloud.intensity.size()) {
    throw Error(ErrorCode::LengthMismatch, "coords and intensity differ in length",
                std::min(cloud.coords.size(), cloud.intensity.size()));
  }
  for (std::size_t i = 0; i < cloud.coords.size(); ++i) {
    if (!cloud.coords[i].allFinite()) {
      throw Error(ErrorCode::NonFiniteCoordinate, "", i);
    }
    const double v = cloud.intensity[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::IntensityOutOfRange, "", i);
    }
  }
}

inline void validate_labels(const LabelSet& labels, std::size_t expected) {
  if (labels.size() != expected) {
    throw Error(ErrorCode::LabelLengthMismatch,
                "expected " + std::to_string(expected) + " labels, got " +
                    std::to_string(labels.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_valid_class(static_cast<std::uint32_t>(labels[i]))) {
      throw Error(ErrorCode::InvalidClass, "", i);
    }
  }
}

inline void validate_labeled(const LabeledCloud& lc) {
  validate_cloud(lc.cloud);
  validate_labels(lc.labels, lc.cloud.size());
}

/// Early fusion: `a` followed by `b`, labels concatenated in the same order.
/// Intensities are concatenated as-is without cross-sensor rescaling.
inline LabeledCloud merge_clouds(const LabeledCloud& a, const LabeledCloud& b) {
  try {
    validate_labeled(a);
    validate_labeled(b);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidInput, e.what());
  }
  LabeledCloud out;
  out.cloud.reserve(a.cloud.size() + b.cloud.size());
  out.labels.reserve(a.labels.size() + b.labels.size());
  for (const LabeledCloud* src : {&a, &b}) {
    out.cloud.coords.insert(out.cloud.coords.end(), src->cloud.coords.begin(),
                            src->cloud.coords.end());
    out.cloud.intensity.insert(out.cloud.intensity.end(), src->cloud.intensity.begin(),
                               src->cloud.intensity.end());
    out.labels.insert(out.labels.end(), src->labels.begin(), src->labels.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeding and threading

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for a named stage, so one user seed reproduces a whole pipeline.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char ch : stage) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(seed ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// Worker count: DERAIN_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("DERAIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
/// write results by index so output never depends on the schedule.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(thread_count(), std::max<std::size_t>(1, n / 256)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, &errors, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // Rethrow the lowest-chunk failure so the reported error is schedule-free.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace derain
