// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rain injection for clean scans. A Marshall-Palmer drop field is sampled as
// a homogeneous Poisson process, every calibrated beam is tested against the
// drops, and the nearest intercepting drop becomes a rain-labeled return.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "derain/core.hpp"
#include "derain/pgm.hpp"

namespace derain {

struct RainConfig {
  double rate = 10.0;              // mm/h
  double d_min = 0.5;              // mm
  double d_max = 6.0;              // mm
  double n0 = 8000.0;              // m^-3 mm^-1
  double beam_divergence = 0.0;    // half-angle, rad
  double rain_reflectance = 0.05;  // intensity of rain returns
  bool occlude_returns = true;     // drops may also cut returned beams short
  std::uint64_t seed = 0;
};

struct RainDrop {
  Vec3 center = Vec3::Zero();  // m
  double diameter = 1.0;       // mm

  double radius_m() const noexcept { return diameter * 0.5e-3; }
  friend bool operator==(const RainDrop&, const RainDrop&) = default;
};

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  double volume() const {
    const Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }
};

inline double marshall_palmer_lambda(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::NonPositiveRate, "rain rate must be > 0 mm/h");
  }
  return 4.1 * std::pow(rate, -0.21);
}

inline void validate_rain_config(const RainConfig& c) {
  if (!(c.rate > 0.0) || !std::isfinite(c.rate)) {
    throw Error(ErrorCode::NonPositiveRate, "rain rate must be > 0 mm/h");
  }
  if (!(c.d_min > 0.0) || !(c.d_min <= c.d_max) || !std::isfinite(c.d_max)) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < d_min <= d_max");
  }
  if (!(c.n0 >= 0.0) || !std::isfinite(c.n0)) {
    throw Error(ErrorCode::InvalidConfig, "n0 must be >= 0");
  }
  if (!(c.beam_divergence >= 0.0) || !(c.beam_divergence < std::numbers::pi / 2.0)) {
    throw Error(ErrorCode::InvalidConfig, "beam_divergence must be in [0, pi/2)");
  }
  if (!(c.rain_reflectance >= 0.0 && c.rain_reflectance <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "rain_reflectance outside [0, 1]");
  }
}

/// Drops per cubic meter with diameters in [d_min, d_max]: the integral of
/// n0 * exp(-lambda * D) over that interval.
inline double expected_drop_concentration(const RainConfig& c) {
  validate_rain_config(c);
  const double lambda = marshall_palmer_lambda(c.rate);
  // exp(-l*a) - exp(-l*b) = exp(-l*a) * -expm1(-l*(b - a)), stable for small b - a.
  return c.n0 / lambda * std::exp(-lambda * c.d_min) * -std::expm1(-lambda * (c.d_max - c.d_min));
}

/// Streams a drop field without materializing it: count() drops, each drawn
/// by next(). The sequence is a pure function of (config, bounds).
class DropSampler {
 public:
  DropSampler(const RainConfig& config, const Aabb& bounds)
      : bounds_(bounds), rng_(config.seed) {
    validate_rain_config(config);
    if (!bounds.lo.allFinite() || !bounds.hi.allFinite() ||
        !(bounds.hi.array() >= bounds.lo.array()).all()) {
      throw Error(ErrorCode::DegenerateBounds, "bounds must be finite with lo <= hi");
    }
    lambda_ = marshall_palmer_lambda(config.rate);
    d_min_ = config.d_min;
    span_mass_ = -std::expm1(-lambda_ * (config.d_max - config.d_min));
    const double mean = expected_drop_concentration(config) * bounds.volume();
    if (mean > 0.0 && std::isfinite(mean)) {
      std::poisson_distribution<std::uint64_t> poisson(mean);
      count_ = poisson(rng_);
    }
  }

  std::uint64_t count() const noexcept { return count_; }

  RainDrop next() {
    const Vec3 extent = bounds_.hi - bounds_.lo;
    RainDrop d;
    d.center = {bounds_.lo.x() + extent.x() * unit(), bounds_.lo.y() + extent.y() * unit(),
                bounds_.lo.z() + extent.z() * unit()};
    // Inverse CDF of the exponential truncated to [d_min, d_max].
    d.diameter = d_min_ - std::log1p(-unit() * span_mass_) / lambda_;
    return d;
  }

 private:
  // uniform on [0, 1) from the top 53 bits
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  Aabb bounds_;
  std::mt19937_64 rng_;
  double lambda_ = 1.0;
  double d_min_ = 0.0;
  double span_mass_ = 0.0;
  std::uint64_t count_ = 0;
};

inline std::vector<RainDrop> sample_drop_field(const RainConfig& config, const Aabb& bounds) {
  DropSampler sampler(config, bounds);
  std::vector<RainDrop> drops;
  drops.reserve(sampler.count());
  for (std::uint64_t i = 0; i < sampler.count(); ++i) drops.push_back(sampler.next());
  return drops;
}

/// Range along the beam at which `drop` is intercepted: the drop's projection
/// onto the ray, provided it lies ahead of the origin and within the drop
/// radius widened by the divergence cone at that range.
inline std::optional<double> intersect_beam(const Vec3& origin, const Vec3& direction,
                                            const RainDrop& drop, double divergence) {
  const Vec3 rel = drop.center - origin;
  const double t = rel.dot(direction);
  if (!(t > 0.0)) return std::nullopt;
  const double perp = (rel - t * direction).norm();
  if (perp <= drop.radius_m() + t * std::tan(divergence)) return t;
  return std::nullopt;
}

/// Axis-aligned box enclosing every beam segment [0, r_max] of `calib`,
/// padded by `pad` on all sides.
inline Aabb beam_bounds(const SensorCalibration& calib, double pad) {
  Aabb box;
  box.lo = Vec3::Zero();
  box.hi = Vec3::Zero();
  for (double el : calib.elevations) {
    for (double az : calib.azimuths) {
      const Vec3 end = to_euclidean(calib.r_max, az, el);
      box.lo = box.lo.cwiseMin(end);
      box.hi = box.hi.cwiseMax(end);
    }
  }
  box.lo.array() -= pad;
  box.hi.array() += pad;
  return box;
}

/// Nearest accepted drop interception per grid cell. Offer drops one at a
/// time; only beams angularly close enough to each drop are tested exactly.
class BeamInterceptor {
 public:
  BeamInterceptor(const PolarGridMap& pgm, const SensorCalibration& calib, double divergence,
                  bool occlude_returns)
      : calib_(calib),
        cols_(calib.cols()),
        divergence_(divergence),
        tan_div_(std::tan(divergence)),
        hit_range_(pgm.cells(), std::numeric_limits<double>::infinity()),
        limit_(pgm.cells()) {
    directions_.resize(pgm.cells());
    for (std::size_t idx = 0; idx < pgm.cells(); ++idx) {
      directions_[idx] = to_euclidean(1.0, calib.azimuths[idx % cols_], calib.elevations[idx / cols_]);
      if (pgm.unreturned[idx]) {
        limit_[idx] = calib.r_max;
      } else {
        limit_[idx] = occlude_returns ? pgm.range[idx] : -1.0;
      }
    }
    cos_el_.resize(calib.rows());
    for (std::size_t i = 0; i < calib.rows(); ++i) cos_el_[i] = std::cos(calib.elevations[i]);
    sin_el_lo_ = std::sin(calib.elevations.front());
    sin_el_hi_ = std::sin(calib.elevations.back());
  }

  void offer(const RainDrop& drop) {
    const Vec3& c = drop.center;
    const double dist = c.norm();
    if (!(dist > 0.0)) return;
    const double reach = drop.radius_m() + dist * tan_div_;
    if (dist - reach > calib_.r_max) return;
    if (reach >= dist) {
      for (std::size_t idx = 0; idx < hit_range_.size(); ++idx) test(idx, drop);
      return;
    }
    constexpr double kSlack = 1e-9;
    // Cheap reject in sine space: sin is 1-Lipschitz and asin(x) <= x*pi/2.
    const double w_max = 0.5 * std::numbers::pi * reach / dist + kSlack;
    const double sin_el = c.z() / dist;
    if (sin_el < sin_el_lo_ - w_max || sin_el > sin_el_hi_ + w_max) return;
    const double w = std::asin(reach / dist);
    const double el = std::asin(std::clamp(c.z() / dist, -1.0, 1.0));
    const auto& elev = calib_.elevations;
    auto row = static_cast<std::size_t>(
        std::lower_bound(elev.begin(), elev.end(), el - w - kSlack) - elev.begin());
    if (row == elev.size() || elev[row] > el + w + kSlack) return;

    double az = std::atan2(c.y(), c.x());
    const double sin_half_w = std::sin(0.5 * w);
    const double cos_c = std::cos(el);
    const auto& azim = calib_.azimuths;
    for (; row < elev.size() && elev[row] <= el + w + kSlack; ++row) {
      const double denom = std::sqrt(std::max(0.0, cos_el_[row] * cos_c));
      const double bound = denom > 0.0 ? sin_half_w / denom : 2.0;
      if (bound >= 1.0) {
        for (std::size_t col = 0; col < cols_; ++col) test(row * cols_ + col, drop);
        continue;
      }
      const double dphi = 2.0 * std::asin(bound) + kSlack;
      for (double shift : {-2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi}) {
        const double lo = az + shift - dphi;
        const double hi = az + shift + dphi;
        if (hi < azim.front() || lo > azim.back()) continue;
        auto col = static_cast<std::size_t>(std::lower_bound(azim.begin(), azim.end(), lo) -
                                            azim.begin());
        for (; col < cols_ && azim[col] <= hi; ++col) test(row * cols_ + col, drop);
      }
    }
  }

  /// Applies the accepted interceptions; returns the number of cells changed.
  std::size_t apply(PolarGridMap& pgm, LabelSet& labels, double reflectance) const {
    std::size_t changed = 0;
    for (std::size_t idx = 0; idx < hit_range_.size(); ++idx) {
      const double t = hit_range_[idx];
      if (!std::isfinite(t)) continue;
      pgm.unreturned[idx] = false;
      pgm.range[idx] = t;
      pgm.coords[idx] = t * directions_[idx];
      pgm.intensity[idx] = reflectance;
      labels[idx] = SemanticClass::Rain;
      ++changed;
    }
    return changed;
  }

 private:
  void test(std::size_t idx, const RainDrop& drop) {
    const auto t = intersect_beam(Vec3::Zero(), directions_[idx], drop, divergence_);
    if (!t || *t < calib_.r_min || !(*t < limit_[idx])) return;
    if (*t < hit_range_[idx]) hit_range_[idx] = *t;
  }

  const SensorCalibration& calib_;
  std::size_t cols_;
  double divergence_;
  double tan_div_;
  std::vector<Vec3> directions_;
  std::vector<double> cos_el_;
  double sin_el_lo_ = -1.0;
  double sin_el_hi_ = 1.0;
  std::vector<double> hit_range_;
  std::vector<double> limit_;
};

struct RainResult {
  PolarGridMap pgm;
  LabelSet labels;
  std::size_t injected = 0;
};

namespace detail {

inline void check_rain_inputs(const PolarGridMap& pgm, const LabelSet& labels,
                              const SensorCalibration& calib) {
  validate_calibration(calib);
  if (pgm.rows != calib.rows() || pgm.cols != calib.cols()) {
    throw Error(ErrorCode::InvalidInput, "grid shape does not match calibration");
  }
  if (labels.size() != pgm.cells()) {
    throw Error(ErrorCode::LabelLengthMismatch,
                "expected " + std::to_string(pgm.cells()) + " labels, got " +
                    std::to_string(labels.size()));
  }
}

}  // namespace detail

/// Injects an explicit list of drops (sensor frame). Cells are intercepted by
/// their nearest drop with range in [r_min, L), where L is r_max for an
/// unreturned beam and the existing return range otherwise.
inline RainResult inject_drops(const PolarGridMap& pgm, const LabelSet& labels,
                               const SensorCalibration& calib, std::span<const RainDrop> drops,
                               const RainConfig& config) {
  detail::check_rain_inputs(pgm, labels, calib);
  validate_rain_config(config);
  BeamInterceptor interceptor(pgm, calib, config.beam_divergence, config.occlude_returns);
  for (const RainDrop& d : drops) interceptor.offer(d);
  RainResult out{pgm, labels, 0};
  out.injected = interceptor.apply(out.pgm, out.labels, config.rain_reflectance);
  return out;
}

/// Samples a drop field over the box enclosing all beams and injects it.
inline RainResult inject_rain(const PolarGridMap& pgm, const LabelSet& labels,
                              const SensorCalibration& calib, const RainConfig& config) {
  detail::check_rain_inputs(pgm, labels, calib);
  validate_rain_config(config);
  const double pad = config.d_max * 0.5e-3 + calib.r_max * std::tan(config.beam_divergence);
  DropSampler sampler(config, beam_bounds(calib, pad));
  BeamInterceptor interceptor(pgm, calib, config.beam_divergence, config.occlude_returns);
  for (std::uint64_t i = 0; i < sampler.count(); ++i) interceptor.offer(sampler.next());
  RainResult out{pgm, labels, 0};
  out.injected = interceptor.apply(out.pgm, out.labels, config.rain_reflectance);
  return out;
}

}  // namespace derain
