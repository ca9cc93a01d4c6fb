// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Unsupervised statistical de-raining filters:
//   ROR  - radius outlier removal
//   SOR  - statistical outlier removal
//   DROR - dynamic-radius outlier removal (search radius grows with range)
//   DSOR - dynamic statistical outlier removal (threshold grows with range)
// All neighbor counts exclude the query point; thresholds keep on equality.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

#include "derain/core.hpp"
#include "derain/spatial_index.hpp"

namespace derain {

struct RorParams {
  double radius = 0.25;
  int min_neighbors = 3;
  friend bool operator==(const RorParams&, const RorParams&) = default;
};

struct SorParams {
  int k = 5;
  double s = 1.0;
  friend bool operator==(const SorParams&, const SorParams&) = default;
};

struct DrorParams {
  double alpha = 0.0055;  // angular resolution, rad
  double beta = 3.0;
  int k_min = 3;
  double sr_min = 0.04;
  friend bool operator==(const DrorParams&, const DrorParams&) = default;
};

struct DsorParams {
  int k = 5;
  double s = 0.01;
  double r = 0.05;
  friend bool operator==(const DsorParams&, const DsorParams&) = default;
};

using FilterParams = std::variant<RorParams, SorParams, DrorParams, DsorParams>;

enum class FilterKind { Ror, Sor, Dror, Dsor };

inline FilterKind kind_of(const FilterParams& p) { return static_cast<FilterKind>(p.index()); }

constexpr std::string_view kind_name(FilterKind k) {
  switch (k) {
    case FilterKind::Ror: return "ror";
    case FilterKind::Sor: return "sor";
    case FilterKind::Dror: return "dror";
    case FilterKind::Dsor: return "dsor";
  }
  return "?";
}

inline FilterKind parse_kind(std::string_view s) {
  if (s == "ror") return FilterKind::Ror;
  if (s == "sor") return FilterKind::Sor;
  if (s == "dror") return FilterKind::Dror;
  if (s == "dsor") return FilterKind::Dsor;
  throw Error(ErrorCode::InvalidConfig, "unknown filter kind '" + std::string(s) + "'");
}

inline FilterParams default_params(FilterKind k) {
  switch (k) {
    case FilterKind::Ror: return RorParams{};
    case FilterKind::Sor: return SorParams{};
    case FilterKind::Dror: return DrorParams{};
    case FilterKind::Dsor: return DsorParams{};
  }
  return DsorParams{};
}

inline void validate_params(const FilterParams& params) {
  auto bad = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RorParams>) {
          if (!(p.radius > 0.0) || !std::isfinite(p.radius)) bad("ror radius must be > 0");
          if (p.min_neighbors < 0) bad("ror min_neighbors must be >= 0");
        } else if constexpr (std::is_same_v<T, SorParams>) {
          if (p.k < 1) bad("sor k must be >= 1");
          if (!(p.s >= 0.0) || !std::isfinite(p.s)) bad("sor s must be >= 0");
        } else if constexpr (std::is_same_v<T, DrorParams>) {
          if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) bad("dror alpha must be > 0");
          if (!(p.beta > 0.0) || !std::isfinite(p.beta)) bad("dror beta must be > 0");
          if (p.k_min < 0) bad("dror k_min must be >= 0");
          if (!(p.sr_min >= 0.0) || !std::isfinite(p.sr_min)) bad("dror sr_min must be >= 0");
        } else {
          if (p.k < 1) bad("dsor k must be >= 1");
          if (!(p.s >= 0.0) || !std::isfinite(p.s)) bad("dsor s must be >= 0");
          if (!(p.r > 0.0) || !std::isfinite(p.r)) bad("dsor r must be > 0");
        }
      },
      params);
}

/// Mean and population standard deviation, summed over the values in
/// ascending order so the result does not depend on point order.
struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

inline MeanStd order_free_mean_std(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

/// Mean k-NN distance of every point (self excluded).
inline std::vector<double> mean_knn_distances(const SpatialIndex& index, std::size_t k) {
  if (index.size() < k + 1) {
    throw Error(ErrorCode::TooFewPoints,
                "need at least k+1 = " + std::to_string(k + 1) + " points");
  }
  std::vector<double> d(index.size());
  parallel_for(index.size(), [&](std::size_t i) { d[i] = index.knn_mean_dist(i, k); });
  return d;
}

inline std::vector<double> point_ranges(const PointCloud& cloud) {
  std::vector<double> r(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) r[i] = range_of(cloud.coords[i]);
  return r;
}

inline Mask sor_mask_from_distances(const std::vector<double>& mean_dist, double s) {
  const MeanStd st = order_free_mean_std(mean_dist);
  const double threshold = st.mean + s * st.stddev;
  Mask keep(mean_dist.size());
  for (std::size_t i = 0; i < mean_dist.size(); ++i) keep[i] = mean_dist[i] <= threshold;
  return keep;
}

inline Mask dsor_mask_from_distances(const std::vector<double>& mean_dist,
                                     const std::vector<double>& ranges, double s, double r) {
  const MeanStd st = order_free_mean_std(mean_dist);
  const double global = st.mean + s * st.stddev;
  Mask keep(mean_dist.size());
  for (std::size_t i = 0; i < mean_dist.size(); ++i) {
    keep[i] = mean_dist[i] <= global * r * ranges[i];
  }
  return keep;
}

inline Mask ror(const PointCloud& cloud, const RorParams& p, const SpatialIndex& index) {
  validate_params(p);
  Mask keep(cloud.size(), 1);
  if (p.min_neighbors == 0) return keep;
  const auto need = static_cast<std::size_t>(p.min_neighbors);
  parallel_for(cloud.size(), [&](std::size_t i) {
    keep[i] = index.tree().radius_count(cloud.coords[i], p.radius, i, need) >= need;
  });
  return keep;
}

inline Mask sor(const PointCloud& cloud, const SorParams& p, const SpatialIndex& index) {
  validate_params(p);
  (void)cloud;
  return sor_mask_from_distances(mean_knn_distances(index, static_cast<std::size_t>(p.k)), p.s);
}

inline Mask dror(const PointCloud& cloud, const DrorParams& p, const SpatialIndex& index) {
  validate_params(p);
  Mask keep(cloud.size(), 1);
  if (p.k_min == 0) return keep;
  const auto need = static_cast<std::size_t>(p.k_min);
  parallel_for(cloud.size(), [&](std::size_t i) {
    const double radius = std::max(p.sr_min, p.beta * p.alpha * range_of(cloud.coords[i]));
    keep[i] = index.tree().radius_count(cloud.coords[i], radius, i, need) >= need;
  });
  return keep;
}

inline Mask dsor(const PointCloud& cloud, const DsorParams& p, const SpatialIndex& index) {
  validate_params(p);
  return dsor_mask_from_distances(mean_knn_distances(index, static_cast<std::size_t>(p.k)),
                                  point_ranges(cloud), p.s, p.r);
}

/// Inlier mask (1 = keep) of any filter.
inline Mask apply_filter(const PointCloud& cloud, const FilterParams& params) {
  validate_cloud(cloud);
  validate_params(params);
  if (cloud.empty()) {
    if (kind_of(params) == FilterKind::Sor || kind_of(params) == FilterKind::Dsor) {
      throw Error(ErrorCode::TooFewPoints, "statistical filters need at least k+1 points");
    }
    return {};
  }
  const SpatialIndex index(cloud);
  return std::visit(
      [&](const auto& p) -> Mask {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RorParams>) return ror(cloud, p, index);
        else if constexpr (std::is_same_v<T, SorParams>) return sor(cloud, p, index);
        else if constexpr (std::is_same_v<T, DrorParams>) return dror(cloud, p, index);
        else return dsor(cloud, p, index);
      },
      params);
}

inline Mask ror(const PointCloud& cloud, const RorParams& p) { return apply_filter(cloud, p); }
inline Mask sor(const PointCloud& cloud, const SorParams& p) { return apply_filter(cloud, p); }
inline Mask dror(const PointCloud& cloud, const DrorParams& p) { return apply_filter(cloud, p); }
inline Mask dsor(const PointCloud& cloud, const DsorParams& p) { return apply_filter(cloud, p); }

// ---------------------------------------------------------------------------
// Exhaustive reference implementation

inline constexpr std::size_t kBruteForceLimit = 2000;

namespace detail {

inline std::vector<double> brute_squared_row(const PointCloud& cloud, std::size_t i) {
  std::vector<double> row;
  row.reserve(cloud.size());
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (j != i) row.push_back(squared_distance(cloud.coords[j], cloud.coords[i]));
  }
  return row;
}

inline std::vector<double> brute_mean_knn(const PointCloud& cloud, std::size_t k) {
  if (cloud.size() < k + 1) throw Error(ErrorCode::TooFewPoints, "need at least k+1 points");
  std::vector<double> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::vector<double> row = brute_squared_row(cloud, i);
    std::sort(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::sqrt(row[j]);
    out[i] = sum / static_cast<double>(k);
  }
  return out;
}

inline double brute_threshold(std::vector<double> d, double s) {
  std::sort(d.begin(), d.end());
  double sum = 0.0;
  for (double v : d) sum += v;
  const double mu = sum / static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mu) * (v - mu);
  return mu + s * std::sqrt(var / static_cast<double>(d.size()));
}

inline std::size_t brute_count_within(const PointCloud& cloud, std::size_t i, double radius) {
  std::size_t n = 0;
  for (double d2 : brute_squared_row(cloud, i)) n += d2 <= radius * radius;
  return n;
}

}  // namespace detail

/// Same contract as apply_filter, computed from the full pairwise distance
/// table. Limited to kBruteForceLimit points.
inline Mask brute_force_mask(const PointCloud& cloud, const FilterParams& params) {
  validate_cloud(cloud);
  validate_params(params);
  if (cloud.size() > kBruteForceLimit) {
    throw Error(ErrorCode::TooLarge, "brute force limited to 2000 points");
  }
  const std::size_t n = cloud.size();
  Mask keep(n, 1);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RorParams>) {
          for (std::size_t i = 0; i < n; ++i) {
            keep[i] = detail::brute_count_within(cloud, i, p.radius) >=
                      static_cast<std::size_t>(p.min_neighbors);
          }
        } else if constexpr (std::is_same_v<T, DrorParams>) {
          for (std::size_t i = 0; i < n; ++i) {
            const Vec3& q = cloud.coords[i];
            const double range = std::sqrt(q.x() * q.x() + q.y() * q.y() + q.z() * q.z());
            const double radius = std::max(p.sr_min, p.beta * p.alpha * range);
            keep[i] = detail::brute_count_within(cloud, i, radius) >=
                      static_cast<std::size_t>(p.k_min);
          }
        } else if constexpr (std::is_same_v<T, SorParams>) {
          const auto d = detail::brute_mean_knn(cloud, static_cast<std::size_t>(p.k));
          const double threshold = detail::brute_threshold(d, p.s);
          for (std::size_t i = 0; i < n; ++i) keep[i] = d[i] <= threshold;
        } else {
          const auto d = detail::brute_mean_knn(cloud, static_cast<std::size_t>(p.k));
          const double global = detail::brute_threshold(d, p.s);
          for (std::size_t i = 0; i < n; ++i) {
            const Vec3& q = cloud.coords[i];
            const double range = std::sqrt(q.x() * q.x() + q.y() * q.y() + q.z() * q.z());
            keep[i] = d[i] <= global * p.r * range;
          }
        }
      },
      params);
  return keep;
}

}  // namespace derain
