// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rain-detection metrics, the filter benchmark and the random-search tuner.
// Counts are pooled over clouds before any ratio is taken (micro-averaging),
// and every 0/0 ratio is reported as 0.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "derain/core.hpp"
#include "derain/filters.hpp"
#include "derain/spatial_index.hpp"

namespace derain {

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double rain_iou = 0.0;  // TP / (TP + FP + FN) of the rain class
  double wall_time_ms = 0.0;
};

/// `pred_removed[i]` set means point i was classified as rain.
inline ConfusionCounts confusion(const Mask& pred_removed, const LabelSet& gt) {
  if (pred_removed.size() != gt.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction and ground truth differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool rain = gt[i] == SemanticClass::Rain;
    if (pred_removed[i]) {
      rain ? ++c.tp : ++c.fp;
    } else {
      rain ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

/// Same tally from a filter's keep mask.
inline ConfusionCounts confusion_from_keep(const Mask& keep, const LabelSet& gt) {
  Mask removed(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) removed[i] = !keep[i];
  return confusion(removed, gt);
}

namespace detail {
inline double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace detail

inline double f1_score(double precision, double recall) {
  return detail::ratio(2.0 * precision * recall, precision + recall);
}

inline MetricReport derive_metrics(const ConfusionCounts& c) {
  MetricReport m;
  const auto tp = static_cast<double>(c.tp);
  m.precision = detail::ratio(tp, tp + static_cast<double>(c.fp));
  m.recall = detail::ratio(tp, tp + static_cast<double>(c.fn));
  m.f1 = f1_score(m.precision, m.recall);
  m.rain_iou = detail::ratio(tp, tp + static_cast<double>(c.fp) + static_cast<double>(c.fn));
  return m;
}

/// Metrics from published precision/recall fractions. IoU follows from F1
/// through IoU = F1 / (2 - F1).
inline MetricReport metrics_from_rates(double precision, double recall) {
  MetricReport m;
  m.precision = precision;
  m.recall = recall;
  m.f1 = f1_score(precision, recall);
  m.rain_iou = detail::ratio(m.f1, 2.0 - m.f1);
  return m;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchSample {
  LabeledCloud data;
  std::string density;  // "heavy", "medium", "light", ...
};

struct NamedFilter {
  std::string name;
  FilterParams params;
};

struct ResultRow {
  std::string filter;
  std::string rain_density;
  MetricReport metrics;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
};

struct BenchOptions {
  bool measure_time = true;
};

/// Density groups in table order: heavy, medium, light, then any other tag
/// in order of first appearance.
inline std::vector<std::string> density_order(std::span<const BenchSample> dataset) {
  std::vector<std::string> seen;
  for (const BenchSample& s : dataset) {
    if (std::find(seen.begin(), seen.end(), s.density) == seen.end()) seen.push_back(s.density);
  }
  auto rank = [](const std::string& d) {
    if (d == "heavy") return 0;
    if (d == "medium") return 1;
    if (d == "light") return 2;
    return 3;
  };
  std::stable_sort(seen.begin(), seen.end(),
                   [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  return seen;
}

inline ResultsTable benchmark_run(std::span<const BenchSample> dataset,
                                  std::span<const NamedFilter> filters,
                                  const BenchOptions& opts = {}) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "benchmark needs at least one cloud");
  for (const BenchSample& s : dataset) validate_labeled(s.data);
  const std::vector<std::string> groups = density_order(dataset);

  ResultsTable table;
  for (const NamedFilter& f : filters) {
    for (const std::string& group : groups) {
      ConfusionCounts pooled;
      double total_ms = 0.0;
      std::size_t clouds = 0;
      for (const BenchSample& s : dataset) {
        if (s.density != group) continue;
        const auto start = std::chrono::steady_clock::now();
        const Mask keep = apply_filter(s.data.cloud, f.params);
        const auto stop = std::chrono::steady_clock::now();
        total_ms += std::chrono::duration<double, std::milli>(stop - start).count();
        pooled += confusion_from_keep(keep, s.data.labels);
        ++clouds;
      }
      ResultRow row{f.name, group, derive_metrics(pooled)};
      row.metrics.wall_time_ms = opts.measure_time ? total_ms / static_cast<double>(clouds) : 0.0;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Random-search tuner

struct ParamRange {
  enum class Scale { Uniform, Log, Integer };
  double lo = 0.0;
  double hi = 0.0;
  Scale scale = Scale::Uniform;
};

using SearchSpace = std::map<std::string, ParamRange>;

/// Parameter names drawn for each kind, in draw order.
inline std::vector<std::string> param_names(FilterKind kind) {
  switch (kind) {
    case FilterKind::Ror: return {"radius", "min_neighbors"};
    case FilterKind::Sor: return {"k", "s"};
    case FilterKind::Dror: return {"alpha", "beta", "k_min", "sr_min"};
    case FilterKind::Dsor: return {"k", "s", "r"};
  }
  return {};
}

inline SearchSpace default_search_space(FilterKind kind) {
  using S = ParamRange::Scale;
  switch (kind) {
    case FilterKind::Ror:
      return {{"radius", {0.05, 2.0, S::Log}}, {"min_neighbors", {1, 10, S::Integer}}};
    case FilterKind::Sor:
      return {{"k", {1, 15, S::Integer}}, {"s", {0.0, 3.0, S::Uniform}}};
    case FilterKind::Dror:
      return {{"alpha", {1e-3, 2e-2, S::Log}},
              {"beta", {1.0, 5.0, S::Uniform}},
              {"k_min", {1, 10, S::Integer}},
              {"sr_min", {0.01, 0.5, S::Log}}};
    case FilterKind::Dsor:
      return {{"k", {1, 15, S::Integer}},
              {"s", {0.0, 2.0, S::Uniform}},
              {"r", {0.005, 0.5, S::Log}}};
  }
  return {};
}

struct TuneConfig {
  std::size_t n_samples = 100;
  std::size_t n_trials = 100;
  std::uint64_t seed = 0;
  SearchSpace space;  // empty map is rejected; use default_search_space()
};

struct TrialRecord {
  FilterParams params;
  double f1 = 0.0;
};

struct TuneResult {
  FilterParams best;
  double best_f1 = 0.0;
  std::vector<TrialRecord> trials;
  std::vector<std::size_t> subset;  // dataset indices evaluated
};

namespace detail {

inline void check_space(FilterKind kind, const SearchSpace& space) {
  if (space.empty()) throw Error(ErrorCode::EmptySearchSpace, "search space is empty");
  for (const std::string& name : param_names(kind)) {
    const auto it = space.find(name);
    if (it == space.end()) {
      throw Error(ErrorCode::EmptySearchSpace, "search space lacks '" + name + "'");
    }
    const ParamRange& r = it->second;
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi) ||
        (r.scale == ParamRange::Scale::Log && !(r.lo > 0.0)) ||
        (r.scale == ParamRange::Scale::Integer && std::ceil(r.lo) > std::floor(r.hi))) {
      throw Error(ErrorCode::InvalidConfig, "bad range for '" + name + "'");
    }
  }
}

inline double draw(const ParamRange& r, std::mt19937_64& rng) {
  switch (r.scale) {
    case ParamRange::Scale::Integer: {
      std::uniform_int_distribution<long> d(static_cast<long>(std::ceil(r.lo)),
                                            static_cast<long>(std::floor(r.hi)));
      return static_cast<double>(d(rng));
    }
    case ParamRange::Scale::Log: {
      std::uniform_real_distribution<double> d(std::log(r.lo), std::log(r.hi));
      return r.lo == r.hi ? r.lo : std::exp(d(rng));
    }
    case ParamRange::Scale::Uniform:
    default: {
      std::uniform_real_distribution<double> d(r.lo, r.hi);
      return r.lo == r.hi ? r.lo : d(rng);
    }
  }
}

inline FilterParams sample_params(FilterKind kind, const SearchSpace& space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<std::string, double> v;
  for (const std::string& name : param_names(kind)) v[name] = draw(space.at(name), rng);
  switch (kind) {
    case FilterKind::Ror: return RorParams{v["radius"], static_cast<int>(v["min_neighbors"])};
    case FilterKind::Sor: return SorParams{static_cast<int>(v["k"]), v["s"]};
    case FilterKind::Dror:
      return DrorParams{v["alpha"], v["beta"], static_cast<int>(v["k_min"]), v["sr_min"]};
    case FilterKind::Dsor: return DsorParams{static_cast<int>(v["k"]), v["s"], v["r"]};
  }
  return DsorParams{};
}

/// Per-cloud state reused across trials: the index, point ranges, and mean
/// k-NN distances per k (these do not depend on the other parameters).
class CloudCache {
 public:
  explicit CloudCache(const LabeledCloud& lc)
      : data_(&lc), index_(lc.cloud), ranges_(point_ranges(lc.cloud)) {}

  Mask keep_mask(const FilterParams& params) {
    return std::visit(
        [&](const auto& p) -> Mask {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, SorParams>) {
            return sor_mask_from_distances(distances(p.k), p.s);
          } else if constexpr (std::is_same_v<T, DsorParams>) {
            return dsor_mask_from_distances(distances(p.k), ranges_, p.s, p.r);
          } else if constexpr (std::is_same_v<T, RorParams>) {
            return ror(data_->cloud, p, index_);
          } else {
            return dror(data_->cloud, p, index_);
          }
        },
        params);
  }

  const LabelSet& labels() const { return data_->labels; }

 private:
  const std::vector<double>& distances(int k) {
    auto it = knn_.find(k);
    if (it == knn_.end()) {
      it = knn_.emplace(k, mean_knn_distances(index_, static_cast<std::size_t>(k))).first;
    }
    return it->second;
  }

  const LabeledCloud* data_;
  SpatialIndex index_;
  std::vector<double> ranges_;
  std::map<int, std::vector<double>> knn_;
};

}  // namespace detail

/// Pooled confusion counts of one parameter vector over a dataset.
inline ConfusionCounts evaluate_filter(std::span<const LabeledCloud> dataset,
                                       const FilterParams& params) {
  ConfusionCounts pooled;
  for (const LabeledCloud& lc : dataset) {
    pooled += confusion_from_keep(apply_filter(lc.cloud, params), lc.labels);
  }
  return pooled;
}

/// Random search: draw up to n_samples clouds without replacement, then
/// evaluate n_trials parameter vectors (trial t seeded by (seed, t)) and keep
/// the one with the highest pooled rain F1; ties go to the earliest trial.
inline TuneResult tune_filter(FilterKind kind, std::span<const LabeledCloud> dataset,
                              const TuneConfig& cfg) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "tuning needs at least one cloud");
  detail::check_space(kind, cfg.space);
  if (cfg.n_trials < 1) throw Error(ErrorCode::InvalidConfig, "n_trials must be >= 1");
  for (const LabeledCloud& lc : dataset) validate_labeled(lc);

  TuneResult result;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 subset_rng(derive_seed(cfg.seed, "tune/subset"));
  std::shuffle(order.begin(), order.end(), subset_rng);
  order.resize(std::min(std::max<std::size_t>(cfg.n_samples, 1), order.size()));
  std::sort(order.begin(), order.end());
  result.subset = order;

  std::vector<detail::CloudCache> caches;
  caches.reserve(order.size());
  for (std::size_t idx : order) caches.emplace_back(dataset[idx]);

  const std::uint64_t trial_seed = derive_seed(cfg.seed, "tune/trials");
  for (std::size_t t = 0; t < cfg.n_trials; ++t) {
    const FilterParams params = detail::sample_params(kind, cfg.space, derive_seed(trial_seed, t));
    ConfusionCounts pooled;
    for (auto& cache : caches) pooled += confusion_from_keep(cache.keep_mask(params), cache.labels());
    const double f1 = derive_metrics(pooled).f1;
    result.trials.push_back({params, f1});
    if (t == 0 || f1 > result.best_f1) {
      result.best = params;
      result.best_f1 = f1;
    }
  }
  return result;
}

}  // namespace derain
