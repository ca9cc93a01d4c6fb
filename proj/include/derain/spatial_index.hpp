// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Static kd-tree for radius counts, k-nearest distances and nearest-neighbor
// lookup. Node pruning compares bounding-box lower bounds that are computed
// with the same rounding as point distances, so every query returns exactly
// what an exhaustive scan would.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "derain/core.hpp"

namespace derain {

/// Squared Euclidean distance summed x, y, z in that order. Every distance in
/// the filters goes through this so fast paths and oracles round identically.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

inline double range_of(const Vec3& p) { return std::sqrt(squared_distance(p, Vec3::Zero())); }

class KdTree {
 public:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!points_.empty()) build(0, points_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Points other than `exclude` within `radius` (d <= radius). Stops early
  /// once `stop_at` neighbors are found.
  std::size_t radius_count(const Vec3& q, double radius, std::size_t exclude = kNone,
                           std::size_t stop_at = kNone) const {
    if (nodes_.empty()) return 0;
    const double r2 = radius * radius;
    std::size_t count = 0;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (box_distance2(n, q) > r2) continue;
      if (n.leaf()) {
        for (std::size_t k = n.begin; k < n.end; ++k) {
          const std::size_t idx = order_[k];
          if (idx != exclude && squared_distance(points_[idx], q) <= r2) {
            if (++count >= stop_at) return count;
          }
        }
        continue;
      }
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
    return count;
  }

  /// Squared distances to the k nearest points other than `exclude`,
  /// ascending. Fewer than k are returned only if the tree is too small.
  std::vector<double> knn_squared(const Vec3& q, std::size_t k, std::size_t exclude = kNone) const {
    std::priority_queue<double> heap;
    if (k == 0 || nodes_.empty()) return {};
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (heap.size() == k && box_distance2(n, q) > heap.top()) continue;
      if (n.leaf()) {
        for (std::size_t j = n.begin; j < n.end; ++j) {
          const std::size_t idx = order_[j];
          if (idx == exclude) continue;
          const double d2 = squared_distance(points_[idx], q);
          if (heap.size() < k) {
            heap.push(d2);
          } else if (d2 < heap.top()) {
            heap.pop();
            heap.push(d2);
          }
        }
        continue;
      }
      // Descend the nearer child last so it is popped first.
      const Node& l = nodes_[n.left];
      const Node& r = nodes_[n.right];
      if (box_distance2(l, q) <= box_distance2(r, q)) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    std::vector<double> out(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = heap.top();
      heap.pop();
    }
    return out;
  }

  /// Index of the nearest point; exact distance ties go to the lowest index.
  std::size_t nearest(const Vec3& q) const {
    if (nodes_.empty()) return kNone;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best = kNone;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (box_distance2(n, q) > best_d2) continue;
      if (n.leaf()) {
        for (std::size_t j = n.begin; j < n.end; ++j) {
          const std::size_t idx = order_[j];
          const double d2 = squared_distance(points_[idx], q);
          if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
            best_d2 = d2;
            best = idx;
          }
        }
        continue;
      }
      const Node& l = nodes_[n.left];
      const Node& r = nodes_[n.right];
      if (box_distance2(l, q) <= box_distance2(r, q)) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    return best;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    bool leaf() const noexcept { return left == 0; }
  };

  static double box_distance2(const Node& n, const Vec3& q) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
      double gap = 0.0;
      if (q[a] < n.lo[a]) {
        gap = n.lo[a] - q[a];
      } else if (q[a] > n.hi[a]) {
        gap = q[a] - n.hi[a];
      }
      acc += gap * gap;
    }
    return acc;
  }

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::size_t k = begin + 1; k < end; ++k) {
      lo = lo.cwiseMin(points_[order_[k]]);
      hi = hi.cwiseMax(points_[order_[k]]);
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Index over one cloud. Neighbor queries are by point index and always
/// exclude the query point itself.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud) : tree_(cloud.coords) {}

  std::size_t size() const noexcept { return tree_.size(); }
  const KdTree& tree() const noexcept { return tree_; }

  std::size_t radius_count(std::size_t i, double radius) const {
    check(i);
    return tree_.radius_count(tree_.point(i), radius, i);
  }

  /// Mean distance to the k nearest other points. The k distances are summed
  /// in ascending order.
  double knn_mean_dist(std::size_t i, std::size_t k) const {
    check(i);
    if (k == 0 || k >= tree_.size()) {
      throw Error(ErrorCode::TooFewPoints, "need more than k points for a k-NN query");
    }
    const std::vector<double> d2 = tree_.knn_squared(tree_.point(i), k, i);
    double sum = 0.0;
    for (double v : d2) sum += std::sqrt(v);
    return sum / static_cast<double>(k);
  }

 private:
  void check(std::size_t i) const {
    if (tree_.empty()) throw Error(ErrorCode::EmptyIndex, "index holds no points");
    if (i >= tree_.size()) throw Error(ErrorCode::InvalidInput, "query index out of range", i);
  }

  KdTree tree_;
};

inline SpatialIndex build_index(const PointCloud& cloud) {
  validate_cloud(cloud);
  return SpatialIndex(cloud);
}

}  // namespace derain
