// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "test_support.hpp"

namespace derain {
namespace {

template <typename Fn>
Error capture(Fn&& fn) {
  auto e = testing::catch_error(std::forward<Fn>(fn));
  if (!e) ADD_FAILURE() << "expected derain::Error";
  return e.value_or(Error(ErrorCode::InvalidInput, "none"));
}

PointCloud cloud_of(std::initializer_list<Vec3> pts, double intensity = 0.5) {
  PointCloud c;
  for (const Vec3& p : pts) c.push_back(p, intensity);
  return c;
}

TEST(ValidateCloud, EmptyCloudIsValid) { EXPECT_NO_THROW(validate_cloud(PointCloud{})); }

TEST(ValidateCloud, IntensityOutOfRangeNamesIndex) {
  PointCloud c = cloud_of({{1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}, {5, 0, 0}});
  c.intensity[3] = 1.5;
  c.intensity[4] = -1.0;
  const Error e = capture([&] { validate_cloud(c); });
  EXPECT_EQ(e.code(), ErrorCode::IntensityOutOfRange);
  EXPECT_EQ(e.index(), 3u);
}

TEST(ValidateCloud, NaNCoordinateNamesIndex) {
  PointCloud c = cloud_of({{std::nan(""), 0, 0}, {1, 1, 1}});
  const Error e = capture([&] { validate_cloud(c); });
  EXPECT_EQ(e.code(), ErrorCode::NonFiniteCoordinate);
  EXPECT_EQ(e.index(), 0u);
}

TEST(ValidateCloud, InfiniteCoordinateRejected) {
  PointCloud c = cloud_of({{1, 1, 1}, {0, std::numeric_limits<double>::infinity(), 0}});
  EXPECT_EQ(capture([&] { validate_cloud(c); }).index(), 1u);
}

TEST(ValidateCloud, LengthMismatch) {
  PointCloud c = cloud_of({{1, 1, 1}, {2, 2, 2}});
  c.intensity.pop_back();
  EXPECT_EQ(capture([&] { validate_cloud(c); }).code(), ErrorCode::LengthMismatch);
}

TEST(ValidateCloud, IntensityBoundsInclusive) {
  PointCloud c = cloud_of({{1, 1, 1}, {2, 2, 2}});
  c.intensity = {0.0, 1.0};
  EXPECT_NO_THROW(validate_cloud(c));
}

TEST(ValidateLabels, RejectsLengthAndClass) {
  EXPECT_EQ(capture([] { validate_labels(LabelSet(3), 4); }).code(), ErrorCode::LabelLengthMismatch);
  LabelSet bad{SemanticClass::Rain, static_cast<SemanticClass>(8)};
  const Error e = capture([&] { validate_labels(bad, 2); });
  EXPECT_EQ(e.code(), ErrorCode::InvalidClass);
  EXPECT_EQ(e.index(), 1u);
}

TEST(ClassTable, IdsAndNames) {
  EXPECT_EQ(static_cast<int>(SemanticClass::Background), 0);
  EXPECT_EQ(static_cast<int>(SemanticClass::Rain), 2);
  EXPECT_EQ(static_cast<int>(SemanticClass::Targets), 7);
  EXPECT_EQ(class_name(SemanticClass::Sprinkler), "sprinkler");
  EXPECT_TRUE(is_valid_class(7));
  EXPECT_FALSE(is_valid_class(8));
}

TEST(MergeClouds, IdentityWithEmpty) {
  LabeledCloud a{cloud_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
                 {SemanticClass::Road, SemanticClass::Rain, SemanticClass::Car}};
  const LabeledCloud m = merge_clouds(a, LabeledCloud{});
  EXPECT_EQ(m.cloud.coords, a.cloud.coords);
  EXPECT_EQ(m.cloud.intensity, a.cloud.intensity);
  EXPECT_EQ(m.labels, a.labels);
}

TEST(MergeClouds, EmptyWithEmpty) {
  const LabeledCloud m = merge_clouds(LabeledCloud{}, LabeledCloud{});
  EXPECT_TRUE(m.cloud.empty());
  EXPECT_TRUE(m.labels.empty());
}

TEST(MergeClouds, LidarThenRadar) {
  LabeledCloud lidar{cloud_of({{1, 0, 0}, {2, 0, 0}}, 0.3), {SemanticClass::Road, SemanticClass::Rain}};
  LabeledCloud radar{cloud_of({{3, 0, 0}}, 0.9), {SemanticClass::Car}};
  const LabeledCloud m = merge_clouds(lidar, radar);
  ASSERT_EQ(m.cloud.size(), 3u);
  EXPECT_EQ(m.cloud.coords[2], Vec3(3, 0, 0));
  EXPECT_EQ(m.cloud.intensity, (std::vector<double>{0.3, 0.3, 0.9}));
  EXPECT_EQ(m.labels, (LabelSet{SemanticClass::Road, SemanticClass::Rain, SemanticClass::Car}));
  EXPECT_NO_THROW(validate_labeled(m));
}

TEST(MergeClouds, AssociativeAndAdditive) {
  std::mt19937_64 rng(3);
  auto make = [&](std::size_t n) {
    LabeledCloud lc{testing::random_cloud(n, rng), LabelSet(n, SemanticClass::Road)};
    return lc;
  };
  const LabeledCloud a = make(4), b = make(0), c = make(7);
  const LabeledCloud left = merge_clouds(merge_clouds(a, b), c);
  const LabeledCloud right = merge_clouds(a, merge_clouds(b, c));
  EXPECT_EQ(left.cloud.size(), 11u);
  EXPECT_EQ(left.cloud.coords, right.cloud.coords);
  EXPECT_EQ(left.labels, right.labels);
}

TEST(MergeClouds, InvalidInputWrapped) {
  LabeledCloud bad{cloud_of({{1, 0, 0}}), {}};
  EXPECT_EQ(capture([&] { merge_clouds(bad, LabeledCloud{}); }).code(), ErrorCode::InvalidInput);
  LabeledCloud nan{cloud_of({{std::nan(""), 0, 0}}), {SemanticClass::Road}};
  EXPECT_EQ(capture([&] { merge_clouds(LabeledCloud{}, nan); }).code(), ErrorCode::InvalidInput);
}

TEST(Calibration, ValidationRules) {
  SensorCalibration c = uniform_calibration(4, 8, -0.3, 0.1, -1.0, 1.0, 0.5, 50.0, 1.8);
  EXPECT_NO_THROW(validate_calibration(c));

  SensorCalibration dup = c;
  dup.azimuths[3] = dup.azimuths[2];
  EXPECT_EQ(capture([&] { validate_calibration(dup); }).code(), ErrorCode::InvalidCalibration);

  SensorCalibration pole = c;
  pole.elevations.back() = std::numbers::pi / 2;
  EXPECT_EQ(capture([&] { validate_calibration(pole); }).index(), 3u);

  SensorCalibration seam = c;
  seam.azimuths.back() = std::numbers::pi;
  EXPECT_EQ(capture([&] { validate_calibration(seam); }).code(), ErrorCode::InvalidCalibration);

  SensorCalibration ranges = c;
  ranges.r_min = ranges.r_max;
  EXPECT_EQ(capture([&] { validate_calibration(ranges); }).code(), ErrorCode::InvalidCalibration);

  EXPECT_EQ(capture([] { validate_calibration(SensorCalibration{}); }).code(),
            ErrorCode::EmptyCalibration);
}

TEST(Calibration, FullSweepAvoidsSeamDuplicate) {
  const SensorCalibration c =
      uniform_calibration(2, 360, -0.1, 0.1, -std::numbers::pi, std::numbers::pi, 0.0, 10.0, 0.0);
  EXPECT_NO_THROW(validate_calibration(c));
  EXPECT_DOUBLE_EQ(c.azimuths.front(), -std::numbers::pi);
  EXPECT_LT(c.azimuths.back(), std::numbers::pi);
}

TEST(Calibration, DeskPatternIsValid) {
  const SensorCalibration c = desk_calibration();
  EXPECT_NO_THROW(validate_calibration(c));
  EXPECT_EQ(c.rows(), 32u);
  EXPECT_EQ(c.cols(), 192u);
}

TEST(Seeds, StageNamesSeparateStreams) {
  std::set<std::uint64_t> seen;
  for (const char* stage : {"a", "b", "simulate/noise", "simulate/rain", ""}) {
    seen.insert(derive_seed(7, stage));
  }
  EXPECT_EQ(seen.size(), 5u);
  EXPECT_EQ(derive_seed(7, "x"), derive_seed(7, "x"));
  EXPECT_NE(derive_seed(7, "x"), derive_seed(8, "x"));
  EXPECT_NE(derive_seed(7, std::uint64_t{0}), derive_seed(7, std::uint64_t{1}));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  testing::ScopedEnv env("DERAIN_THREADS", "4");
  std::vector<int> hits(5000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) ASSERT_EQ(h, 1);
}

TEST(ParallelFor, PropagatesExceptions) {
  testing::ScopedEnv env("DERAIN_THREADS", "4");
  EXPECT_THROW(parallel_for(5000,
                            [](std::size_t i) {
                              if (i == 4000) throw Error(ErrorCode::InvalidInput, "boom", i);
                            }),
               Error);
}

TEST(ThreadCount, EnvOverride) {
  {
    testing::ScopedEnv env("DERAIN_THREADS", "3");
    EXPECT_EQ(thread_count(), 3u);
  }
  {
    testing::ScopedEnv env("DERAIN_THREADS", "zero");
    EXPECT_GE(thread_count(), 1u);
  }
}

TEST(ErrorMessage, CarriesCodeIndexAndPath) {
  EXPECT_STREQ(Error(ErrorCode::OriginPoint, "", 4).what(), "OriginPoint(4)");
  const Error e(ErrorCode::SchemaError, "missing", std::nullopt, "/ground_plane");
  EXPECT_STREQ(e.what(), "SchemaError(\"/ground_plane\"): missing");
  EXPECT_EQ(e.path(), "/ground_plane");
}

}  // namespace
}  // namespace derain
