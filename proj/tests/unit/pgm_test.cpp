// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <numbers>

#include "unit_support.hpp"

namespace derain {
namespace {

constexpr double kPi = std::numbers::pi;

SensorCalibration small_calib(std::size_t rows, std::size_t cols, double r_max = 50.0) {
  return uniform_calibration(rows, cols, -0.2, 0.2, -1.0, 1.0, 0.5, r_max, 1.0);
}

TEST(ToPolar, AxisCase) {
  const std::vector<Vec3> p{{1, 0, 0}};
  const PolarCoords c = to_polar(p);
  EXPECT_DOUBLE_EQ(c.ranges[0], 1.0);
  EXPECT_DOUBLE_EQ(c.azimuths[0], 0.0);
  EXPECT_DOUBLE_EQ(c.elevations[0], 0.0);
}

TEST(ToPolar, Pole) {
  const std::vector<Vec3> p{{0, 0, 1}};
  const PolarCoords c = to_polar(p);
  EXPECT_DOUBLE_EQ(c.ranges[0], 1.0);
  EXPECT_NEAR(c.elevations[0], kPi / 2, 1e-12);
}

TEST(ToPolar, DiagonalPoint) {
  const std::vector<Vec3> p{{1, 1, std::sqrt(2.0)}};
  const PolarCoords c = to_polar(p);
  EXPECT_NEAR(c.ranges[0], 2.0, 1e-15);
  EXPECT_NEAR(c.azimuths[0], kPi / 4, 1e-15);
  EXPECT_NEAR(c.elevations[0], kPi / 4, 1e-15);
}

TEST(ToPolar, AzimuthFoldedIntoHalfOpenRange) {
  const std::vector<Vec3> p{{-1, 0, 0}, {-1, -0.0, 0}, {-1, 1e-300, 0}};
  const PolarCoords c = to_polar(p);
  for (double az : c.azimuths) {
    EXPECT_GE(az, -kPi);
    EXPECT_LT(az, kPi);
  }
}

TEST(ToPolar, OriginPointNamesIndex) {
  const std::vector<Vec3> p{{1, 0, 0}, {0, 0, 0}};
  const auto e = testing::catch_error([&] { to_polar(p); });
  ASSERT_TRUE(e);
  EXPECT_EQ(e->code(), ErrorCode::OriginPoint);
  EXPECT_EQ(e->index(), 1u);
}

TEST(ToEuclidean, Examples) {
  EXPECT_TRUE(to_euclidean(1, 0, 0).isApprox(Vec3(1, 0, 0)));
  EXPECT_NEAR((to_euclidean(2, kPi / 4, kPi / 4) - Vec3(1, 1, std::sqrt(2.0))).norm(), 0.0, 1e-15);
  EXPECT_EQ(to_euclidean(0, 1.3, -0.7), Vec3::Zero());
}

TEST(ToEuclidean, InvertsToPolar) {
  std::mt19937_64 rng(11);
  const PointCloud cloud = testing::random_cloud(2000, rng, 100.0);
  const PolarCoords c = to_polar(cloud.coords);
  const std::vector<Vec3> back = to_euclidean(c.ranges, c.azimuths, c.elevations);
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_LE((back[i] - cloud.coords[i]).norm(), 1e-9 * cloud.coords[i].norm()) << i;
  }
}

TEST(ToEuclidean, LengthMismatch) {
  const std::vector<double> r{1.0, 2.0}, a{0.0}, e{0.0, 0.0};
  EXPECT_DERAIN_ERROR(to_euclidean(r, a, e), ErrorCode::LengthMismatch);
}

TEST(NearestAngleIndex, Examples) {
  const std::vector<double> t{0.0, 0.2};
  EXPECT_EQ(nearest_angle_index(0.10, std::vector<double>{0.0, 0.2}), 0u);
  EXPECT_EQ(nearest_angle_index(0.19, t), 1u);
  EXPECT_EQ(nearest_angle_index(-5.0, t), 0u);
  EXPECT_EQ(nearest_angle_index(5.0, t), 1u);
  EXPECT_DERAIN_ERROR(nearest_angle_index(0.0, std::vector<double>{}), ErrorCode::EmptyTable);
}

TEST(NearestAngleIndex, ExactTieGoesLow) {
  // 0.25 and 0.75 are exact in binary, so |0.5 - 0.25| == |0.5 - 0.75|.
  const std::vector<double> t{0.25, 0.75, 1.0};
  EXPECT_EQ(nearest_angle_index(0.5, t), 0u);
}

TEST(NearestAngleIndex, MatchesLinearScan) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> t(37);
  for (double& v : t) v = u(rng);
  std::sort(t.begin(), t.end());
  for (int q = 0; q < 5000; ++q) {
    const double a = u(rng) * 1.5;
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (std::abs(t[i] - a) < std::abs(t[best] - a)) best = i;
    }
    ASSERT_EQ(nearest_angle_index(a, t), best) << a;
  }
}

TEST(ProjectToPgm, EmptyCloudAllUnreturned) {
  const SensorCalibration calib = small_calib(2, 3, 30.0);
  const PolarGridMap pgm = project_to_pgm(PointCloud{}, calib);
  ASSERT_EQ(pgm.cells(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(pgm.unreturned[i]);
    EXPECT_EQ(pgm.range[i], 30.0);
    EXPECT_EQ(pgm.intensity[i], 0.0);
    EXPECT_NEAR(pgm.coords[i].norm(), 30.0, 30.0 * 1e-12);
  }
}

TEST(ProjectToPgm, FullyAlignedCloudRoundTrips) {
  const SensorCalibration calib = small_calib(4, 6);
  std::mt19937_64 rng(2);
  const testing::AlignedScan scan = testing::aligned_scan(calib, 1.0, rng);
  const PolarGridMap pgm = project_to_pgm(scan.cloud, calib);
  EXPECT_EQ(pgm.returned_count(), calib.cells());
  for (std::size_t i = 0; i < scan.cloud.size(); ++i) {
    const std::size_t idx = scan.cells[i];
    EXPECT_LE((pgm.coords[idx] - scan.cloud.coords[i]).norm(), 1e-4);
    EXPECT_EQ(pgm.intensity[idx], scan.cloud.intensity[i]);
  }
}

TEST(ProjectToPgm, CollisionKeepsNearest) {
  const SensorCalibration calib = small_calib(1, 1);
  PointCloud c;
  c.push_back(to_euclidean(9.0, 0.0, 0.0), 0.9);
  c.push_back(to_euclidean(5.0, 0.0, 0.0), 0.5);
  c.push_back(to_euclidean(7.0, 0.0, 0.0), 0.7);
  const PolarGridMap pgm = project_to_pgm(c, calib);
  EXPECT_FALSE(pgm.unreturned[0]);
  EXPECT_NEAR(pgm.range[0], 5.0, 1e-12);
  EXPECT_EQ(pgm.intensity[0], 0.5);
}

TEST(ProjectToPgm, CollisionTieKeepsLowerIndex) {
  const SensorCalibration calib = small_calib(1, 1);
  PointCloud c;
  c.push_back(Vec3(5, 0, 0), 0.1);
  c.push_back(Vec3(5, 0, 0), 0.2);
  EXPECT_EQ(project_to_pgm(c, calib).intensity[0], 0.1);
}

TEST(ProjectToPgm, OutOfFieldClampsAndOutOfRangeDrops) {
  const SensorCalibration calib = small_calib(3, 3, 20.0);
  PointCloud c;
  c.push_back(to_euclidean(10.0, 2.5, 0.9), 0.4);  // far outside both tables
  c.push_back(to_euclidean(25.0, 0.0, 0.0), 0.4);  // beyond r_max
  c.push_back(to_euclidean(0.1, 0.0, 0.0), 0.4);   // below r_min
  const PolarGridMap pgm = project_to_pgm(c, calib);
  EXPECT_EQ(pgm.returned_count(), 1u);
  EXPECT_FALSE(pgm.unreturned[pgm.cell(2, 2)]);
}

TEST(ProjectToPgm, ErrorsPropagate) {
  PointCloud c;
  c.push_back(Vec3::Zero(), 0.0);
  EXPECT_DERAIN_ERROR(project_to_pgm(c, small_calib(2, 2)), ErrorCode::OriginPoint);
  EXPECT_DERAIN_ERROR(project_to_pgm(PointCloud{}, SensorCalibration{}), ErrorCode::EmptyCalibration);
}

TEST(ProjectToPgm, InvariantsOnRandomClouds) {
  const SensorCalibration calib = small_calib(8, 16, 40.0);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud c = testing::random_cloud(300, rng, 30.0);
    const PolarGridMap pgm = project_to_pgm(c, calib);
    EXPECT_LE(pgm.returned_count(), std::min(c.size(), calib.cells()));
    for (std::size_t i = 0; i < pgm.cells(); ++i) {
      EXPECT_NEAR(pgm.coords[i].norm(), pgm.range[i], 1e-4 * pgm.range[i]);
      if (pgm.unreturned[i]) {
        EXPECT_EQ(pgm.intensity[i], 0.0);
        EXPECT_EQ(pgm.range[i], calib.r_max);
      } else {
        EXPECT_GE(pgm.range[i], calib.r_min);
        EXPECT_LE(pgm.range[i], calib.r_max);
      }
    }
  }
}

TEST(Flatten, SingleCell) {
  const SensorCalibration calib = small_calib(1, 1);
  PointCloud c;
  c.push_back(Vec3(3, 0, 0), 0.25);
  const FlatScan flat = flatten(project_to_pgm(c, calib));
  ASSERT_EQ(flat.cloud.size(), 1u);
  EXPECT_EQ(flat.cloud.coords[0], Vec3(3, 0, 0));
  EXPECT_EQ(flat.cloud.intensity[0], 0.25);
  EXPECT_EQ(flat.unreturned[0], 0);
}

TEST(Flatten, AllUnreturnedGrid) {
  const SensorCalibration calib = small_calib(2, 3, 12.0);
  const FlatScan flat = flatten(empty_grid(calib));
  ASSERT_EQ(flat.cloud.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(flat.cloud.coords[i].norm(), 12.0, 1e-12);
    EXPECT_EQ(flat.unreturned[i], 1);
  }
}

TEST(Flatten, RowMajorOrder) {
  const SensorCalibration calib = small_calib(3, 5);
  const FlatScan flat = flatten(empty_grid(calib));
  const PolarCoords polar = to_polar(flat.cloud.coords);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_NEAR(polar.elevations[r * 5 + c], calib.elevations[r], 1e-12);
      EXPECT_NEAR(polar.azimuths[r * 5 + c], calib.azimuths[c], 1e-12);
    }
  }
}

TEST(Flatten, AlignedRoundTripIsSameSet) {
  const SensorCalibration calib = small_calib(6, 10);
  std::mt19937_64 rng(4);
  const testing::AlignedScan scan = testing::aligned_scan(calib, 0.6, rng);
  const PolarGridMap pgm = project_to_pgm(scan.cloud, calib);
  const FlatScan flat = flatten(pgm);
  EXPECT_EQ(flat.cloud.size(), calib.cells());
  const LabeledCloud returned = returned_points(pgm, LabelSet(pgm.cells(), SemanticClass::Road));
  EXPECT_EQ(returned.cloud.size(), scan.cloud.size());
  // aligned_scan emits cells in grid order, so the returned list matches
  // the input point for point.
  for (std::size_t i = 0; i < scan.cloud.size(); ++i) {
    EXPECT_LE((returned.cloud.coords[i] - scan.cloud.coords[i]).norm(), 1e-3);
  }
}

TEST(Unflatten, InvertsFlatten) {
  const SensorCalibration calib = small_calib(4, 7);
  std::mt19937_64 rng(8);
  const testing::AlignedScan scan = testing::aligned_scan(calib, 0.5, rng);
  const PolarGridMap pgm = project_to_pgm(scan.cloud, calib);
  const PolarGridMap back = unflatten(flatten(pgm), calib);
  EXPECT_EQ(back.coords, pgm.coords);
  EXPECT_EQ(back.unreturned, pgm.unreturned);
  for (std::size_t i = 0; i < pgm.cells(); ++i) EXPECT_NEAR(back.range[i], pgm.range[i], 1e-12);
  FlatScan bad = flatten(pgm);
  bad.unreturned.pop_back();
  EXPECT_DERAIN_ERROR(unflatten(bad, calib), ErrorCode::LengthMismatch);
}

TEST(ReturnedPoints, LabelLengthChecked) {
  const PolarGridMap pgm = empty_grid(small_calib(2, 2));
  EXPECT_DERAIN_ERROR(returned_points(pgm, LabelSet(3)), ErrorCode::LabelLengthMismatch);
  EXPECT_TRUE(returned_points(pgm, LabelSet(4)).cloud.empty());
}

}  // namespace
}  // namespace derain
