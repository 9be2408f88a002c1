// Copyright 2026 The Trayguard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "trayguard/perception.hpp"

namespace trayguard {
namespace {

constexpr double kLong = 27.5 * 0.0254;
constexpr double kShort = 15.0 * 0.0254;

PerceptionFrame random_frame(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  PerceptionFrame f;
  f.R = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
  f.p = Vec3(n(rng), n(rng), n(rng));
  return f;
}

TEST(PerceptionTest, IdentityFrame) {
  const PerceptionFrame f;
  const Vec3 v(0.3, -1.2, 4.0);
  EXPECT_EQ(to_global(f, v), v);
}

TEST(PerceptionTest, QuarterTurnAboutZ) {
  PerceptionFrame f;
  f.R = rot_z(std::numbers::pi / 2);
  const Vec3 g = to_global(f, Vec3(1, 0, 0));
  EXPECT_NEAR((g - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(PerceptionTest, RoundTripAndRigidity) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const PerceptionFrame f = random_frame(rng);
    f.validate();
    const Vec3 a(n(rng), n(rng), n(rng));
    const Vec3 b(n(rng), n(rng), n(rng));
    // inverse written out independently of to_local
    const Vec3 back = f.R.inverse() * (to_global(f, a) - f.p);
    EXPECT_LE((back - a).norm(), 1e-12);
    EXPECT_LE((f.to_local(to_global(f, a)) - a).norm(), 1e-12);
    EXPECT_NEAR((to_global(f, a) - to_global(f, b)).norm(), (a - b).norm(), 1e-12);
  }
}

TEST(PerceptionTest, RejectsNonRotation) {
  PerceptionFrame f;
  f.R(0, 0) = -1.0;  // reflection
  EXPECT_THROW(f.validate(), Error);
  f.R = 1.01 * Mat3::Identity();
  EXPECT_THROW(f.validate(), Error);
}

VertexMeasurement constant_sample(double value) {
  VertexMeasurement m;
  m.vertices.fill(Vec3::Constant(value));
  return m;
}

TEST(AverageTest, IdenticalAndTwoSampleMeans) {
  const std::vector<VertexMeasurement> same(5, constant_sample(0.7));
  for (const auto& v : average_vertices(same)) EXPECT_EQ(v, Vec3::Constant(0.7));
  const std::vector<VertexMeasurement> two = {constant_sample(0.0), constant_sample(2.0)};
  for (const auto& v : average_vertices(two)) EXPECT_EQ(v, Vec3::Constant(1.0));
}

TEST(AverageTest, EmptyIsNoData) {
  try {
    average_vertices(std::vector<VertexMeasurement>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoData);
  }
}

TEST(AverageTest, PermutationInvariant) {
  ManwaySensor sensor(0.01, 9);
  const auto truth = ManwayRect::from_center(Vec2(0.1, 0.2), 0.3, kLong, kShort).vertices;
  auto samples = sensor.burst(truth, PerceptionFrame::on_body(Vec3(0, 0, 0.33), 0.4), 0, 50);
  const auto a = average_vertices(samples);
  std::mt19937_64 rng(2);
  std::shuffle(samples.begin(), samples.end(), rng);
  const auto b = average_vertices(samples);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_LE((a[k] - b[k]).norm(), 1e-14);
}

TEST(AverageTest, MeanOfHundredShrinksNoiseByTen) {
  // Deviation of a 100-sample mean should be sigma / 10 per coordinate.
  const double sigma = 0.02;
  ManwaySensor sensor(sigma, 77);
  const auto truth = ManwayRect::from_center(Vec2::Zero(), 0.0, kLong, kShort).vertices;
  const PerceptionFrame frame;
  constexpr int kTrials = 400;
  double sum_sq = 0.0;
  int count = 0;
  for (int t = 0; t < kTrials; ++t) {
    const auto mean = average_vertices(sensor.burst(truth, frame, t, 100));
    for (std::size_t k = 0; k < 4; ++k) {
      for (int c = 0; c < 3; ++c) {
        sum_sq += std::pow(mean[k](c) - truth[k](c), 2);
        ++count;
      }
    }
  }
  const double sd = std::sqrt(sum_sq / count);
  // Sample sd of `count` normals has relative sd ~ 1/sqrt(2 count).
  const double band = 3.0 * (sigma / 10) / std::sqrt(2.0 * count);
  EXPECT_NEAR(sd, sigma / 10, band);
}

TEST(ValidateManwayTest, ExactRectangleAccepted) {
  const auto rect = ManwayRect::from_center(Vec2(0.02, -0.01), 0.0, kLong, kShort);
  const ManwayCheck c = validate_manway(rect.vertices, kLong, kShort);
  ASSERT_TRUE(c.accepted) << c.detail;
  EXPECT_NEAR(wrap_angle(c.rect->theta), 0.0, 1e-9);
  EXPECT_NEAR(c.rect->long_side, kLong, 1e-12);
  EXPECT_NEAR(c.rect->short_side, kShort, 1e-12);
  EXPECT_LE((c.rect->center - Vec2(0.02, -0.01)).norm(), 1e-12);
}

TEST(ValidateManwayTest, PerturbedVertexRejectedOnSides) {
  auto v = ManwayRect::from_center(Vec2::Zero(), 0.0, kLong, kShort).vertices;
  v[2] += Vec3(0.05, 0.0, 0.0);
  const ManwayCheck c = validate_manway(v, kLong, kShort);
  EXPECT_FALSE(c.accepted);
  EXPECT_EQ(c.failed, "side-length");
  EXPECT_FALSE(c.rect.has_value());
}

TEST(ValidateManwayTest, RecoversRandomRotation) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 100; ++trial) {
    const double theta = ang(rng);
    const auto rect = ManwayRect::from_center(Vec2(0.1, 0.05), theta, kLong, kShort, 0.4);
    // Start labeling at any corner.
    auto v = rect.vertices;
    std::rotate(v.begin(), v.begin() + trial % 4, v.end());
    const ManwayCheck c = validate_manway(v, kLong, kShort);
    ASSERT_TRUE(c.accepted) << c.detail;
    // A rectangle's long-side direction is defined modulo pi.
    const double diff = wrap_angle(2.0 * (c.rect->theta - theta)) / 2.0;
    EXPECT_NEAR(diff, 0.0, 1e-9) << "theta " << theta;
  }
}

TEST(ValidateManwayTest, SkewAndWarpRejected) {
  // Parallelogram with correct side lengths but a 10 degree shear.
  const double shear = 10.0 * std::numbers::pi / 180.0;
  const Vec3 u(kLong, 0, 0);
  const Vec3 w(kShort * std::sin(shear), kShort * std::cos(shear), 0);
  const std::array<Vec3, 4> skew = {Vec3::Zero(), u, u + w, w};
  EXPECT_EQ(validate_manway(skew, kLong, kShort).failed, "orthogonality");
  // Fold along the diagonal: lift two opposite corners 3 cm.
  auto warp = ManwayRect::from_center(Vec2::Zero(), 0.0, kLong, kShort).vertices;
  warp[0].z() += 0.03;
  warp[2].z() += 0.03;
  const ManwayCheck c = validate_manway(warp, kLong, kShort);
  EXPECT_EQ(c.failed, "coplanarity") << c.detail;
}

TEST(ValidateManwayTest, NoisyBurstAverageAcceptedAndInvariant) {
  ManwaySensor sensor(0.01, 5);
  const auto truth = ManwayRect::from_center(Vec2(0.0, 0.0), 1.5708, kLong, kShort, 0.0);
  const auto frame = PerceptionFrame::on_body(Vec3(0.0, 0.55, 0.33), -1.2);
  const auto mean = average_vertices(sensor.burst(truth.vertices, frame, 3, 100));
  const ManwayCheck c = validate_manway(mean, kLong, kShort);
  ASSERT_TRUE(c.accepted) << c.detail;
  EXPECT_LE(c.rect->center.norm(), 0.01);
  // Accepted rectangles satisfy the geometry-core rectangle checks.
  EXPECT_NO_THROW(ManwayRect::from_vertices(c.rect->vertices));
  EXPECT_GE(c.rect->long_side, c.rect->short_side);
}

TEST(MeasurementTest, JsonShape) {
  ManwaySensor sensor(0.0, 1);
  const auto truth = ManwayRect::from_center(Vec2::Zero(), 0.0, kLong, kShort).vertices;
  const auto j = sensor.measure(truth, PerceptionFrame{}, 12).to_json();
  EXPECT_EQ(j["tick"], 12);
  EXPECT_EQ(j["vertices_P"].size(), 4u);
  EXPECT_EQ(j["frame"]["R"].size(), 3u);
  EXPECT_EQ(j["frame"]["p"].size(), 3u);
}

}  // namespace
}  // namespace trayguard
