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

#pragma once

// Kinematic model of the quadruped with the roller arm, used for CoM and
// support-polygon checks during intermediate motions. The body is held level
// at standing height; ground is z = 0 under the body frame origin.
//
// Joint layout (17): arm [yaw, pitch1, extension, pitch2, wheel],
// then FL, FR, BL, BR legs [roll, hip pitch, knee].

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "trayguard/error.hpp"
#include "trayguard/geometry.hpp"

namespace trayguard {

inline constexpr int kLimbCount = 5;
inline constexpr int kCompositeDof = 17;

enum class Limb { kWheel = 0, kFL = 1, kFR = 2, kBL = 3, kBR = 4 };

inline constexpr std::array<const char*, kLimbCount> kLimbNames = {
    "wheel", "FL", "FR", "BL", "BR"};

// Joint indices of one limb in the 17-vector.
inline std::vector<int> limb_joints(int limb) {
  if (limb == 0) return {0, 1, 2, 3, 4};
  const int first = 5 + 3 * (limb - 1);
  return {first, first + 1, first + 2};
}

struct CompositeParams {
  double body_mass = 8.0;
  std::array<Vec2, 4> hips = {Vec2(0.16, 0.12), Vec2(0.16, -0.12),
                              Vec2(-0.16, 0.12), Vec2(-0.16, -0.12)};
  double thigh = 0.2;
  double shank = 0.2;
  double thigh_mass = 0.6;
  double shank_mass = 0.2;
  double stand_hip = 0.6;
  double stand_knee = -1.2;
  Vec3 arm_mount = Vec3(0.22, 0.0, 0.05);
  double arm_link1 = 0.3;  // plus the extension joint
  double arm_link2 = 0.2;
  double arm_link1_mass = 1.0;
  double arm_link2_mass = 0.4;
  double wheel_mass = 0.3;

  double standing_height() const {
    return -(-thigh * std::cos(stand_hip) - shank * std::cos(stand_hip + stand_knee));
  }
};

class QuadrupedArmKinematics {
 public:
  using Config = Eigen::Matrix<double, kCompositeDof, 1>;

  explicit QuadrupedArmKinematics(CompositeParams p = {})
      : p_(p), height_(p.standing_height()) {}

  const CompositeParams& params() const { return p_; }
  double height() const { return height_; }

  // Contact points in the ground frame: wheel, FL, FR, BL, BR.
  std::array<Vec3, kLimbCount> contact_points(const Config& q) const {
    std::array<Vec3, kLimbCount> out;
    out[0] = arm_points(q)[2];
    for (int leg = 0; leg < 4; ++leg) out[leg + 1] = leg_points(q, leg)[1];
    return out;
  }

  Vec3 com(const Config& q) const {
    double mass = p_.body_mass;
    Vec3 moment = p_.body_mass * Vec3(0.0, 0.0, height_);
    for (int leg = 0; leg < 4; ++leg) {
      const auto pts = leg_points(q, leg);
      const Vec3 hip = hip_position(leg);
      const Vec3 thigh_com = 0.5 * (hip + pts[0]);
      const Vec3 shank_com = 0.5 * (pts[0] + pts[1]);
      moment += p_.thigh_mass * thigh_com + p_.shank_mass * shank_com;
      mass += p_.thigh_mass + p_.shank_mass;
    }
    const auto arm = arm_points(q);
    const Vec3 base = arm_base();
    moment += p_.arm_link1_mass * 0.5 * (base + arm[1]) +
              p_.arm_link2_mass * 0.5 * (arm[1] + arm[2]) +
              p_.wheel_mass * arm[2];
    mass += p_.arm_link1_mass + p_.arm_link2_mass + p_.wheel_mass;
    return moment / mass;
  }

  // Nominal walking posture: feet under the hips, arm folded over the body.
  Config locomotion_config() const {
    Config q = Config::Zero();
    q.segment<5>(0) << 0.0, 2.7, 0.0, -2.5, 0.0;
    for (int leg = 0; leg < 4; ++leg) {
      q.segment<3>(5 + 3 * leg) << 0.0, p_.stand_hip, p_.stand_knee;
    }
    return q;
  }

  // Arm planted `extension` further out with the wheel on the ground, front
  // feet shifted by `front_shift` along x.
  Config transition_ready_config(double pitch1 = -0.6, double extension = 0.1,
                                 double front_shift = -0.05) const {
    Config q = locomotion_config();
    q.segment<5>(0) = arm_config_on_ground(pitch1, extension);
    for (int leg = 0; leg < 2; ++leg) {
      q.segment<3>(5 + 3 * leg) = leg_config_for_offset(front_shift);
    }
    return q;
  }

  // Arm joints with the wheel touching the ground (second pitch solved).
  Eigen::Matrix<double, 5, 1> arm_config_on_ground(double pitch1,
                                                   double extension) const {
    const double l1 = p_.arm_link1 + extension;
    const double z0 = height_ + p_.arm_mount.z();
    const double s = (-z0 - l1 * std::sin(pitch1)) / p_.arm_link2;
    if (std::abs(s) > 1.0) {
      throw Error(ErrorCode::kIkFailure, "arm cannot reach the ground");
    }
    Eigen::Matrix<double, 5, 1> a;
    a << 0.0, pitch1, extension, std::asin(s) - pitch1, 0.0;
    return a;
  }

  // Leg joints placing the foot `dx` ahead of the hip at ground level.
  Eigen::Vector3d leg_config_for_offset(double dx) const {
    const double r2 = dx * dx + height_ * height_;
    const double c = (r2 - p_.thigh * p_.thigh - p_.shank * p_.shank) /
                     (2 * p_.thigh * p_.shank);
    if (std::abs(c) > 1.0) {
      throw Error(ErrorCode::kIkFailure, "foot offset out of leg reach");
    }
    const double knee = -std::acos(c);
    // foot = -(thigh (sin a, cos a) + shank (sin(a+k), cos(a+k))) in (x, z)
    const double k1 = p_.thigh + p_.shank * std::cos(knee);
    const double k2 = p_.shank * std::sin(knee);
    const double hip = std::atan2(-dx, height_) - std::atan2(k2, k1);
    return Eigen::Vector3d(0.0, hip, knee);
  }

  Vec3 hip_position(int leg) const {
    return Vec3(p_.hips[static_cast<std::size_t>(leg)].x(),
                p_.hips[static_cast<std::size_t>(leg)].y(), height_);
  }

  Vec3 arm_base() const { return p_.arm_mount + Vec3(0.0, 0.0, height_); }

  // Knee and foot of one leg.
  std::array<Vec3, 2> leg_points(const Config& q, int leg) const {
    const double roll = q(5 + 3 * leg);
    const double a = q(6 + 3 * leg);
    const double b = q(7 + 3 * leg);
    auto place = [&](double x, double z) -> Vec3 {
      return hip_position(leg) +
             Vec3(x, -z * std::sin(roll), z * std::cos(roll));
    };
    const double kx = -p_.thigh * std::sin(a);
    const double kz = -p_.thigh * std::cos(a);
    const double fx = kx - p_.shank * std::sin(a + b);
    const double fz = kz - p_.shank * std::cos(a + b);
    return {place(kx, kz), place(fx, fz)};
  }

  // Arm base, elbow, wheel.
  std::array<Vec3, 3> arm_points(const Config& q) const {
    const double yaw = q(0);
    const double b1 = q(1);
    const double l1 = p_.arm_link1 + q(2);
    const double b2 = q(3);
    const Vec3 base = arm_base();
    auto dir = [&](double pitch) {
      return Vec3(std::cos(yaw) * std::cos(pitch), std::sin(yaw) * std::cos(pitch),
                  std::sin(pitch));
    };
    const Vec3 elbow = base + l1 * dir(b1);
    const Vec3 wheel = elbow + p_.arm_link2 * dir(b1 + b2);
    return {base, elbow, wheel};
  }

 private:
  CompositeParams p_;
  double height_;
};

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Smallest distance from p to a hull edge, positive inside; -inf for hulls
// with fewer than three vertices.
inline double polygon_clearance(const std::vector<Vec2>& hull, const Vec2& p) {
  if (hull.size() < 3) return -std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2 e = hull[(i + 1) % hull.size()] - a;
    const Vec2 d = p - a;
    best = std::min(best, (e.x() * d.y() - e.y() * d.x()) / e.norm());
  }
  return best;
}

}  // namespace trayguard
