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

// Manway vertex sensing: a simulated sensor, the perception-to-global frame
// transform, burst averaging, and geometric validation of the result.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trayguard/error.hpp"
#include "trayguard/geometry.hpp"

namespace trayguard {

inline Mat3 rot_z(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
}
inline Mat3 rot_y(double a) {
  return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
}

// Pose of the perception frame in the global frame.
struct PerceptionFrame {
  Mat3 R = Mat3::Identity();  // R_{P|G}
  Vec3 p = Vec3::Zero();      // sensor origin, global

  void validate() const {
    if (!R.allFinite() || !p.allFinite()) {
      throw Error(ErrorCode::kInvalidParameter, "non-finite perception frame");
    }
    if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        R.determinant() <= 0.0) {
      throw Error(ErrorCode::kInvalidParameter, "R is not a rotation");
    }
  }

  Vec3 to_global(const Vec3& v) const { return R * v + p; }
  Vec3 to_local(const Vec3& v) const { return R.transpose() * (v - p); }

  // Sensor mounted on the body: `mount` is its offset in the yawed body
  // frame, tilted down by `pitch`.
  static PerceptionFrame on_body(const Vec3& body, double yaw,
                                 const Vec3& mount = Vec3(0.25, 0.0, 0.35),
                                 double pitch = 0.6) {
    PerceptionFrame f;
    f.R = rot_z(yaw) * rot_y(pitch);
    f.p = body + rot_z(yaw) * mount;
    return f;
  }
};

inline Vec3 to_global(const PerceptionFrame& frame, const Vec3& v) {
  return frame.to_global(v);
}

struct VertexMeasurement {
  std::array<Vec3, 4> vertices;  // perception frame
  PerceptionFrame frame;
  long tick = 0;

  std::array<Vec3, 4> global_vertices() const {
    std::array<Vec3, 4> out;
    for (std::size_t k = 0; k < 4; ++k) out[k] = frame.to_global(vertices[k]);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : vertices) verts.push_back({v.x(), v.y(), v.z()});
    nlohmann::json R = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) R.push_back({frame.R(i, 0), frame.R(i, 1), frame.R(i, 2)});
    return {{"tick", tick},
            {"vertices_P", verts},
            {"frame", {{"R", R}, {"p", {frame.p.x(), frame.p.y(), frame.p.z()}}}}};
  }
};

// Componentwise mean of the globally expressed vertices. Throws kNoData on
// an empty list.
inline std::array<Vec3, 4> average_vertices(std::span<const VertexMeasurement> samples) {
  if (samples.empty()) throw Error(ErrorCode::kNoData, "no vertex samples");
  std::array<Vec3, 4> sum;
  sum.fill(Vec3::Zero());
  for (const auto& s : samples) {
    const auto g = s.global_vertices();
    for (std::size_t k = 0; k < 4; ++k) sum[k] += g[k];
  }
  for (auto& v : sum) v /= static_cast<double>(samples.size());
  return sum;
}

// Seeded sensor: true vertices expressed in the perception frame plus iid
// Gaussian noise per coordinate.
class ManwaySensor {
 public:
  ManwaySensor(double sigma, std::uint64_t seed) : sigma_(sigma), rng_(seed) {
    if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "sigma must be >= 0");
  }

  double sigma() const { return sigma_; }

  VertexMeasurement measure(const std::array<Vec3, 4>& truth,
                            const PerceptionFrame& frame, long tick) {
    std::normal_distribution<double> noise(0.0, sigma_);
    VertexMeasurement m;
    m.frame = frame;
    m.tick = tick;
    for (std::size_t k = 0; k < 4; ++k) {
      m.vertices[k] = frame.to_local(truth[k]);
      if (sigma_ > 0.0) {
        for (int c = 0; c < 3; ++c) m.vertices[k](c) += noise(rng_);
      }
    }
    return m;
  }

  std::vector<VertexMeasurement> burst(const std::array<Vec3, 4>& truth,
                                       const PerceptionFrame& frame, long tick,
                                       int count) {
    if (count < 1) throw Error(ErrorCode::kInvalidParameter, "sample count must be >= 1");
    std::vector<VertexMeasurement> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(measure(truth, frame, tick));
    return out;
  }

 private:
  double sigma_;
  std::mt19937_64 rng_;
};

struct ManwayTolerances {
  double side = 0.02;         // m
  double angle_deg = 5.0;     // deviation from a right angle
  double coplanarity = 0.01;  // m
};

struct ManwayCheck {
  bool accepted = false;
  std::optional<ManwayRect> rect;
  std::string failed;  // "side-length", "orthogonality", "coplanarity"
  std::string detail;
  double side_error = 0.0;
  double angle_error_deg = 0.0;
  double plane_error = 0.0;
};

// Accepts four labeled vertices as the expected L_l x L_s rectangle. The
// centroid becomes the manway center (and the tray-center estimate).
inline ManwayCheck validate_manway(const std::array<Vec3, 4>& v, double long_side,
                                   double short_side,
                                   const ManwayTolerances& tol = {}) {
  ManwayCheck out;
  std::array<Vec3, 4> e;
  for (std::size_t k = 0; k < 4; ++k) e[k] = v[(k + 1) % 4] - v[k];

  // Edges 0 and 2 are either both long or both short.
  auto side_error = [&](double a, double b) {
    return std::max({std::abs(e[0].norm() - a), std::abs(e[2].norm() - a),
                     std::abs(e[1].norm() - b), std::abs(e[3].norm() - b)});
  };
  const double err_long_first = side_error(long_side, short_side);
  const double err_short_first = side_error(short_side, long_side);
  const bool long_first = err_long_first <= err_short_first;
  out.side_error = std::min(err_long_first, err_short_first);

  for (std::size_t k = 0; k < 4; ++k) {
    const Vec3& a = e[k];
    const Vec3& b = e[(k + 1) % 4];
    const double n = a.norm() * b.norm();
    const double c = n > 0.0 ? std::clamp(a.dot(b) / n, -1.0, 1.0) : 1.0;
    out.angle_error_deg = std::max(
        out.angle_error_deg, std::abs(std::acos(c) * 180.0 / std::numbers::pi - 90.0));
  }

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : v) centroid += p / 4.0;
  Eigen::Matrix<double, 3, 4> centered;
  for (std::size_t k = 0; k < 4; ++k) centered.col(static_cast<Eigen::Index>(k)) = v[k] - centroid;
  const Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(centered, Eigen::ComputeFullU);
  const Vec3 normal = svd.matrixU().col(2);
  for (const auto& p : v) {
    out.plane_error = std::max(out.plane_error, std::abs(normal.dot(p - centroid)));
  }

  if (out.side_error > tol.side) {
    out.failed = "side-length";
    out.detail = "side error " + std::to_string(out.side_error) + " m";
  } else if (out.angle_error_deg > tol.angle_deg) {
    out.failed = "orthogonality";
    out.detail = "corner off by " + std::to_string(out.angle_error_deg) + " deg";
  } else if (out.plane_error > tol.coplanarity) {
    out.failed = "coplanarity";
    out.detail = "vertex off plane by " + std::to_string(out.plane_error) + " m";
  }
  if (!out.failed.empty()) return out;

  // Opposite long edges point in opposite directions.
  const Vec3 dir = long_first ? Vec3(e[0] - e[2]) : Vec3(e[1] - e[3]);
  const double measured_long =
      long_first ? 0.5 * (e[0].norm() + e[2].norm()) : 0.5 * (e[1].norm() + e[3].norm());
  const double measured_short =
      long_first ? 0.5 * (e[1].norm() + e[3].norm()) : 0.5 * (e[0].norm() + e[2].norm());
  out.rect = ManwayRect::from_center(centroid.head<2>(), std::atan2(dir.y(), dir.x()),
                                     std::max(measured_long, measured_short),
                                     std::min(measured_long, measured_short),
                                     centroid.z());
  out.accepted = true;
  return out;
}

}  // namespace trayguard
