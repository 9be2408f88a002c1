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

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trayguard/error.hpp"
#include "trayguard/io.hpp"

namespace trayguard {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kMetersPerInch = 0.0254;

constexpr double inches_to_meters(double inches) {
  return inches * kMetersPerInch;
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (wrapped <= 0.0) wrapped += kTwoPi;
  return wrapped - std::numbers::pi;
}

inline Mat2 rotation2(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// Rectangular manway opening in a tray. Vertices are ordered around the
// rectangle; v1 -> v2 runs along the long side.
struct ManwayRect {
  std::array<Vec3, 4> vertices;
  double long_side = 0.0;   // L_l
  double short_side = 0.0;  // L_s
  Vec2 center = Vec2::Zero();
  double theta = 0.0;  // direction of the long side, (-pi, pi]

  static ManwayRect from_center(const Vec2& center, double theta,
                                double long_side, double short_side,
                                double height = 0.0) {
    if (!(short_side > 0.0) || long_side < short_side) {
      throw Error(ErrorCode::kInvalidGeometry,
                  "manway requires L_l >= L_s > 0");
    }
    ManwayRect rect;
    rect.long_side = long_side;
    rect.short_side = short_side;
    rect.center = center;
    rect.theta = wrap_angle(theta);
    const Mat2 rot = rotation2(rect.theta);
    const std::array<Vec2, 4> local = {
        Vec2(-long_side / 2, -short_side / 2), Vec2(long_side / 2, -short_side / 2),
        Vec2(long_side / 2, short_side / 2), Vec2(-long_side / 2, short_side / 2)};
    for (std::size_t k = 0; k < 4; ++k) {
      const Vec2 p = center + rot * local[k];
      rect.vertices[k] = Vec3(p.x(), p.y(), height);
    }
    return rect;
  }

  // Builds a manway from four measured vertices. Rejects anything that is not
  // a rectangle within `tol` (relative side mismatch and corner cosine).
  static ManwayRect from_vertices(const std::array<Vec3, 4>& v,
                                  double tol = 1e-6) {
    std::array<Vec2, 4> edges;
    for (std::size_t k = 0; k < 4; ++k) {
      edges[k] = (v[(k + 1) % 4] - v[k]).head<2>();
    }
    const double scale = std::max(edges[0].norm(), edges[1].norm());
    if (!(scale > 0.0)) {
      throw Error(ErrorCode::kInvalidGeometry, "manway vertices coincide");
    }
    if (std::abs(edges[0].norm() - edges[2].norm()) > tol * scale ||
        std::abs(edges[1].norm() - edges[3].norm()) > tol * scale) {
      throw Error(ErrorCode::kInvalidGeometry,
                  "manway opposite sides differ; only rectangles are supported");
    }
    for (std::size_t k = 0; k < 4; ++k) {
      const Vec2& a = edges[k];
      const Vec2& b = edges[(k + 1) % 4];
      if (std::abs(a.dot(b)) > tol * a.norm() * b.norm()) {
        throw Error(ErrorCode::kInvalidGeometry,
                    "manway corner is not square; only rectangles are supported");
      }
    }
    const bool first_long = edges[0].norm() >= edges[1].norm();
    const Vec2 long_dir = first_long ? edges[0] : edges[1];
    ManwayRect rect;
    rect.vertices = v;
    rect.long_side = first_long ? edges[0].norm() : edges[1].norm();
    rect.short_side = first_long ? edges[1].norm() : edges[0].norm();
    Vec3 mean = Vec3::Zero();
    for (const auto& p : v) mean += p / 4.0;
    rect.center = mean.head<2>();
    rect.theta = wrap_angle(std::atan2(long_dir.y(), long_dir.x()));
    return rect;
  }

  // Point expressed in the rectangle frame (x along the long side).
  Vec2 to_local(const Vec2& p) const {
    return rotation2(theta).transpose() * (p - center);
  }
  Vec2 to_world(const Vec2& local) const {
    return center + rotation2(theta) * local;
  }
};

// h1 coefficients: h1(p) = p^T A p + B p + c.
struct EllipseParams {
  Mat2 A = Mat2::Identity();
  Vec2 B = Vec2::Zero();  // stored as a column; used as a row vector
  double c = -1.0;

  double value(const Vec2& p) const { return p.dot(A * p) + B.dot(p) + c; }
  Vec2 gradient(const Vec2& p) const { return 2.0 * A * p + B; }
};

inline EllipseParams ellipse_params(const ManwayRect& manway, double pad_long,
                                    double pad_short) {
  const double a = manway.long_side + pad_long;
  const double b = manway.short_side + pad_short;
  if (!(manway.short_side > 0.0) || !(b > 0.0) || !(a > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry,
                "padded manway ellipse has a non-positive semi-axis");
  }
  const double ct = std::cos(manway.theta);
  const double st = std::sin(manway.theta);
  const double ia2 = 1.0 / (a * a);
  const double ib2 = 1.0 / (b * b);
  EllipseParams e;
  e.A(0, 0) = ct * ct * ia2 + st * st * ib2;
  e.A(0, 1) = (ia2 - ib2) * ct * st;
  e.A(1, 0) = e.A(0, 1);
  e.A(1, 1) = st * st * ia2 + ct * ct * ib2;
  e.B = -2.0 * (e.A * manway.center);  // -2 c^T A, A symmetric
  e.c = manway.center.dot(e.A * manway.center) - 1.0;
  return e;
}

// True iff p lies in the manway rectangle grown by `margin` on every side.
// The boundary counts as inside (within `tol`).
inline bool rect_contains(const ManwayRect& manway, double margin,
                          const Vec2& p, double tol = 1e-12) {
  const Vec2 local = manway.to_local(p);
  return std::abs(local.x()) <= manway.long_side / 2 + margin + tol &&
         std::abs(local.y()) <= manway.short_side / 2 + margin + tol;
}

// Strict interior test; points on (or within `tol` of) the boundary are
// outside. Footholds must fail this test.
inline bool rect_strictly_contains(const ManwayRect& manway, double margin,
                                   const Vec2& p, double tol = 1e-9) {
  const Vec2 local = manway.to_local(p);
  return std::abs(local.x()) < manway.long_side / 2 + margin - tol &&
         std::abs(local.y()) < manway.short_side / 2 + margin - tol;
}

struct TrayWorld {
  double plate_radius = inches_to_meters(35.0);  // r_p
  double base_offset = 0.25;                     // epsilon in h2
  int layer_count = 3;
  double layer_gap = inches_to_meters(22.0);
  std::vector<ManwayRect> manways;  // one per layer
  Vec2 tray_center = Vec2::Zero();
  double pad_long = 0.15;
  double pad_short = 0.15;
  double buffer_margin = 0.05;

  double safe_radius() const { return plate_radius - base_offset; }

  const ManwayRect& manway(int layer) const {
    if (layer < 0 || layer >= static_cast<int>(manways.size())) {
      throw Error(ErrorCode::kInvalidParameter,
                  "layer index out of range: " + std::to_string(layer));
    }
    return manways[static_cast<std::size_t>(layer)];
  }

  EllipseParams ellipse(int layer) const {
    const auto& m = manway(layer);
    return ellipse_params(m, pad_long, pad_short);
  }

  // Throws kInvalidGeometry when the world violates its invariants.
  void validate() const {
    if (!(safe_radius() > 0.0)) {
      throw Error(ErrorCode::kInvalidGeometry, "r_p - epsilon must be positive");
    }
    if (!(layer_gap > 0.0)) {
      throw Error(ErrorCode::kInvalidGeometry, "layer gap must be positive");
    }
    if (!(buffer_margin >= 0.0)) {
      throw Error(ErrorCode::kInvalidGeometry, "buffer margin must be >= 0");
    }
    if (layer_count < 1 || static_cast<int>(manways.size()) != layer_count) {
      throw Error(ErrorCode::kInvalidGeometry,
                  "one manway per layer is required");
    }
    for (int layer = 0; layer < layer_count; ++layer) {
      const auto& m = manway(layer);
      const double a = m.long_side + pad_long;
      const double b = m.short_side + pad_short;
      if (!(a >= b && b > 0.0)) {
        throw Error(ErrorCode::kInvalidGeometry,
                    "padded ellipse needs a >= b > 0 on layer " +
                        std::to_string(layer));
      }
      if (!safe_set_nonempty(layer)) {
        throw Error(ErrorCode::kInvalidGeometry,
                    "padded ellipse covers the whole tray disk on layer " +
                        std::to_string(layer));
      }
    }
  }

  // The safe set {h1 >= 0, h2 >= 0} is non-empty iff some point of the disk
  // lies outside the ellipse; h1 is convex, so its maximum over the disk is
  // attained on the boundary circle.
  bool safe_set_nonempty(int layer) const {
    const EllipseParams e = ellipse(layer);
    constexpr int kSamples = 3600;
    const double r = safe_radius();
    for (int k = 0; k < kSamples; ++k) {
      const double ang = 2.0 * std::numbers::pi * k / kSamples;
      const Vec2 p = tray_center + r * Vec2(std::cos(ang), std::sin(ang));
      if (e.value(p) > 0.0) return true;
    }
    return false;
  }
};

struct BaseState {
  Vec2 position = Vec2::Zero();  // phi
  double yaw = 0.0;
  int layer = 0;
};

struct VelocityCommand {
  Vec2 linear = Vec2::Zero();  // nu
  double yaw_rate = 0.0;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j,
                                     const std::string& key) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kConfig, "missing key '" + key + "'");
  }
  return j.at(key);
}

// Reads a length stored either as `<stem>_m` (meters) or `<stem>_in`
// (inches). Inches are converted here and nowhere else.
inline std::optional<double> length_field(const nlohmann::json& j,
                                          const std::string& stem) {
  if (j.contains(stem + "_m")) return j.at(stem + "_m").get<double>();
  if (j.contains(stem + "_in")) {
    return inches_to_meters(j.at(stem + "_in").get<double>());
  }
  if (j.contains(stem)) return j.at(stem).get<double>();
  return std::nullopt;
}

inline double require_length(const nlohmann::json& j, const std::string& stem) {
  auto v = length_field(j, stem);
  if (!v) throw Error(ErrorCode::kConfig, "missing length '" + stem + "_m'");
  return *v;
}

inline Vec2 vec2_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorCode::kConfig, "expected a 2-element array");
  }
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

inline ManwayRect manway_from_json(const nlohmann::json& j) {
  if (j.contains("vertices")) {
    const auto& vj = j.at("vertices");
    if (!vj.is_array() || vj.size() != 4) {
      throw Error(ErrorCode::kInvalidGeometry,
                  "manway must have exactly four vertices");
    }
    std::array<Vec3, 4> v;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& p = vj[k];
      v[k] = Vec3(p.at(0).get<double>(), p.at(1).get<double>(),
                  p.size() > 2 ? p.at(2).get<double>() : 0.0);
    }
    return ManwayRect::from_vertices(v);
  }
  const Vec2 center = vec2_from(require(j, "center"));
  const double theta = j.value("theta", 0.0);
  return ManwayRect::from_center(center, theta, require_length(j, "L_l"),
                                 require_length(j, "L_s"));
}

}  // namespace detail

inline TrayWorld world_from_json(const nlohmann::json& j) {
  TrayWorld w;
  w.plate_radius = detail::require_length(j, "tray_radius");
  w.layer_gap = detail::require_length(j, "layer_gap");
  w.layer_count = detail::require(j, "layers").get<int>();
  if (auto v = detail::length_field(j, "epsilon")) w.base_offset = *v;
  if (auto v = detail::length_field(j, "pad_l")) w.pad_long = *v;
  if (auto v = detail::length_field(j, "pad_s")) w.pad_short = *v;
  if (auto v = detail::length_field(j, "buffer_margin")) w.buffer_margin = *v;
  if (j.contains("manways")) {
    for (const auto& mj : j.at("manways")) {
      w.manways.push_back(detail::manway_from_json(mj));
    }
  } else {
    const ManwayRect m = detail::manway_from_json(detail::require(j, "manway"));
    w.manways.assign(static_cast<std::size_t>(std::max(w.layer_count, 0)), m);
  }
  w.tray_center = j.contains("tray_center")
                      ? detail::vec2_from(j.at("tray_center"))
                      : w.manways.empty() ? Vec2::Zero()
                                          : w.manways.front().center;
  w.validate();
  return w;
}

inline nlohmann::json manway_to_json(const ManwayRect& m) {
  return {{"center", {m.center.x(), m.center.y()}},
          {"theta", m.theta},
          {"L_l_m", m.long_side},
          {"L_s_m", m.short_side}};
}

inline nlohmann::json world_to_json(const TrayWorld& w) {
  nlohmann::json manways = nlohmann::json::array();
  for (const auto& m : w.manways) manways.push_back(manway_to_json(m));
  return {{"tray_radius_m", w.plate_radius},
          {"layer_gap_m", w.layer_gap},
          {"layers", w.layer_count},
          {"manways", manways},
          {"tray_center", {w.tray_center.x(), w.tray_center.y()}},
          {"epsilon_m", w.base_offset},
          {"pad_l_m", w.pad_long},
          {"pad_s_m", w.pad_short},
          {"buffer_margin_m", w.buffer_margin}};
}

inline TrayWorld load_world(const std::string& path) {
  try {
    return world_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
}

}  // namespace trayguard
