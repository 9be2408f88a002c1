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

// Quasi-static crawl gait: one swing leg at a time in the fixed order
// FL -> BR -> FR -> BL. Each phase is a settle window (the body sways toward
// the upcoming stance triangle) followed by a swing window. Footholds come
// from a Raibert rule and are then pulled back inside the tray disk and
// pushed out of the buffered manway rectangle.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "trayguard/error.hpp"
#include "trayguard/geometry.hpp"

namespace trayguard {

enum class Leg { kFL = 0, kFR = 1, kBL = 2, kBR = 3 };

inline constexpr std::array<Leg, 4> kGaitOrder = {Leg::kFL, Leg::kBR, Leg::kFR,
                                                  Leg::kBL};

inline std::string_view to_string(Leg leg) {
  switch (leg) {
    case Leg::kFL: return "FL";
    case Leg::kFR: return "FR";
    case Leg::kBL: return "BL";
    case Leg::kBR: return "BR";
  }
  return "?";
}

inline std::size_t index(Leg leg) { return static_cast<std::size_t>(leg); }

struct GaitParams {
  double swing_time = 0.4;   // T_sw
  double settle_time = 0.1;
  double apex_height = 0.06;
  double raibert_gain = 0.3;  // k_rai, seconds
  double reach = 0.18;
  double shrink = 0.03;
  double max_sway = 0.1;
  // Footholds are planned against a disk and buffer tightened by this much,
  // so estimation error in the tray geometry does not push them out.
  double plan_margin = 0.005;
  // Nominal hip positions in the body frame, indexed by Leg.
  std::array<Vec2, 4> hip_offsets = {Vec2(0.16, 0.12), Vec2(0.16, -0.12),
                                     Vec2(-0.16, 0.12), Vec2(-0.16, -0.12)};

  void validate() const {
    if (!(swing_time > 0.0)) {
      throw Error(ErrorCode::kInvalidParameter, "swing time must be > 0");
    }
    if (!(settle_time >= 0.0) || !(apex_height >= 0.0) || !(reach > 0.0) ||
        !(shrink >= 0.0) || !(max_sway >= 0.0) || !(raibert_gain >= 0.0) ||
        !(plan_margin >= 0.0)) {
      throw Error(ErrorCode::kInvalidParameter, "invalid gait parameters");
    }
  }
};

inline Vec2 hip_projection(const BaseState& base, Leg leg,
                           const GaitParams& params) {
  return base.position + rotation2(base.yaw) * params.hip_offsets[index(leg)];
}

inline Vec2 raibert_target(const BaseState& base, const VelocityCommand& cmd,
                           Leg leg, const GaitParams& params) {
  return hip_projection(base, leg, params) + params.raibert_gain * cmd.linear;
}

inline Vec2 replan_edge(const TrayWorld& world, const Vec2& p) {
  const Vec2 d = p - world.tray_center;
  const double r = world.safe_radius();
  const double n = d.norm();
  if (n <= r) return p;
  return world.tray_center + (r / n) * d;
}

enum class ReplanReason { kNone, kManway, kEdge, kBoth };

inline std::string_view to_string(ReplanReason r) {
  switch (r) {
    case ReplanReason::kNone: return "none";
    case ReplanReason::kManway: return "manway";
    case ReplanReason::kEdge: return "edge";
    case ReplanReason::kBoth: return "both";
  }
  return "?";
}

struct FootTarget {
  Vec2 nominal = Vec2::Zero();    // p_s^g
  Vec2 replanned = Vec2::Zero();  // p_s^n
  ReplanReason reason = ReplanReason::kNone;
};

inline bool in_tray(const TrayWorld& world, const Vec2& p, double tol = 1e-9) {
  return (p - world.tray_center).norm() <= world.safe_radius() + tol;
}

// Foothold admissibility: inside the tray disk, not strictly inside the
// buffered manway rectangle.
inline bool foothold_safe(const TrayWorld& world, int layer, const Vec2& p) {
  return in_tray(world, p) &&
         !rect_strictly_contains(world.manway(layer), world.buffer_margin, p);
}

// Nearest point on the inflated manway boundary, tried side by side in order
// of distance; each candidate gets one edge pass and is kept if it is still a
// safe foothold.
inline Vec2 replan_manway(const TrayWorld& world, int layer, const Vec2& p) {
  const ManwayRect& m = world.manway(layer);
  const double margin = world.buffer_margin;
  if (!rect_strictly_contains(m, margin, p)) return p;
  const Vec2 l = m.to_local(p);
  const double hx = m.long_side / 2 + margin;
  const double hy = m.short_side / 2 + margin;
  std::array<std::pair<double, Vec2>, 4> sides = {
      std::pair{hx - l.x(), Vec2(hx, l.y())},
      std::pair{hx + l.x(), Vec2(-hx, l.y())},
      std::pair{hy - l.y(), Vec2(l.x(), hy)},
      std::pair{hy + l.y(), Vec2(l.x(), -hy)}};
  std::stable_sort(sides.begin(), sides.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [dist, local] : sides) {
    const Vec2 q = replan_edge(world, m.to_world(local));
    if (foothold_safe(world, layer, q)) return q;
  }
  throw Error(ErrorCode::kPlannerStuck,
              "no foothold outside the buffered manway inside the tray");
}

inline FootTarget plan_foothold(const TrayWorld& world, const BaseState& base,
                                const VelocityCommand& cmd, Leg leg,
                                const GaitParams& params) {
  FootTarget t;
  TrayWorld tight = world;
  tight.base_offset += params.plan_margin;
  tight.buffer_margin += params.plan_margin;
  t.nominal = raibert_target(base, cmd, leg, params);
  const Vec2 edge = replan_edge(tight, t.nominal);
  t.replanned = replan_manway(tight, base.layer, edge);
  const bool edge_moved = edge != t.nominal;
  const bool manway_moved = t.replanned != edge;
  t.reason = edge_moved && manway_moved ? ReplanReason::kBoth
             : manway_moved             ? ReplanReason::kManway
             : edge_moved               ? ReplanReason::kEdge
                                        : ReplanReason::kNone;
  return t;
}

struct SupportCheck {
  bool inside = false;
  bool degenerate = false;
  double clearance = 0.0;  // min signed distance to an edge, minus shrink
};

inline SupportCheck support_polygon_check(const std::array<Vec2, 3>& stance,
                                          const Vec2& com, double shrink) {
  SupportCheck out;
  const Vec2 e1 = stance[1] - stance[0];
  const Vec2 e2 = stance[2] - stance[0];
  const double cross = e1.x() * e2.y() - e1.y() * e2.x();
  const double scale = std::max(e1.squaredNorm(), e2.squaredNorm());
  if (std::abs(cross) <= 1e-12 * std::max(scale, 1e-300)) {
    out.degenerate = true;
    return out;
  }
  const double orient = cross > 0 ? 1.0 : -1.0;
  out.clearance = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 3; ++k) {
    const Vec2 a = stance[k];
    const Vec2 e = stance[(k + 1) % 3] - a;
    const Vec2 d = com - a;
    const double dist = orient * (e.x() * d.y() - e.y() * d.x()) / e.norm();
    out.clearance = std::min(out.clearance, dist - shrink);
  }
  out.inside = out.clearance >= 0.0;
  return out;
}

inline bool kinematic_feasible(const BaseState& base, Leg leg, const Vec2& p,
                               const GaitParams& params) {
  return (p - hip_projection(base, leg, params)).norm() <= params.reach;
}

namespace detail {
inline double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }
}  // namespace detail

inline Vec3 swing_trajectory(const Vec2& start, const Vec2& end, double apex,
                             double swing_time, double t) {
  if (!(swing_time > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "swing time must be > 0");
  }
  const double s = std::clamp(t / swing_time, 0.0, 1.0);
  const Vec2 xy = start + detail::smoothstep(s) * (end - start);
  const double z = s <= 0.5 ? apex * detail::smoothstep(2.0 * s)
                            : apex * (1.0 - detail::smoothstep(2.0 * s - 1.0));
  return Vec3(xy.x(), xy.y(), z);
}

struct FootEvent {
  enum class Kind { kLift, kLand, kHold };
  Kind kind = Kind::kLand;
  Leg leg = Leg::kFL;
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  FootTarget target;
  bool reachable = true;
  SupportCheck support;
};

inline std::string_view to_string(FootEvent::Kind k) {
  switch (k) {
    case FootEvent::Kind::kLift: return "lift";
    case FootEvent::Kind::kLand: return "land";
    case FootEvent::Kind::kHold: return "hold";
  }
  return "?";
}

class GaitScheduler {
 public:
  explicit GaitScheduler(GaitParams params = {}) : params_(std::move(params)) {
    params_.validate();
  }

  const GaitParams& params() const { return params_; }

  // Places all four feet at replanned zero-velocity footholds.
  std::vector<FootEvent> reset(const TrayWorld& world, const BaseState& base,
                               double time) {
    std::vector<FootEvent> events;
    for (Leg leg : {Leg::kFL, Leg::kFR, Leg::kBL, Leg::kBR}) {
      FootEvent e;
      e.kind = FootEvent::Kind::kLand;
      e.leg = leg;
      e.time = time;
      e.target = plan_foothold(world, base, VelocityCommand{}, leg, params_);
      e.position = e.target.replanned;
      e.reachable = kinematic_feasible(base, leg, e.position, params_);
      feet_[index(leg)] = e.position;
      events.push_back(e);
    }
    phase_ = 0;
    clock_ = 0.0;
    swinging_ = false;
    holding_ = false;
    sway_ = Vec2::Zero();
    sway_start_ = Vec2::Zero();
    history_.clear();
    return events;
  }

  // Advances the gait by dt. `base` is the pose at the end of the step.
  std::vector<FootEvent> step(const TrayWorld& world, const BaseState& base,
                              const VelocityCommand& cmd, double time,
                              double dt) {
    std::vector<FootEvent> events;
    clock_ += dt;
    const Leg leg = kGaitOrder[phase_];
    if (!swinging_) {
      const Vec2 goal = sway_goal(base);
      const double s = params_.settle_time > 0
                           ? std::min(1.0, clock_ / params_.settle_time)
                           : 1.0;
      sway_ = sway_start_ + s * (goal - sway_start_);
      if (clock_ + 1e-12 < params_.settle_time) return events;
      FootEvent e;
      e.leg = leg;
      e.time = time;
      e.support = support_polygon_check(stance(leg), com(base), params_.shrink);
      if (!e.support.inside) {
        e.kind = FootEvent::Kind::kHold;
        if (!holding_) events.push_back(e);
        holding_ = true;
        return events;
      }
      holding_ = false;
      e.kind = FootEvent::Kind::kLift;
      e.target = plan_foothold(world, base, cmd, leg, params_);
      e.position = feet_[index(leg)];
      e.reachable = kinematic_feasible(base, leg, e.target.replanned, params_);
      target_ = e.target;
      swing_start_ = feet_[index(leg)];
      swinging_ = true;
      clock_ = 0.0;
      history_.push_back(leg);
      events.push_back(e);
      return events;
    }
    if (clock_ + 1e-12 < params_.swing_time) return events;
    FootEvent e;
    e.kind = FootEvent::Kind::kLand;
    e.leg = leg;
    e.time = time;
    e.target = target_;
    e.position = target_.replanned;
    e.reachable = kinematic_feasible(base, leg, e.position, params_);
    feet_[index(leg)] = e.position;
    swinging_ = false;
    clock_ = 0.0;
    phase_ = (phase_ + 1) % kGaitOrder.size();
    sway_start_ = sway_;
    events.push_back(e);
    return events;
  }

  const std::array<Vec2, 4>& feet() const { return feet_; }
  Leg current_leg() const { return kGaitOrder[phase_]; }
  std::optional<Leg> swing_leg() const {
    if (!swinging_) return std::nullopt;
    return kGaitOrder[phase_];
  }
  const std::vector<Leg>& history() const { return history_; }
  bool holding() const { return holding_; }
  Vec2 sway() const { return sway_; }
  Vec2 com(const BaseState& base) const { return base.position + sway_; }

  Vec3 foot_position(Leg leg) const {
    if (swinging_ && leg == kGaitOrder[phase_]) {
      return swing_trajectory(swing_start_, target_.replanned,
                              params_.apex_height, params_.swing_time, clock_);
    }
    const Vec2& p = feet_[index(leg)];
    return Vec3(p.x(), p.y(), 0.0);
  }

  std::array<Vec2, 3> stance(Leg swing) const {
    std::array<Vec2, 3> out;
    std::size_t k = 0;
    for (Leg l : {Leg::kFL, Leg::kFR, Leg::kBL, Leg::kBR}) {
      if (l != swing) out[k++] = feet_[index(l)];
    }
    return out;
  }

 private:
  Vec2 sway_goal(const BaseState& base) const {
    // Incenter: the point with the largest clearance to every stance edge.
    const auto tri = stance(kGaitOrder[phase_]);
    const double la = (tri[1] - tri[2]).norm();
    const double lb = (tri[2] - tri[0]).norm();
    const double lc = (tri[0] - tri[1]).norm();
    const double perimeter = la + lb + lc;
    const Vec2 target = perimeter > 0
                            ? Vec2((la * tri[0] + lb * tri[1] + lc * tri[2]) /
                                   perimeter)
                            : tri[0];
    Vec2 d = target - base.position;
    const double n = d.norm();
    if (n > params_.max_sway) d *= params_.max_sway / n;
    return d;
  }

  GaitParams params_;
  std::array<Vec2, 4> feet_ = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero(),
                               Vec2::Zero()};
  std::size_t phase_ = 0;
  double clock_ = 0.0;
  bool swinging_ = false;
  bool holding_ = false;
  Vec2 sway_ = Vec2::Zero();
  Vec2 sway_start_ = Vec2::Zero();
  Vec2 swing_start_ = Vec2::Zero();
  FootTarget target_;
  std::vector<Leg> history_;
};

}  // namespace trayguard
