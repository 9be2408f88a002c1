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

// Mission executive: a deterministic automaton over inspection, searching,
// manway approach, intermediate motions, and layer transitions. Halted and
// Done are absorbing.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trayguard/error.hpp"
#include "trayguard/footstep.hpp"
#include "trayguard/geometry.hpp"
#include "trayguard/perception.hpp"
#include "trayguard/safety_filter.hpp"

namespace trayguard {

enum class MissionNode {
  kSearching,
  kLocomotionInspect,
  kLocomotionToWaypoint,
  kLocomotionToManway,
  kPreMotion,
  kTransitionUp,
  kTransitionDown,
  kPostMotion,
  kLocomotionToSafe,
  kHalted,
  kDone,
};

inline constexpr std::array<MissionNode, 11> kAllNodes = {
    MissionNode::kSearching,         MissionNode::kLocomotionInspect,
    MissionNode::kLocomotionToWaypoint, MissionNode::kLocomotionToManway,
    MissionNode::kPreMotion,         MissionNode::kTransitionUp,
    MissionNode::kTransitionDown,    MissionNode::kPostMotion,
    MissionNode::kLocomotionToSafe,  MissionNode::kHalted,
    MissionNode::kDone};

inline std::string_view to_string(MissionNode n) {
  switch (n) {
    case MissionNode::kSearching: return "Searching";
    case MissionNode::kLocomotionInspect: return "LocomotionInspect";
    case MissionNode::kLocomotionToWaypoint: return "LocomotionToWaypoint";
    case MissionNode::kLocomotionToManway: return "LocomotionToManway";
    case MissionNode::kPreMotion: return "PreMotion";
    case MissionNode::kTransitionUp: return "TransitionUp";
    case MissionNode::kTransitionDown: return "TransitionDown";
    case MissionNode::kPostMotion: return "PostMotion";
    case MissionNode::kLocomotionToSafe: return "LocomotionToSafe";
    case MissionNode::kHalted: return "Halted";
    case MissionNode::kDone: return "Done";
  }
  return "?";
}

// Trace zone label for a node.
inline std::string_view zone(MissionNode n) {
  switch (n) {
    case MissionNode::kSearching: return "search";
    case MissionNode::kLocomotionInspect: return "inspect";
    case MissionNode::kLocomotionToWaypoint: return "waypoint";
    case MissionNode::kLocomotionToManway: return "manway";
    case MissionNode::kPreMotion:
    case MissionNode::kPostMotion: return "intermediate";
    case MissionNode::kTransitionUp:
    case MissionNode::kTransitionDown: return "transition";
    case MissionNode::kLocomotionToSafe: return "safe";
    case MissionNode::kHalted: return "halted";
    case MissionNode::kDone: return "done";
  }
  return "?";
}

inline bool filter_active(MissionNode n) {
  return n == MissionNode::kLocomotionInspect ||
         n == MissionNode::kLocomotionToWaypoint;
}

inline bool gait_active(MissionNode n) {
  return n == MissionNode::kSearching || n == MissionNode::kLocomotionInspect ||
         n == MissionNode::kLocomotionToWaypoint ||
         n == MissionNode::kLocomotionToManway ||
         n == MissionNode::kLocomotionToSafe;
}

inline bool is_absorbing(MissionNode n) {
  return n == MissionNode::kHalted || n == MissionNode::kDone;
}

// Edges of the task graph; any live node may also go to Halted.
inline bool is_graph_edge(MissionNode from, MissionNode to) {
  using N = MissionNode;
  if (is_absorbing(from)) return false;
  if (to == N::kHalted) return true;
  switch (from) {
    case N::kSearching:
      return to == N::kLocomotionInspect || to == N::kLocomotionToWaypoint ||
             to == N::kLocomotionToSafe;
    case N::kLocomotionInspect:
      return to == N::kLocomotionInspect || to == N::kSearching;
    case N::kLocomotionToWaypoint: return to == N::kLocomotionToManway;
    case N::kLocomotionToManway: return to == N::kPreMotion;
    case N::kPreMotion: return to == N::kTransitionUp || to == N::kTransitionDown;
    case N::kTransitionUp:
    case N::kTransitionDown: return to == N::kPostMotion;
    case N::kPostMotion:
      return to == N::kLocomotionToSafe || to == N::kLocomotionInspect;
    case N::kLocomotionToSafe: return to == N::kDone;
    default: return false;
  }
}

enum class TransitionDirection { kUp, kDown };

struct Pose2 {
  Vec2 position = Vec2::Zero();
  double yaw = 0.0;
};

struct LayerTransition {
  Vec2 waypoint = Vec2::Zero();
  Pose2 ready;    // transition-ready pose on the current layer
  Pose2 landing;  // base pose on the next layer after playback
  TransitionDirection direction = TransitionDirection::kDown;
  std::string trajectory;  // playback file, resolved by the simulator
};

// One stage per visited layer: inspect, then either change layer or finish.
struct MissionStage {
  std::vector<Vec2> goals;
  std::optional<LayerTransition> transition;
};

struct MissionConfig {
  int start_layer = 0;
  Pose2 start;
  std::vector<MissionStage> stages;
  Pose2 safe;
  double sweep_amplitude = 0.3;  // rad
  double sweep_period = 2.0;     // s
  double goal_tolerance = 0.05;  // m
  double yaw_tolerance = 0.05;   // rad, ready and landing poses
  double max_speed = 0.05;       // m/s per axis
  double node_timeout = 60.0;    // s
  int perception_samples = 100;
  // Searching requests a measurement burst after each full sweep.
  double perception_gate = 2.0;  // s since entry, repeated
  double manway_long = inches_to_meters(27.5);
  double manway_short = inches_to_meters(15.0);
  ManwayTolerances manway_tolerances;

  int final_layer() const {
    int layer = start_layer;
    for (const auto& s : stages) {
      if (s.transition) layer += s.transition->direction == TransitionDirection::kDown ? -1 : 1;
    }
    return layer;
  }

  // Throws kConfig. With `world`, goals must lie in the safe set of their
  // layer.
  void validate(const TrayWorld* world = nullptr) const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
    if (stages.empty()) fail("mission needs at least one stage");
    if (!(sweep_amplitude >= 0.0) || !(sweep_period > 0.0)) fail("bad sweep");
    if (!(goal_tolerance > 0.0) || !(yaw_tolerance > 0.0)) fail("bad tolerance");
    if (!(max_speed > 0.0) || !(node_timeout > 0.0)) fail("bad speed or timeout");
    if (perception_samples < 1 || !(perception_gate > 0.0)) fail("bad perception gate");
    for (std::size_t k = 0; k < stages.size(); ++k) {
      const bool last = k + 1 == stages.size();
      if (last == stages[k].transition.has_value()) {
        fail("every stage except the last must end with a layer transition");
      }
      if (k > 0 && !last && stages[k].goals.empty()) {
        fail("stages entered by a transition need goals before the next one");
      }
    }
    if (!world) return;
    int layer = start_layer;
    auto check = [&](const Vec2& p, int l, const std::string& what) {
      if (l < 0 || l >= world->layer_count) fail(what + ": layer out of range");
      if (h1(*world, l, p) < 0.0 || h2(*world, p) < 0.0) {
        fail(what + " outside the safe set of layer " + std::to_string(l));
      }
    };
    check(start.position, layer, "start");
    for (std::size_t k = 0; k < stages.size(); ++k) {
      for (const auto& g : stages[k].goals) check(g, layer, "goal");
      if (const auto& t = stages[k].transition) {
        check(t->waypoint, layer, "waypoint");
        layer += t->direction == TransitionDirection::kDown ? -1 : 1;
        check(t->landing.position, layer, "landing");
      }
    }
    check(safe.position, layer, "safe location");
  }
};

// Triangle wave: 0 at t = 0, +A at a quarter period, -A at three quarters.
inline double searching_command(double t, double amplitude = 0.3, double period = 2.0) {
  double s = std::fmod(t / period, 1.0);
  if (s < 0.0) s += 1.0;
  if (s < 0.25) return amplitude * 4.0 * s;
  if (s < 0.75) return amplitude * (2.0 - 4.0 * s);
  return amplitude * (4.0 * s - 4.0);
}

struct MissionState {
  MissionNode node = MissionNode::kSearching;
  int layer = 0;
  std::size_t stage = 0;
  std::deque<Vec2> goals;
  std::optional<Vec2> goal;  // current xi
  double yaw_goal = 0.0;
  double search_yaw = 0.0;  // sweep center
  double entry_time = 0.0;
  int perception_attempts = 0;
  bool filter = false;  // mirrors filter_active(node)
  std::string halt_reason;
};

struct Observations {
  double time = 0.0;
  BaseState base;
  std::optional<ManwayCheck> perception;
  std::optional<bool> transition_success;
  std::optional<bool> motion_done;   // pre/post-motion playback finished
  std::optional<bool> com_guard_ok;  // pre/post-motion plan verdict
  bool planner_stuck = false;
  bool filter_infeasible = false;
  bool controller_infeasible = false;
};

enum class Playback { kNone, kPreMotion, kTransition, kPostMotion };

struct Directives {
  bool filter = false;
  bool gait = false;
  Playback playback = Playback::kNone;
  std::optional<Vec2> goal;
  double yaw_reference = 0.0;
  bool request_perception = false;
  std::string_view zone;
};

struct NodeChange {
  MissionNode from;
  MissionNode to;
  std::string reason;
};

struct StepResult {
  MissionState state;
  Directives directives;
  std::optional<NodeChange> change;
};

class MissionMachine {
 public:
  explicit MissionMachine(MissionConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
  }

  const MissionConfig& config() const { return cfg_; }

  MissionState initial_state(double time = 0.0) const {
    MissionState s;
    s.layer = cfg_.start_layer;
    s.goals.assign(cfg_.stages.front().goals.begin(), cfg_.stages.front().goals.end());
    s.yaw_goal = cfg_.start.yaw;
    s.search_yaw = cfg_.start.yaw;
    s.entry_time = time;
    s.filter = filter_active(s.node);
    return s;
  }

  // Pure transition function.
  StepResult step(const MissionState& in, const Observations& obs) const {
    StepResult r{in, {}, std::nullopt};
    MissionState& s = r.state;
    auto go = [&](MissionNode to, std::string reason) {
      r.change = NodeChange{s.node, to, std::move(reason)};
      s.node = to;
      s.entry_time = obs.time;
      s.perception_attempts = 0;
      s.filter = filter_active(to);
    };
    auto halt = [&](std::string reason) {
      s.halt_reason = reason;
      go(MissionNode::kHalted, std::move(reason));
    };

    if (!is_absorbing(s.node)) {
      if (const auto why = unexpected(s.node, obs)) {
        halt(*why);
      } else if (obs.planner_stuck) {
        halt("planner-stuck");
      } else if (obs.filter_infeasible && s.filter) {
        halt("filter-infeasible");
      } else if (obs.controller_infeasible) {
        halt("controller-infeasible");
      } else if (obs.time - s.entry_time > cfg_.node_timeout) {
        halt("timeout in " + std::string(to_string(s.node)));
      } else {
        advance(s, obs, go, halt);
      }
    }
    r.directives = directives(s, obs);
    return r;
  }

 private:
  template <typename Go, typename Halt>
  void advance(MissionState& s, const Observations& obs, Go&& go, Halt&& halt) const {
    using N = MissionNode;
    const MissionStage& stage = cfg_.stages[s.stage];
    auto reached = [&](const Vec2& p) {
      return (obs.base.position - p).norm() <= cfg_.goal_tolerance;
    };
    auto aligned = [&](double yaw) {
      return std::abs(wrap_angle(obs.base.yaw - yaw)) <= cfg_.yaw_tolerance;
    };
    switch (s.node) {
      case N::kSearching: {
        if (!obs.perception) return;
        ++s.perception_attempts;
        if (!obs.perception->accepted) return;  // keep sweeping
        if (!s.goals.empty()) {
          s.goal = s.goals.front();
          go(N::kLocomotionInspect, "manway accepted, goals pending");
        } else if (stage.transition) {
          s.goal = stage.transition->waypoint;
          go(N::kLocomotionToWaypoint, "manway accepted, goals done");
        } else {
          s.goal = cfg_.safe.position;
          s.yaw_goal = cfg_.safe.yaw;
          go(N::kLocomotionToSafe, "manway accepted, mission goals done");
        }
        return;
      }
      case N::kLocomotionInspect:
        if (!s.goal || !reached(*s.goal)) return;
        s.goals.pop_front();
        if (!s.goals.empty()) {
          s.goal = s.goals.front();
          go(N::kLocomotionInspect, "goal reached");
        } else {
          s.goal.reset();
          s.search_yaw = obs.base.yaw;
          go(N::kSearching, "inspection goals done");
        }
        return;
      case N::kLocomotionToWaypoint:
        if (!reached(*s.goal)) return;
        s.goal = stage.transition->ready.position;
        s.yaw_goal = stage.transition->ready.yaw;
        go(N::kLocomotionToManway, "waypoint reached");
        return;
      case N::kLocomotionToManway:
        if (!reached(*s.goal) || !aligned(s.yaw_goal)) return;
        s.goal.reset();
        go(N::kPreMotion, "transition-ready pose reached");
        return;
      case N::kPreMotion:
        if (obs.com_guard_ok && !*obs.com_guard_ok) {
          halt("com-guard");
        } else if (obs.motion_done && *obs.motion_done) {
          go(stage.transition->direction == TransitionDirection::kDown
                 ? N::kTransitionDown
                 : N::kTransitionUp,
             "pre-motion complete");
        }
        return;
      case N::kTransitionUp:
      case N::kTransitionDown:
        if (!obs.transition_success) return;
        if (!*obs.transition_success) {
          halt("transition-failed");
          return;
        }
        s.layer += s.node == N::kTransitionDown ? -1 : 1;
        s.yaw_goal = stage.transition->landing.yaw;
        ++s.stage;
        s.goals.assign(cfg_.stages[s.stage].goals.begin(), cfg_.stages[s.stage].goals.end());
        go(N::kPostMotion, "transition complete");
        return;
      case N::kPostMotion:
        if (obs.com_guard_ok && !*obs.com_guard_ok) {
          halt("com-guard");
        } else if (obs.motion_done && *obs.motion_done) {
          if (!s.goals.empty()) {
            s.goal = s.goals.front();
            go(N::kLocomotionInspect, "post-motion complete, goals pending");
          } else {
            s.goal = cfg_.safe.position;
            s.yaw_goal = cfg_.safe.yaw;
            go(N::kLocomotionToSafe, "post-motion complete");
          }
        }
        return;
      case N::kLocomotionToSafe:
        if (reached(*s.goal)) go(N::kDone, "safe location reached");
        return;
      default:
        return;
    }
  }

  // Observations that cannot occur in the current node.
  static std::optional<std::string> unexpected(MissionNode n, const Observations& obs) {
    using N = MissionNode;
    const bool transition = n == N::kTransitionUp || n == N::kTransitionDown;
    const bool motion = n == N::kPreMotion || n == N::kPostMotion;
    if (obs.transition_success && !transition) return "unexpected transition outcome";
    if ((obs.motion_done || obs.com_guard_ok) && !motion) {
      return "unexpected intermediate-motion report";
    }
    if (obs.perception && n != N::kSearching) return "unexpected perception result";
    return std::nullopt;
  }

  Directives directives(const MissionState& s, const Observations& obs) const {
    using N = MissionNode;
    Directives d;
    d.filter = filter_active(s.node);
    d.gait = gait_active(s.node);
    d.goal = s.goal;
    d.zone = zone(s.node);
    d.yaw_reference = s.yaw_goal;
    switch (s.node) {
      case N::kSearching: {
        const double t = obs.time - s.entry_time;
        d.yaw_reference = s.search_yaw +
                          searching_command(t, cfg_.sweep_amplitude, cfg_.sweep_period);
        d.request_perception = t >= cfg_.perception_gate * (s.perception_attempts + 1);
        break;
      }
      case N::kPreMotion: d.playback = Playback::kPreMotion; break;
      case N::kTransitionUp:
      case N::kTransitionDown: d.playback = Playback::kTransition; break;
      case N::kPostMotion: d.playback = Playback::kPostMotion; break;
      default: break;
    }
    return d;
  }

  MissionConfig cfg_;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Pose2 pose_from_json(const nlohmann::json& j) {
  Pose2 p;
  p.position = vec2_from(j.at("position"));
  p.yaw = j.value("yaw", 0.0);
  return p;
}

}  // namespace detail

inline MissionConfig mission_from_json(const nlohmann::json& j) {
  try {
    MissionConfig c;
    c.start_layer = j.at("start_layer").get<int>();
    c.start = detail::pose_from_json(j.at("start"));
    c.safe = detail::pose_from_json(j.at("safe"));
    c.sweep_amplitude = j.value("sweep_amplitude", c.sweep_amplitude);
    c.sweep_period = j.value("sweep_period", c.sweep_period);
    c.goal_tolerance = j.value("goal_tolerance", c.goal_tolerance);
    c.yaw_tolerance = j.value("yaw_tolerance", c.yaw_tolerance);
    c.max_speed = j.value("max_speed", c.max_speed);
    c.node_timeout = j.value("node_timeout", c.node_timeout);
    c.perception_samples = j.value("perception_samples", c.perception_samples);
    c.perception_gate = j.value("perception_gate", c.sweep_period);
    for (const auto& sj : j.at("stages")) {
      MissionStage st;
      for (const auto& g : sj.value("goals", nlohmann::json::array())) {
        st.goals.push_back(detail::vec2_from(g));
      }
      if (sj.contains("transition")) {
        const auto& tj = sj.at("transition");
        LayerTransition t;
        t.waypoint = detail::vec2_from(tj.at("waypoint"));
        t.ready = detail::pose_from_json(tj.at("ready"));
        t.landing = detail::pose_from_json(tj.at("landing"));
        const std::string dir = tj.at("direction").get<std::string>();
        if (dir != "down" && dir != "up") {
          throw Error(ErrorCode::kConfig, "transition direction must be up or down");
        }
        t.direction = dir == "down" ? TransitionDirection::kDown : TransitionDirection::kUp;
        t.trajectory = tj.value("trajectory", std::string());
        st.transition = t;
      }
      c.stages.push_back(std::move(st));
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("mission: ") + e.what());
  }
}

}  // namespace trayguard
