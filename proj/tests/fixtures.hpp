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

#include <numbers>

#include "trayguard/geometry.hpp"
#include "trayguard/mission.hpp"

namespace trayguard::testing {

// Three identical trays: 35 in plate radius, 27.5 x 15 in manway at the tray
// center, long side along x.
inline TrayWorld reference_world() {
  TrayWorld w;
  w.plate_radius = inches_to_meters(35.0);
  w.layer_count = 3;
  w.manways.assign(3, ManwayRect::from_center(Vec2::Zero(), 0.0,
                                              inches_to_meters(27.5),
                                              inches_to_meters(15.0)));
  w.tray_center = Vec2::Zero();
  w.validate();
  return w;
}

// Reference trays with the middle manway turned a quarter turn, as in the
// bundled data/world.json.
inline TrayWorld mission_world() {
  TrayWorld w = reference_world();
  w.manways[1] = ManwayRect::from_center(Vec2::Zero(), std::numbers::pi / 2,
                                         inches_to_meters(27.5),
                                         inches_to_meters(15.0));
  w.validate();
  return w;
}

// Mirrors data/mission.json: inspect two goals on the top tray, go down one
// layer, walk to the safe location.
inline MissionConfig reference_mission() {
  MissionConfig c;
  c.start_layer = 2;
  c.start = {Vec2(-0.15, 0.57), 0.0};
  MissionStage top;
  top.goals = {Vec2(0.15, 0.57), Vec2(0.0, 0.58)};
  LayerTransition t;
  t.waypoint = Vec2(0.0, 0.56);
  t.ready = {Vec2(0.0, 0.45), -std::numbers::pi / 2};
  t.landing = {Vec2(0.57, 0.0), std::numbers::pi / 2};
  t.direction = TransitionDirection::kDown;
  t.trajectory = "transition_down.json";
  top.transition = t;
  c.stages = {top, MissionStage{}};
  c.safe = {Vec2(0.57, 0.08), std::numbers::pi / 2};
  return c;
}

}  // namespace trayguard::testing
