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

// Deterministic tick-loop simulator: base kinematics under filtered
// commands, gait execution, intermediate-motion planning and playback,
// scripted layer transitions, simulated perception, and telemetry.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "trayguard/body_controller.hpp"
#include "trayguard/composite.hpp"
#include "trayguard/contact_sequencer.hpp"
#include "trayguard/error.hpp"
#include "trayguard/footstep.hpp"
#include "trayguard/geometry.hpp"
#include "trayguard/io.hpp"
#include "trayguard/mission.hpp"
#include "trayguard/perception.hpp"
#include "trayguard/safety_filter.hpp"

namespace trayguard {

inline constexpr const char* kTraceHeader =
    "tick,node,layer,x,y,yaw,vx,vy,h1,h2,filter,fl_x,fl_y,fr_x,fr_y,bl_x,bl_y,"
    "br_x,br_y,swing,zone";

struct SimConfig {
  double dt = 0.01;
  long max_ticks = 20000;
  std::uint64_t seed = 7;
  double sigma = 0.01;  // perception noise, m
  bool base_lag = false;
  double lag_tau = 0.1;  // s
  double gamma = 1.0;    // class-K gain of both barriers
  double gain = 1.0;     // reference controller
  int contact_horizon = 6;
  double contact_step = 1.0;  // s per intermediate-motion segment
  double guard_shrink = 0.02;
  // Faults: fail the transition that leaves `fail_transition_layer`, or any
  // transition when `fail_all_transitions`.
  std::optional<int> fail_transition_layer;
  bool fail_all_transitions = false;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
    if (!(dt > 0.0)) fail("dt must be positive");
    if (max_ticks < 1) fail("max_ticks must be positive");
    if (!(sigma >= 0.0)) fail("sigma must be >= 0");
    if (!(lag_tau > 0.0)) fail("lag_tau must be positive");
    if (!(gamma > 0.0) || !(gain > 0.0)) fail("gains must be positive");
    if (contact_horizon < 3) fail("contact horizon must be >= 3");
    if (!(contact_step > 0.0)) fail("contact step must be positive");
  }
};

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  try {
    SimConfig c;
    c.dt = j.value("dt", c.dt);
    c.max_ticks = j.value("max_ticks", c.max_ticks);
    c.seed = j.value("seed", c.seed);
    c.sigma = j.value("sigma", c.sigma);
    c.base_lag = j.value("base_lag", c.base_lag);
    c.lag_tau = j.value("lag_tau", c.lag_tau);
    c.gamma = j.value("gamma", c.gamma);
    c.gain = j.value("gain", c.gain);
    c.contact_horizon = j.value("contact_horizon", c.contact_horizon);
    c.contact_step = j.value("contact_step", c.contact_step);
    c.guard_shrink = j.value("guard_shrink", c.guard_shrink);
    if (j.contains("faults")) {
      const auto& f = j.at("faults");
      if (f.contains("transition_failure_layer")) {
        c.fail_transition_layer = f.at("transition_failure_layer").get<int>();
      }
      c.fail_all_transitions = f.value("transition_failure", false);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("sim: ") + e.what());
  }
}

// phi += nu dt, optionally through a first-order lag on the velocity.
class BaseIntegrator {
 public:
  BaseIntegrator(bool lag = false, double tau = 0.1) : lag_(lag), tau_(tau) {}

  BaseState step(BaseState s, const VelocityCommand& cmd, double dt) {
    if (lag_) {
      velocity_ += (1.0 - std::exp(-dt / tau_)) * (cmd.linear - velocity_);
    } else {
      velocity_ = cmd.linear;
    }
    s.position += velocity_ * dt;
    s.yaw = wrap_angle(s.yaw + cmd.yaw_rate * dt);
    return s;
  }

  const Vec2& velocity() const { return velocity_; }

 private:
  bool lag_;
  double tau_;
  Vec2 velocity_ = Vec2::Zero();
};

inline BaseState integrate_base(const BaseState& s, const VelocityCommand& cmd, double dt) {
  return BaseIntegrator().step(s, cmd, dt);
}

// Transition playback from the transition-ready posture back to itself:
// the arm lowers the body through the opening. Used when a stage names no
// trajectory file.
inline TransitionTrajectory default_transition_trajectory(
    const QuadrupedArmKinematics& kin = QuadrupedArmKinematics()) {
  const VectorXd ready = kin.transition_ready_config();
  VectorXd lowered = ready;
  lowered(1) = -1.1;  // arm pitch
  lowered(2) = 0.25;  // extension
  lowered(3) = ready(3) + 0.4;
  for (int leg = 0; leg < 4; ++leg) {
    lowered(6 + 3 * leg) += 0.3;
    lowered(7 + 3 * leg) -= 0.5;
  }
  std::vector<TransitionTrajectory::Knot> knots;
  const VectorXd zero = VectorXd::Zero(ready.size());
  knots.push_back({0.0, ready, zero});
  knots.push_back({2.0, lowered, zero});
  knots.push_back({4.0, ready, zero});
  return TransitionTrajectory(std::move(knots));
}

inline nlohmann::json transition_to_json(const TransitionTrajectory& tr) {
  nlohmann::json knots = nlohmann::json::array();
  for (const auto& k : tr.knots()) {
    knots.push_back({{"t", k.t},
                     {"q", std::vector<double>(k.q.data(), k.q.data() + k.q.size())},
                     {"qd", std::vector<double>(k.qd.data(), k.qd.data() + k.qd.size())}});
  }
  return {{"knots", knots}};
}

struct SimInputs {
  TrayWorld world;
  MissionConfig mission;
  SimConfig sim;
  std::vector<TransitionTrajectory> transitions;  // one per stage with a transition
};

// Loads configs; transition trajectory paths are relative to the mission
// file. Throws before any tick on bad input.
inline SimInputs load_inputs(const std::string& world_path, const std::string& mission_path,
                             const std::optional<std::string>& sim_path) {
  SimInputs in;
  in.world = load_world(world_path);
  in.mission = mission_from_json(read_json_file(mission_path));
  in.sim = sim_path ? sim_config_from_json(read_json_file(*sim_path)) : SimConfig{};
  const auto dir = std::filesystem::path(mission_path).parent_path();
  for (const auto& st : in.mission.stages) {
    if (!st.transition) continue;
    if (st.transition->trajectory.empty()) {
      in.transitions.push_back(default_transition_trajectory());
    } else {
      in.transitions.push_back(TransitionTrajectory::from_json(
          read_json_file((dir / st.transition->trajectory).string())));
    }
  }
  return in;
}

inline SimInputs default_inputs(TrayWorld world, MissionConfig mission, SimConfig sim = {}) {
  SimInputs in{std::move(world), std::move(mission), sim, {}};
  for (const auto& st : in.mission.stages) {
    if (st.transition) in.transitions.push_back(default_transition_trajectory());
  }
  return in;
}

struct RunResult {
  bool done = false;
  MissionNode final_node = MissionNode::kSearching;
  std::string halt_reason;
  long ticks = 0;
  int start_layer = 0;
  int final_layer = 0;
  int layer_changes = 0;
  double min_h1_active = kInf;
  double min_h2_active = kInf;
  int footholds = 0;
  int unsafe_footholds = 0;
  int holds = 0;
  std::vector<std::string> node_path;
  std::string trace_csv;
  std::string events_jsonl;
  std::string perception_jsonl;
  nlohmann::json summary;

  std::string status() const { return done ? "done" : "halted"; }
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline nlohmann::json foot_event_json(long tick, int layer, const FootEvent& e) {
  return {{"tick", tick},
          {"type", "foot"},
          {"kind", std::string(to_string(e.kind))},
          {"leg", std::string(to_string(e.leg))},
          {"layer", layer},
          {"x", e.position.x()},
          {"y", e.position.y()},
          {"replan", std::string(to_string(e.target.reason))},
          {"reachable", e.reachable},
          {"clearance", std::isfinite(e.support.clearance) ? e.support.clearance : 0.0}};
}

}  // namespace detail

class Simulator {
 public:
  explicit Simulator(SimInputs in) : in_(std::move(in)) {
    in_.world.validate();
    in_.sim.validate();
    in_.mission.validate(&in_.world);
    std::size_t transitions = 0;
    for (const auto& st : in_.mission.stages) transitions += st.transition.has_value();
    if (in_.transitions.size() != transitions) {
      throw Error(ErrorCode::kConfig, "one transition trajectory per layer change");
    }
    const VectorXd ready = kin_.transition_ready_config();
    for (const auto& tr : in_.transitions) {
      if (tr.knots().front().q.size() != kCompositeDof ||
          (tr.knots().front().q - ready).cwiseAbs().maxCoeff() > 1e-6 ||
          (tr.knots().back().q - ready).cwiseAbs().maxCoeff() > 1e-6) {
        throw Error(ErrorCode::kConfig,
                    "transition trajectory must start and end at the transition-ready posture");
      }
    }
  }

  RunResult run() {
    const SimConfig& sc = in_.sim;
    const MissionConfig& mc = in_.mission;
    RunResult r;
    TrayWorld est = in_.world;  // what the stack believes
    const MissionMachine machine(mc);
    MissionState state = machine.initial_state(0.0);
    BaseState base;
    base.position = mc.start.position;
    base.yaw = mc.start.yaw;
    base.layer = mc.start_layer;
    r.start_layer = base.layer;
    BaseIntegrator integ(sc.base_lag, sc.lag_tau);
    GaitScheduler gait;
    ManwaySensor sensor(sc.sigma, sc.seed);
    SafetyFilter filter;
    ReducedModel model;
    model.nu_min = Vec2::Constant(-mc.max_speed);
    model.nu_max = Vec2::Constant(mc.max_speed);
    model.sample_period = sc.dt;

    std::ostringstream trace, events, perception;
    trace << kTraceHeader << '\n';
    auto emit = [&](const nlohmann::json& j) { events << j.dump() << '\n'; };
    auto log_feet = [&](long tick, const std::vector<FootEvent>& evs) {
      for (const auto& e : evs) {
        emit(detail::foot_event_json(tick, base.layer, e));
        if (e.kind == FootEvent::Kind::kLand) {
          ++r.footholds;
          if (!foothold_safe(in_.world, base.layer, e.position)) ++r.unsafe_footholds;
        } else if (e.kind == FootEvent::Kind::kHold) {
          ++r.holds;
        }
      }
    };
    log_feet(0, gait.reset(est, base, 0.0));
    r.node_path.emplace_back(to_string(state.node));

    Observations pending;
    // Playback bookkeeping for the current node.
    double node_start = 0.0;
    std::optional<ContactPlan> motion_plan;
    std::size_t transition_index = 0;
    Vec2 transition_from = Vec2::Zero();

    long tick = 0;
    for (; tick < sc.max_ticks; ++tick) {
      const double t = tick * sc.dt;
      Observations obs = pending;
      pending = Observations{};
      obs.time = t;
      obs.base = base;
      const StepResult step = machine.step(state, obs);
      state = step.state;
      const Directives& d = step.directives;
      if (step.change) {
        emit({{"tick", tick},
              {"type", "node"},
              {"from", std::string(to_string(step.change->from))},
              {"to", std::string(to_string(step.change->to))},
              {"reason", step.change->reason}});
        r.node_path.emplace_back(to_string(step.change->to));
        node_start = t;
        motion_plan.reset();
        transition_from = base.position;
      }

      VelocityCommand cmd;
      if (d.request_perception) {
        const auto frame = PerceptionFrame::on_body(
            Vec3(base.position.x(), base.position.y(), kin_.height()), base.yaw);
        const auto samples = sensor.burst(in_.world.manway(base.layer).vertices, frame,
                                          tick, mc.perception_samples);
        for (const auto& s : samples) perception << s.to_json().dump() << '\n';
        const ManwayCheck check = validate_manway(average_vertices(samples), mc.manway_long,
                                                  mc.manway_short, mc.manway_tolerances);
        nlohmann::json pj = {{"tick", tick}, {"type", "perception"},
                             {"layer", base.layer}, {"accepted", check.accepted},
                             {"failed", check.failed}};
        if (check.accepted) {
          est.manways[static_cast<std::size_t>(base.layer)] = *check.rect;
          est.tray_center = check.rect->center;
          pj["center"] = {check.rect->center.x(), check.rect->center.y()};
          pj["theta"] = check.rect->theta;
        }
        emit(pj);
        pending.perception = check;
      }

      if (d.gait) {
        if (d.goal) {
          const ReferenceController ref{*d.goal, Vec2::Constant(sc.gain)};
          if (d.filter) {
            const std::vector<BarrierSpec> barriers = {
                BarrierSpec::manway(est, base.layer, sc.gamma),
                BarrierSpec::tray(est, sc.gamma)};
            const FilterResult fr = filter.filter(model, barriers, ref, base.position);
            if (fr.diagnostics.status == FilterStatus::kInfeasible) {
              pending.filter_infeasible = true;
            }
            cmd.linear = fr.command.linear;
          } else {
            cmd.linear = model.clamp(ref.command(base.position));
          }
        }
        cmd.yaw_rate = heading_command(base.yaw, d.yaw_reference);
        base = integ.step(base, cmd, sc.dt);
        try {
          log_feet(tick, gait.step(est, base, cmd, t + sc.dt, sc.dt));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kPlannerStuck) throw;
          pending.planner_stuck = true;
          emit({{"tick", tick}, {"type", "planner"}, {"error", e.what()}});
        }
      } else {
        base = integ.step(base, VelocityCommand{}, sc.dt);
      }

      if (d.playback == Playback::kPreMotion || d.playback == Playback::kPostMotion) {
        const bool pre = d.playback == Playback::kPreMotion;
        if (!motion_plan) {
          motion_plan = plan_motion(pre);
          const auto& p = *motion_plan;
          emit({{"tick", tick},
                {"type", "contact-plan"},
                {"phase", pre ? "pre-motion" : "post-motion"},
                {"found", p.found},
                {"pattern", p.pattern},
                {"objective", p.objective},
                {"rejected", p.rejected}});
          if (!p.found) pending.com_guard_ok = false;
        }
        const double duration = sc.contact_step * (sc.contact_horizon + 1);
        if (motion_plan->found && t - node_start + 1e-9 >= duration) {
          pending.motion_done = true;
          pending.com_guard_ok = true;
        }
      } else if (d.playback == Playback::kTransition) {
        const auto& stage_tr = *mc.stages[state.stage].transition;
        const TransitionTrajectory& tr = in_.transitions[transition_index];
        const double s = std::min(1.0, (t - node_start) / tr.duration());
        base.position = transition_from + s * (stage_tr.landing.position - transition_from);
        if (s >= 1.0) {
          const bool fail = sc.fail_all_transitions ||
                            (sc.fail_transition_layer && *sc.fail_transition_layer == base.layer);
          pending.transition_success = !fail;
          emit({{"tick", tick}, {"type", "transition"}, {"success", !fail},
                {"from_layer", base.layer}});
          if (!fail) {
            base.position = stage_tr.landing.position;
            base.yaw = stage_tr.landing.yaw;
            base.layer += stage_tr.direction == TransitionDirection::kDown ? -1 : 1;
            ++r.layer_changes;
            ++transition_index;
            integ = BaseIntegrator(sc.base_lag, sc.lag_tau);
            log_feet(tick, gait.reset(est, base, t + sc.dt));
          }
        }
      }

      const double v1 = h1(est, base.layer, base.position);
      const double v2 = h2(est, base.position);
      if (d.filter) {
        r.min_h1_active = std::min(r.min_h1_active, v1);
        r.min_h2_active = std::min(r.min_h2_active, v2);
      }
      write_trace_row(trace, tick, state.node, base, integ.velocity(), v1, v2, d.filter,
                      gait, d.zone);
      if (is_absorbing(state.node)) {
        ++tick;
        break;
      }
    }

    r.ticks = tick;
    r.final_node = state.node;
    r.done = state.node == MissionNode::kDone;
    r.halt_reason = r.done ? "" : (state.node == MissionNode::kHalted ? state.halt_reason
                                                                      : "tick-limit");
    r.final_layer = base.layer;
    r.trace_csv = trace.str();
    r.events_jsonl = events.str();
    r.perception_jsonl = perception.str();
    r.summary = {{"status", r.status()},
                 {"final_node", std::string(to_string(r.final_node))},
                 {"halt_reason", r.halt_reason},
                 {"ticks", r.ticks},
                 {"dt", sc.dt},
                 {"seed", sc.seed},
                 {"start_layer", r.start_layer},
                 {"final_layer", r.final_layer},
                 {"layer_changes", r.layer_changes},
                 {"min_h1_active", r.min_h1_active},
                 {"min_h2_active", r.min_h2_active},
                 {"footholds", r.footholds},
                 {"unsafe_footholds", r.unsafe_footholds},
                 {"holds", r.holds},
                 {"node_path", r.node_path}};
    return r;
  }

 private:
  ContactPlan plan_motion(bool pre) const {
    const VectorXd walk = kin_.locomotion_config();
    const VectorXd ready = kin_.transition_ready_config();
    const auto problem = ContactSequenceProblem::standard(pre ? walk : ready,
                                                          pre ? ready : walk,
                                                          in_.sim.contact_horizon);
    GuardSettings gs;
    gs.shrink = in_.sim.guard_shrink;
    return plan_contacts(problem, MiqpStrategy::kBranchAndBound,
                         guarded_acceptor(problem, kin_, in_.sim.contact_step, gs));
  }

  static void write_trace_row(std::ostream& out, long tick, MissionNode node,
                              const BaseState& base, const Vec2& v, double v1, double v2,
                              bool filter, const GaitScheduler& gait, std::string_view zone) {
    using detail::fmt_num;
    out << tick << ',' << to_string(node) << ',' << base.layer << ','
        << fmt_num(base.position.x()) << ',' << fmt_num(base.position.y()) << ','
        << fmt_num(base.yaw) << ',' << fmt_num(v.x()) << ',' << fmt_num(v.y()) << ','
        << fmt_num(v1) << ',' << fmt_num(v2) << ',' << (filter ? 1 : 0);
    for (const auto& f : gait.feet()) out << ',' << fmt_num(f.x()) << ',' << fmt_num(f.y());
    const auto swing = gait.swing_leg();
    out << ',' << (swing ? std::string(to_string(*swing)) : "-") << ',' << zone << '\n';
  }

  SimInputs in_;
  QuadrupedArmKinematics kin_;
};

inline RunResult run_mission(const SimInputs& in) { return Simulator(in).run(); }

// Writes trace.csv, events.jsonl, perception.jsonl, summary.json and a copy
// of the world used.
inline void write_run(const RunResult& r, const TrayWorld& world, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + name);
    out << text;
  };
  put("trace.csv", r.trace_csv);
  put("events.jsonl", r.events_jsonl);
  put("perception.jsonl", r.perception_jsonl);
  put("summary.json", r.summary.dump(2) + "\n");
  put("world.json", world_to_json(world).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Trace checker

struct InvariantReport {
  bool ok = true;
  std::vector<std::string> violations;
  long rows = 0;
  int footholds = 0;
  int node_changes = 0;
  double min_h1_active = kInf;
  double min_h2_active = kInf;

  void fail(std::string what) {
    ok = false;
    if (violations.size() < 50) violations.push_back(std::move(what));
  }
};

inline std::optional<MissionNode> node_from_string(std::string_view name) {
  for (MissionNode n : kAllNodes) {
    if (to_string(n) == name) return n;
  }
  return std::nullopt;
}

// Re-checks a run directory written by write_run. Footholds are checked
// against the world.json stored with the run.
inline InvariantReport check_invariants(const std::string& dir) {
  namespace fs = std::filesystem;
  InvariantReport rep;
  const fs::path root(dir);
  std::ifstream trace(root / "trace.csv");
  if (!trace) throw Error(ErrorCode::kIo, "missing trace.csv in " + dir);
  const TrayWorld world = load_world((root / "world.json").string());

  std::string line;
  std::getline(trace, line);
  if (line != kTraceHeader) rep.fail("trace header mismatch");
  std::optional<MissionNode> last;
  std::vector<std::pair<long, MissionNode>> trace_changes;
  long expected_tick = 0;
  while (std::getline(trace, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    const std::string where = "tick " + std::to_string(expected_tick);
    if (f.size() != 21) {
      rep.fail(where + ": expected 21 fields");
      ++expected_tick;
      continue;
    }
    ++rep.rows;
    if (std::stol(f[0]) != expected_tick) rep.fail(where + ": tick out of sequence");
    expected_tick = std::stol(f[0]) + 1;
    const auto node = node_from_string(f[1]);
    if (!node) {
      rep.fail(where + ": unknown node " + f[1]);
      continue;
    }
    if (last && *last != *node) trace_changes.push_back({expected_tick - 1, *node});
    if (last && is_absorbing(*last) && *node != *last) {
      rep.fail(where + ": left absorbing node");
    }
    last = node;
    const bool filter = f[10] == "1";
    if (filter != filter_active(*node)) rep.fail(where + ": filter flag disagrees with node");
    if (f[20] != zone(*node)) rep.fail(where + ": zone disagrees with node");
    if (filter) {
      const double v1 = std::stod(f[8]);
      const double v2 = std::stod(f[9]);
      rep.min_h1_active = std::min(rep.min_h1_active, v1);
      rep.min_h2_active = std::min(rep.min_h2_active, v2);
      if (v1 < -1e-6) rep.fail(where + ": h1 = " + f[8] + " with filter active");
      if (v2 < -1e-6) rep.fail(where + ": h2 = " + f[9] + " with filter active");
    }
  }
  if (rep.rows == 0) rep.fail("empty trace");

  std::ifstream events(root / "events.jsonl");
  if (!events) throw Error(ErrorCode::kIo, "missing events.jsonl in " + dir);
  bool absorbed = false;
  std::size_t change_index = 0;
  while (std::getline(events, line)) {
    const auto e = nlohmann::json::parse(line);
    const std::string type = e.at("type");
    const std::string where = "event at tick " + std::to_string(e.at("tick").get<long>());
    if (type == "node") {
      ++rep.node_changes;
      const auto from = node_from_string(e.at("from").get<std::string>());
      const auto to = node_from_string(e.at("to").get<std::string>());
      if (!from || !to || !is_graph_edge(*from, *to)) {
        rep.fail(where + ": " + e.at("from").get<std::string>() + " -> " +
                 e.at("to").get<std::string>() + " is not a graph edge");
      }
      if (absorbed) rep.fail(where + ": node change after an absorbing node");
      absorbed = to && is_absorbing(*to);
      // Self edges do not show up as a change in the node column.
      if (from != to) {
        if (change_index >= trace_changes.size() ||
            trace_changes[change_index].first != e.at("tick").get<long>() ||
            trace_changes[change_index].second != *to) {
          rep.fail(where + ": node change not reflected in the trace");
        }
        ++change_index;
      }
    } else if (type == "foot" && e.at("kind") == "land") {
      ++rep.footholds;
      const Vec2 p(e.at("x").get<double>(), e.at("y").get<double>());
      if (!foothold_safe(world, e.at("layer").get<int>(), p)) {
        rep.fail(where + ": unsafe foothold (" + std::to_string(p.x()) + ", " +
                 std::to_string(p.y()) + ")");
      }
    }
  }
  if (change_index != trace_changes.size()) rep.fail("trace node changes missing from events");

  std::ifstream summary_file(root / "summary.json");
  if (summary_file) {
    const auto summary = nlohmann::json::parse(summary_file);
    const bool done = summary.at("status") == "done";
    if (last && done != (*last == MissionNode::kDone)) {
      rep.fail("summary status disagrees with the final node");
    }
  } else {
    rep.fail("missing summary.json");
  }
  return rep;
}

}  // namespace trayguard
