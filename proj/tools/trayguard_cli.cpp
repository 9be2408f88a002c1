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


// Command-line front end: run a mission, check a run directory, and solve
// standalone contact-sequence or QP problems.
//
// Exit codes: 0 ok / mission done, 1 bad input, 2 mission halted,
// 3 invariant violation or infeasible problem.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "trayguard/contact_sequencer.hpp"
#include "trayguard/qp.hpp"
#include "trayguard/sim.hpp"

namespace {

using namespace trayguard;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitHalted = 2;
constexpr int kExitViolation = 3;

struct RunArgs {
  std::string world;
  std::string mission;
  std::string sim;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string fault;
};

int cmd_run(const RunArgs& a) {
  SimInputs in = load_inputs(a.world, a.mission,
                             a.sim.empty() ? std::nullopt : std::optional(a.sim));
  if (a.seed) in.sim.seed = *a.seed;
  if (a.fault == "transition") {
    in.sim.fail_all_transitions = true;
  } else if (!a.fault.empty()) {
    const std::string prefix = "transition:";
    if (a.fault.rfind(prefix, 0) != 0) {
      throw Error(ErrorCode::kConfig, "unknown fault '" + a.fault + "'");
    }
    in.sim.fail_transition_layer = std::stoi(a.fault.substr(prefix.size()));
  }
  in.sim.validate();
  const RunResult r = run_mission(in);
  write_run(r, in.world, a.out);
  std::cout << r.summary.dump(2) << '\n';
  return r.done ? kExitOk : kExitHalted;
}

int cmd_check(const std::string& dir) {
  const InvariantReport rep = check_invariants(dir);
  for (const auto& v : rep.violations) std::cout << "violation: " << v << '\n';
  std::cout << (rep.ok ? "ok" : "FAILED") << ": " << rep.rows << " rows, "
            << rep.node_changes << " node changes, " << rep.footholds
            << " footholds, min h1/h2 (filter active) " << rep.min_h1_active << " / "
            << rep.min_h2_active << '\n';
  return rep.ok ? kExitOk : kExitViolation;
}

int cmd_plan(const std::string& path, const std::string& strategy, bool guard) {
  const auto problem = contact_problem_from_json(read_json_file(path));
  const auto s = strategy == "enumerate" ? MiqpStrategy::kEnumerate
                                         : MiqpStrategy::kBranchAndBound;
  PlanAcceptor accept;
  if (guard) accept = guarded_acceptor(problem, QuadrupedArmKinematics());
  const ContactPlan plan = plan_contacts(problem, s, accept);
  std::cout << plan.to_json().dump(2) << '\n';
  return plan.found ? kExitOk : kExitViolation;
}

int cmd_qp(const std::string& path, double tol) {
  const QpProblem p = qp_from_json(read_json_file(path));
  const QpSolution s = solve_qp(p, tol);
  std::cout << solution_to_json(s).dump(2) << '\n';
  return s.status == QpStatus::kOptimal ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tray inspection autonomy: simulation and solver tools"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a mission and write its trace");
  run_cmd->add_option("--world", run.world, "World JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--mission", run.mission, "Mission JSON")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--sim", run.sim, "Simulator JSON")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--seed", run.seed, "Override the RNG seed");
  run_cmd->add_option("--fault", run.fault,
                      "Inject a fault: 'transition' or 'transition:<layer>'");

  std::string trace_dir;
  auto* check_cmd = app.add_subcommand("check-invariants", "Re-check a run directory");
  check_cmd->add_option("--trace", trace_dir, "Run directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  std::string plan_path;
  std::string strategy = "bnb";
  bool guard = false;
  auto* plan_cmd = app.add_subcommand("plan-contacts", "Solve a contact-sequence problem");
  plan_cmd->add_option("--problem", plan_path, "Problem JSON")
      ->required()
      ->check(CLI::ExistingFile);
  plan_cmd->add_option("--strategy", strategy, "bnb or enumerate")
      ->check(CLI::IsMember({"bnb", "enumerate"}));
  plan_cmd->add_flag("--guard", guard, "Reject plans that fail the CoM guard");

  std::string qp_path;
  double tol = 1e-6;
  auto* qp_cmd = app.add_subcommand("solve-qp", "Solve a dense QP (debug)");
  qp_cmd->add_option("--problem", qp_path, "Problem JSON")->required()->check(CLI::ExistingFile);
  qp_cmd->add_option("--tol", tol, "Solver tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*check_cmd) return cmd_check(trace_dir);
    if (*plan_cmd) return cmd_plan(plan_path, strategy, guard);
    if (*qp_cmd) return cmd_qp(qp_path, tol);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
