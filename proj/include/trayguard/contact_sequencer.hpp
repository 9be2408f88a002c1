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

// Contact-sequence planning for the motions between the walking posture and
// the transition-ready posture, plus joint-trajectory stitching and the
// CoM/support-polygon guard.
//
// Step j = 1..l carries one integer per limb. A nonzero integer means the
// limb sits at its target joints at step j; a zero integer keeps the limb
// where it was at step j - 1 (step 0 is the initial configuration).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trayguard/composite.hpp"
#include "trayguard/error.hpp"
#include "trayguard/miqp.hpp"
#include "trayguard/qp.hpp"

namespace trayguard {

using Pattern = std::array<int, kLimbCount>;

struct ContactSequenceProblem {
  int horizon = 6;
  VectorXd q_initial;
  VectorXd q_target;
  MatrixXd weight;  // PSD, n x n
  std::array<std::vector<int>, kLimbCount> admissible = {
      std::vector<int>{0, 2}, {0, 1}, {0, 1}, {0, 2}, {0, 2}};
  std::array<std::vector<int>, kLimbCount> limbs;  // joint indices per limb
  double regularization = 1e-6;

  Index dof() const { return q_initial.size(); }

  static ContactSequenceProblem standard(VectorXd q0, VectorXd qt,
                                         int horizon = 6) {
    ContactSequenceProblem p;
    p.horizon = horizon;
    p.weight = MatrixXd::Identity(q0.size(), q0.size());
    p.q_initial = std::move(q0);
    p.q_target = std::move(qt);
    for (int i = 0; i < kLimbCount; ++i) {
      p.limbs[static_cast<std::size_t>(i)] = limb_joints(i);
    }
    return p;
  }

  MatrixXd selection(int limb) const {
    const auto& joints = limbs[static_cast<std::size_t>(limb)];
    MatrixXd s = MatrixXd::Zero(static_cast<Index>(joints.size()), dof());
    for (std::size_t r = 0; r < joints.size(); ++r) {
      s(static_cast<Index>(r), joints[r]) = 1.0;
    }
    return s;
  }

  void validate() const {
    auto fail = [](const std::string& m) {
      throw Error(ErrorCode::kInvalidProblem, m);
    };
    if (horizon < 3) fail("horizon must be at least 3");
    const Index n = dof();
    if (n == 0 || q_target.size() != n) fail("configuration size mismatch");
    if (!q_initial.allFinite() || !q_target.allFinite()) {
      fail("non-finite configuration");
    }
    if (weight.rows() != n || weight.cols() != n) fail("weight size mismatch");
    if ((weight - weight.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      fail("weight is not symmetric");
    }
    if (n > 0 && Eigen::SelfAdjointEigenSolver<MatrixXd>(weight)
                         .eigenvalues()
                         .minCoeff() < -1e-12) {
      fail("weight is not PSD");
    }
    if (!(regularization > 0.0)) fail("regularization must be positive");
    std::vector<int> owner(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < kLimbCount; ++i) {
      const auto& set = admissible[static_cast<std::size_t>(i)];
      if (set.empty() || set.front() != 0 || !std::is_sorted(set.begin(), set.end())) {
        fail("admissible sets must be ascending and start at 0");
      }
      for (int j : limbs[static_cast<std::size_t>(i)]) {
        if (j < 0 || j >= n) fail("limb joint index out of range");
        if (owner[static_cast<std::size_t>(j)] != -1) fail("limb joints overlap");
        owner[static_cast<std::size_t>(j)] = i;
      }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
      fail("limb joints do not cover the configuration");
    }
  }
};

// Required integer sum at step j (1-based).
inline int step_sum(int step, int horizon) {
  return (step == 1 || step == horizon) ? 0 : 2;
}

inline double terminal_cost(const ContactSequenceProblem& p, const VectorXd& q) {
  const VectorXd e = p.q_target - q;
  return e.dot(p.weight * e);
}

struct ContactPlan {
  bool found = false;
  std::vector<Pattern> pattern;  // one per step
  std::vector<VectorXd> configs;  // q^(1..l)
  VectorXd q_initial;
  VectorXd q_target;
  double objective = kInf;  // terminal cost only
  double pin_residual = kInf;
  int nodes = 0;
  int qp_solves = 0;
  int rejected = 0;

  int horizon() const { return static_cast<int>(pattern.size()); }

  // q^(0), q^(1..l), q_t
  std::vector<VectorXd> knots() const {
    std::vector<VectorXd> k;
    k.push_back(q_initial);
    k.insert(k.end(), configs.begin(), configs.end());
    k.push_back(q_target);
    return k;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["found"] = found;
    j["pattern"] = pattern;
    nlohmann::json ks = nlohmann::json::array();
    for (const auto& q : knots()) {
      ks.push_back(std::vector<double>(q.data(), q.data() + q.size()));
    }
    j["knots"] = ks;
    j["objective"] = objective;
    j["pin_residual"] = pin_residual;
    j["nodes"] = nodes;
    j["qp_solves"] = qp_solves;
    j["rejected"] = rejected;
    return j;
  }
};

// Largest violation of the pin and hold equalities implied by `pattern`.
inline double pin_residual(const ContactSequenceProblem& p,
                           const std::vector<Pattern>& pattern,
                           const std::vector<VectorXd>& configs) {
  double worst = 0.0;
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    const VectorXd& prev = j == 0 ? p.q_initial : configs[j - 1];
    for (int i = 0; i < kLimbCount; ++i) {
      const VectorXd& ref = pattern[j][static_cast<std::size_t>(i)] != 0 ? p.q_target : prev;
      for (int k : p.limbs[static_cast<std::size_t>(i)]) {
        worst = std::max(worst, std::abs(configs[j](k) - ref(k)));
      }
    }
  }
  return worst;
}

// Integer-level checks (sums and admissible sets). Returns a reason on failure.
inline std::optional<std::string> check_pattern(const ContactSequenceProblem& p,
                                                const std::vector<Pattern>& pattern) {
  if (static_cast<int>(pattern.size()) != p.horizon) return "wrong horizon";
  for (int j = 0; j < p.horizon; ++j) {
    int sum = 0;
    for (int i = 0; i < kLimbCount; ++i) {
      const int c = pattern[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      const auto& set = p.admissible[static_cast<std::size_t>(i)];
      if (std::find(set.begin(), set.end(), c) == set.end()) {
        return "step " + std::to_string(j + 1) + ": inadmissible value";
      }
      sum += c;
    }
    if (sum != step_sum(j + 1, p.horizon)) {
      return "step " + std::to_string(j + 1) + ": wrong sum";
    }
  }
  return std::nullopt;
}

using PlanAcceptor = std::function<bool(const ContactPlan&)>;

namespace detail {

inline MiqpProblem build_contact_miqp(const ContactSequenceProblem& p) {
  const Index n = p.dof();
  const int l = p.horizon;
  const Index nv = n * l;
  MatrixXd H = 2.0 * p.regularization * MatrixXd::Identity(nv, nv);
  VectorXd g(nv);
  for (int j = 0; j < l; ++j) g.segment(j * n, n) = -2.0 * p.regularization * p.q_target;
  H.bottomRightCorner(n, n) += 2.0 * p.weight;
  g.tail(n) -= 2.0 * p.weight * p.q_target;

  MiqpProblem m;
  m.relaxation = QpProblem(std::move(H), std::move(g));
  m.relaxation.offset = p.q_target.dot(p.weight * p.q_target) +
                        p.regularization * l * p.q_target.squaredNorm();
  for (int j = 0; j < l; ++j) {
    IntegerEquality eq;
    for (int i = 0; i < kLimbCount; ++i) {
      std::vector<double> values;
      for (int v : p.admissible[static_cast<std::size_t>(i)]) values.push_back(v);
      m.integers.push_back({values});
      eq.terms.push_back({j * kLimbCount + i, 1.0});
    }
    eq.rhs = step_sum(j + 1, l);
    m.integer_equalities.push_back(std::move(eq));
  }
  m.coupling = [&p, n](PartialAssignment c) {
    std::vector<std::pair<Index, Index>> rows;  // (variable, previous or -1)
    std::vector<double> rhs;
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
      if (!c[idx]) continue;
      const Index j = static_cast<Index>(idx) / kLimbCount;
      const int i = static_cast<int>(idx % kLimbCount);
      for (int k : p.limbs[static_cast<std::size_t>(i)]) {
        if (*c[idx] != 0.0) {
          rows.push_back({j * n + k, -1});
          rhs.push_back(p.q_target(k));
        } else if (j == 0) {
          rows.push_back({k, -1});
          rhs.push_back(p.q_initial(k));
        } else {
          rows.push_back({j * n + k, (j - 1) * n + k});
          rhs.push_back(0.0);
        }
      }
    }
    LinearEqualities out;
    out.A = MatrixXd::Zero(static_cast<Index>(rows.size()), n * p.horizon);
    out.b = Eigen::Map<const VectorXd>(rhs.data(), static_cast<Index>(rhs.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.A(static_cast<Index>(r), rows[r].first) = 1.0;
      if (rows[r].second >= 0) out.A(static_cast<Index>(r), rows[r].second) = -1.0;
    }
    return out;
  };
  return m;
}

inline ContactPlan plan_from(const ContactSequenceProblem& p,
                             std::span<const double> assignment,
                             const VectorXd& x) {
  ContactPlan plan;
  plan.found = true;
  plan.q_initial = p.q_initial;
  plan.q_target = p.q_target;
  const Index n = p.dof();
  for (int j = 0; j < p.horizon; ++j) {
    Pattern c{};
    for (int i = 0; i < kLimbCount; ++i) {
      c[static_cast<std::size_t>(i)] = static_cast<int>(
          std::lround(assignment[static_cast<std::size_t>(j * kLimbCount + i)]));
    }
    plan.pattern.push_back(c);
    plan.configs.push_back(x.segment(j * n, n));
  }
  plan.objective = terminal_cost(p, plan.configs.back());
  plan.pin_residual = pin_residual(p, plan.pattern, plan.configs);
  return plan;
}

}  // namespace detail

// Minimizes the terminal weighted error over admissible patterns; ties go to
// the lexicographically smallest pattern (step-major, limb order wheel, FL,
// FR, BL, BR). `accept` may veto complete candidates; if every candidate is
// vetoed the returned plan has found == false.
inline ContactPlan plan_contacts(const ContactSequenceProblem& p,
                                 MiqpStrategy strategy = MiqpStrategy::kBranchAndBound,
                                 const PlanAcceptor& accept = nullptr) {
  p.validate();
  MiqpProblem m = detail::build_contact_miqp(p);
  if (accept) {
    m.accept = [&](std::span<const double> c, const QpSolution& s) {
      return accept(detail::plan_from(p, c, s.x));
    };
  }
  QpSettings settings;
  settings.tol = 1e-10;
  settings.max_iter = 20000;
  const MiqpResult r = solve_miqp(m, strategy, settings);
  ContactPlan plan;
  if (r.optimal()) {
    plan = detail::plan_from(p, r.assignment, r.solution.x);
  } else if (r.rejected == 0) {
    throw Error(ErrorCode::kInvalidProblem, "no pattern satisfies the step sums");
  }
  plan.q_initial = p.q_initial;
  plan.q_target = p.q_target;
  plan.nodes = r.nodes;
  plan.qp_solves = r.qp_solves;
  plan.rejected = r.rejected;
  return plan;
}

inline ContactSequenceProblem contact_problem_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return VectorXd(Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size())));
  };
  try {
    ContactSequenceProblem p = ContactSequenceProblem::standard(
        vec(j.at("q_initial")), vec(j.at("q_target")), j.value("horizon", 6));
    if (j.contains("weight_diagonal")) {
      const VectorXd d = vec(j.at("weight_diagonal"));
      if (d.size() != p.dof()) {
        throw Error(ErrorCode::kConfig, "weight_diagonal size mismatch");
      }
      p.weight = d.asDiagonal();
    }
    if (j.contains("limbs")) {
      for (int i = 0; i < kLimbCount; ++i) {
        p.limbs[static_cast<std::size_t>(i)] =
            j.at("limbs").at(static_cast<std::size_t>(i)).get<std::vector<int>>();
      }
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("contact problem: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Stitching

struct JointSample {
  VectorXd q;
  VectorXd qd;
};

// Cubic segments between knots with zero velocity at every knot.
class JointTrajectory {
 public:
  JointTrajectory(std::vector<VectorXd> knots, double segment_duration)
      : knots_(std::move(knots)), T_(segment_duration) {
    if (knots_.size() < 2) throw Error(ErrorCode::kStitch, "need two knots");
    if (!(T_ > 0.0)) throw Error(ErrorCode::kStitch, "segment duration must be positive");
  }

  int segments() const { return static_cast<int>(knots_.size()) - 1; }
  double segment_duration() const { return T_; }
  double duration() const { return T_ * segments(); }
  const std::vector<VectorXd>& knots() const { return knots_; }

  JointSample sample(double t) const {
    t = std::clamp(t, 0.0, duration());
    const int k = std::min(static_cast<int>(t / T_), segments() - 1);
    const double s = (t - k * T_) / T_;
    const VectorXd d = knots_[static_cast<std::size_t>(k) + 1] - knots_[static_cast<std::size_t>(k)];
    return {knots_[static_cast<std::size_t>(k)] + (3 * s * s - 2 * s * s * s) * d,
            (6 * s - 6 * s * s) / T_ * d};
  }

 private:
  std::vector<VectorXd> knots_;
  double T_;
};

// Knots q^(0), q^(1..l), q_t. Segment j runs from knot j to knot j + 1; limbs
// flagged at step j must stay at their target joints across segment j.
inline JointTrajectory stitch_trajectories(const ContactSequenceProblem& p,
                                           const ContactPlan& plan,
                                           double step_duration = 1.0,
                                           double tol = 1e-9) {
  if (!plan.found) throw Error(ErrorCode::kStitch, "plan not found");
  const auto knots = plan.knots();
  for (int j = 1; j <= plan.horizon(); ++j) {
    const auto& c = plan.pattern[static_cast<std::size_t>(j) - 1];
    for (int i = 0; i < kLimbCount; ++i) {
      if (c[static_cast<std::size_t>(i)] == 0) continue;
      for (int k : p.limbs[static_cast<std::size_t>(i)]) {
        const double a = knots[static_cast<std::size_t>(j)](k);
        const double b = knots[static_cast<std::size_t>(j) + 1](k);
        if (std::abs(a - b) > tol || std::abs(a - p.q_target(k)) > tol) {
          throw Error(ErrorCode::kStitch,
                      std::string("pinned joints of ") +
                          kLimbNames[static_cast<std::size_t>(i)] +
                          " move in segment " + std::to_string(j));
        }
      }
    }
  }
  return JointTrajectory(knots, step_duration);
}

// ---------------------------------------------------------------------------
// CoM guard

struct GuardSettings {
  double shrink = 0.02;
  int samples_per_segment = 25;
  double joint_tol = 1e-9;
  double ground_tol = 1e-6;
};

struct GuardReport {
  bool ok = true;
  double worst_clearance = kInf;
  int worst_segment = -1;
  double worst_time = 0.0;
  std::vector<std::array<bool, kLimbCount>> stance;  // per segment
};

// A limb is in stance across a segment when its joints do not change and its
// contact point is on the ground.
inline std::array<bool, kLimbCount> segment_stance(const QuadrupedArmKinematics& kin,
                                                   const VectorXd& a, const VectorXd& b,
                                                   const GuardSettings& s = {}) {
  std::array<bool, kLimbCount> stance{};
  const auto contacts = kin.contact_points(a);
  for (int i = 0; i < kLimbCount; ++i) {
    bool fixed = true;
    for (int k : limb_joints(i)) fixed = fixed && std::abs(a(k) - b(k)) <= s.joint_tol;
    stance[static_cast<std::size_t>(i)] =
        fixed && std::abs(contacts[static_cast<std::size_t>(i)].z()) <= s.ground_tol;
  }
  return stance;
}

inline GuardReport com_guard(const QuadrupedArmKinematics& kin,
                             const JointTrajectory& traj,
                             const GuardSettings& s = {}) {
  GuardReport r;
  const auto& knots = traj.knots();
  for (int seg = 0; seg < traj.segments(); ++seg) {
    const auto& a = knots[static_cast<std::size_t>(seg)];
    const auto stance = segment_stance(kin, a, knots[static_cast<std::size_t>(seg) + 1], s);
    r.stance.push_back(stance);
    std::vector<Vec2> pts;
    const auto contacts = kin.contact_points(a);
    for (int i = 0; i < kLimbCount; ++i) {
      if (stance[static_cast<std::size_t>(i)]) {
        pts.push_back(contacts[static_cast<std::size_t>(i)].head<2>());
      }
    }
    const auto hull = convex_hull(pts);
    for (int n = 0; n <= s.samples_per_segment; ++n) {
      const double t = traj.segment_duration() * (seg + static_cast<double>(n) / s.samples_per_segment);
      const Vec2 com = kin.com(traj.sample(t).q).head<2>();
      const double c = polygon_clearance(hull, com) - s.shrink;
      if (c < r.worst_clearance) {
        r.worst_clearance = c;
        r.worst_segment = seg;
        r.worst_time = t;
      }
    }
  }
  r.ok = r.worst_clearance >= 0.0;
  return r;
}

// Accept predicate for plan_contacts: stitched plan must pass the guard.
inline PlanAcceptor guarded_acceptor(const ContactSequenceProblem& p,
                                     const QuadrupedArmKinematics& kin,
                                     double step_duration = 1.0,
                                     GuardSettings s = {}) {
  return [&p, &kin, step_duration, s](const ContactPlan& plan) {
    try {
      return com_guard(kin, stitch_trajectories(p, plan, step_duration), s).ok;
    } catch (const Error&) {
      return false;
    }
  };
}

}  // namespace trayguard
