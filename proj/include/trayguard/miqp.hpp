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

// Branch-and-bound driver for QPs with a handful of finite-valued integer
// variables. The integer variables never appear in the QP itself: a fixed
// (possibly partial) assignment is mapped by a coupling rule to extra linear
// equalities on the continuous variables. Integer-only linear equalities
// (e.g. "sum of contact flags = 2") are checked combinatorially.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "trayguard/error.hpp"
#include "trayguard/qp.hpp"

namespace trayguard {

struct IntegerVariable {
  std::vector<double> admissible;  // ascending
};

// sum_k coef_k * c[index_k] == rhs
struct IntegerEquality {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

struct LinearEqualities {
  MatrixXd A;
  VectorXd b;
};

using PartialAssignment = std::span<const std::optional<double>>;

struct MiqpProblem {
  QpProblem relaxation;
  std::vector<IntegerVariable> integers;
  std::vector<IntegerEquality> integer_equalities;
  // Equalities implied by the assigned entries; unassigned entries are
  // nullopt. Assigning more entries may only add rows, so the QP over a
  // partial assignment is a valid lower bound.
  std::function<LinearEqualities(PartialAssignment)> coupling;
  // Optional lazy test on complete candidates; rejected leaves are skipped
  // and the search continues. Bounds stay valid because only leaves drop.
  std::function<bool(std::span<const double>, const QpSolution&)> accept;

  void validate() const {
    if (integers.size() > 64) {
      throw Error(ErrorCode::kInvalidProblem, "at most 64 integer variables");
    }
    for (const auto& v : integers) {
      if (v.admissible.empty()) {
        throw Error(ErrorCode::kInvalidProblem, "empty admissible value list");
      }
      if (!std::is_sorted(v.admissible.begin(), v.admissible.end())) {
        throw Error(ErrorCode::kInvalidProblem,
                    "admissible values must be ascending");
      }
    }
    for (const auto& eq : integer_equalities) {
      for (const auto& [idx, coef] : eq.terms) {
        if (idx < 0 || idx >= static_cast<int>(integers.size())) {
          throw Error(ErrorCode::kInvalidProblem, "integer index out of range");
        }
      }
    }
    if (!coupling) throw Error(ErrorCode::kInvalidProblem, "missing coupling");
  }
};

enum class MiqpStrategy { kBranchAndBound, kEnumerate };

struct MiqpResult {
  QpStatus status = QpStatus::kPrimalInfeasible;
  std::vector<double> assignment;
  QpSolution solution;
  int nodes = 0;
  int qp_solves = 0;
  int rejected = 0;  // leaves refused by MiqpProblem::accept

  bool optimal() const { return status == QpStatus::kOptimal; }
};

namespace detail {

class MiqpSearch {
 public:
  MiqpSearch(const MiqpProblem& p, MiqpStrategy strategy, QpSettings settings)
      : p_(p),
        strategy_(strategy),
        solver_(std::move(settings)),
        partial_(p.integers.size()) {}

  MiqpResult run() {
    visit(0);
    result_.status = found_ ? QpStatus::kOptimal : QpStatus::kPrimalInfeasible;
    return result_;
  }

 private:
  // Can the integer equalities still be met given the assigned entries?
  bool completable() const {
    for (const auto& eq : p_.integer_equalities) {
      double lo = 0.0;
      double hi = 0.0;
      for (const auto& [idx, coef] : eq.terms) {
        const auto& slot = partial_[static_cast<std::size_t>(idx)];
        if (slot) {
          lo += coef * *slot;
          hi += coef * *slot;
        } else {
          const auto& vals = p_.integers[static_cast<std::size_t>(idx)].admissible;
          const double a = coef * vals.front();
          const double b = coef * vals.back();
          lo += std::min(a, b);
          hi += std::max(a, b);
        }
      }
      if (eq.rhs < lo - 1e-9 || eq.rhs > hi + 1e-9) return false;
    }
    return true;
  }

  std::optional<QpSolution> relax() {
    QpProblem qp = p_.relaxation;
    const LinearEqualities extra = p_.coupling(partial_);
    if (extra.A.rows() > 0) qp.add_equalities(extra.A, extra.b);
    ++result_.qp_solves;
    QpSolution s = solver_.solve(qp);
    if (!s.optimal()) return std::nullopt;
    return s;
  }

  static double tie_tolerance(double objective) {
    return 1e-9 * (1.0 + std::abs(objective));
  }

  void visit(std::size_t depth) {
    ++result_.nodes;
    if (!completable()) return;
    const bool leaf = depth == partial_.size();
    std::optional<QpSolution> bound;
    if (strategy_ == MiqpStrategy::kBranchAndBound || leaf) {
      bound = relax();
      if (!bound) return;
      if (found_ &&
          bound->objective >= best_ - tie_tolerance(best_)) {
        return;  // cannot strictly improve on an earlier (smaller) assignment
      }
    }
    if (leaf) {
      std::vector<double> assignment;
      for (const auto& v : partial_) assignment.push_back(*v);
      if (p_.accept && !p_.accept(assignment, *bound)) {
        ++result_.rejected;
        return;
      }
      found_ = true;
      best_ = bound->objective;
      result_.solution = *bound;
      result_.assignment = std::move(assignment);
      return;
    }
    for (const double value : p_.integers[depth].admissible) {
      partial_[depth] = value;
      visit(depth + 1);
    }
    partial_[depth].reset();
  }

  const MiqpProblem& p_;
  MiqpStrategy strategy_;
  QpSolver solver_;
  std::vector<std::optional<double>> partial_;
  MiqpResult result_;
  bool found_ = false;
  double best_ = kInf;
};

}  // namespace detail

// Returns the assignment whose QP optimum is smallest; ties go to the
// lexicographically smallest assignment (admissible lists are ascending).
inline MiqpResult solve_miqp(const MiqpProblem& p,
                             MiqpStrategy strategy = MiqpStrategy::kBranchAndBound,
                             QpSettings settings = {}) {
  p.validate();
  p.relaxation.validate();
  return detail::MiqpSearch(p, strategy, std::move(settings)).run();
}

}  // namespace trayguard
