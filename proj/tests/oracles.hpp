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

// Independent reference computations used only by tests. Nothing here calls
// into the solver paths it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "trayguard/qp.hpp"

namespace trayguard::testing {

struct OracleResult {
  bool found = false;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
};

// Brute-force active-set enumeration: every inequality is inactive, at its
// lower bound, or at its upper bound. Each guess is solved as an
// equality-constrained KKT system with a full-pivot LU and kept if it is
// primal feasible with correctly signed multipliers. Q must be positive
// definite.
inline OracleResult enumerate_active_sets(const QpProblem& p,
                                          double feas_tol = 1e-8) {
  const Eigen::Index n = p.num_variables();
  const Eigen::Index me = p.num_equalities();
  const Eigen::Index mi = p.num_inequalities();
  OracleResult best;
  std::vector<int> state(static_cast<std::size_t>(mi), 0);
  const long total = static_cast<long>(std::pow(3.0, static_cast<double>(mi)));
  for (long code = 0; code < total; ++code) {
    long c = code;
    Eigen::Index active = 0;
    bool skip = false;
    for (Eigen::Index i = 0; i < mi; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
      c /= 3;
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 1 && !std::isfinite(p.lower(i))) skip = true;
      if (s == 2 && !std::isfinite(p.upper(i))) skip = true;
      if (s != 0) ++active;
    }
    if (skip || me + active > n) continue;
    const Eigen::Index k = me + active;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = p.Q;
    rhs.head(n) = -p.q;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < me; ++i, ++r) {
      K.block(n + r, 0, 1, n) = p.A_eq.row(i);
      K.block(0, n + r, n, 1) = p.A_eq.row(i).transpose();
      rhs(n + r) = p.b_eq(i);
    }
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < mi; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0) continue;
      K.block(n + r, 0, 1, n) = p.A_in.row(i);
      K.block(0, n + r, n, 1) = p.A_in.row(i).transpose();
      rhs(n + r) = s == 1 ? p.lower(i) : p.upper(i);
      rows.push_back(i);
      ++r;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd Ax = p.A_in * x;
    bool ok = true;
    for (Eigen::Index i = 0; i < mi && ok; ++i) {
      if (Ax(i) < p.lower(i) - feas_tol || Ax(i) > p.upper(i) + feas_tol) ok = false;
    }
    for (std::size_t a = 0; a < rows.size() && ok; ++a) {
      const double y = sol(n + me + static_cast<Eigen::Index>(a));
      const int s = state[static_cast<std::size_t>(rows[a])];
      if (s == 1 && y > feas_tol) ok = false;
      if (s == 2 && y < -feas_tol) ok = false;
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(p.Q * x) + p.q.dot(x) + p.offset;
    if (obj < best.objective) {
      best.found = true;
      best.objective = obj;
      best.x = x;
    }
  }
  return best;
}

// Random strictly convex QP with `n` variables, `me` equalities and `mi`
// two- or one-sided inequalities, feasible by construction.
inline QpProblem random_qp(std::mt19937_64& rng, Eigen::Index n,
                           Eigen::Index me, Eigen::Index mi) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto randn = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };
  const Eigen::MatrixXd M = randn(n, n);
  QpProblem p(M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(n, n),
              randn(n, 1).col(0) * 3.0);
  const Eigen::VectorXd x0 = randn(n, 1).col(0);
  if (me > 0) {
    const Eigen::MatrixXd Ae = randn(me, n);
    p.add_equalities(Ae, Ae * x0);
  }
  for (Eigen::Index i = 0; i < mi; ++i) {
    const Eigen::RowVectorXd row = randn(1, n).row(0);
    const double v = row.dot(x0);
    const double pick = unit(rng);
    const double lo = pick < 0.2 ? -kInf : v - unit(rng);
    const double hi = pick > 0.8 ? kInf : v + unit(rng);
    p.add_inequality(row, lo, hi);
  }
  return p;
}

}  // namespace trayguard::testing
