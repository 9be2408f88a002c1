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

#include <cmath>

namespace trayguard {

// Dense LDL^T factorization without pivoting. Valid for symmetric positive
// definite and for quasi-definite matrices [P + dI, A^T; A, -eI] (any
// symmetric permutation of a quasi-definite matrix factors stably), which is
// all the QP kernel needs.
class Ldlt {
 public:
  Ldlt() = default;
  explicit Ldlt(const Eigen::MatrixXd& m) { compute(m); }

  // Returns false if a zero pivot is hit.
  bool compute(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    lower_.setIdentity(n, n);
    diag_.setZero(n);
    ok_ = true;
    Eigen::VectorXd ld(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      // ld = L(j, 0:j) .* D(0:j)
      ld.head(j) = lower_.row(j).head(j).transpose().cwiseProduct(diag_.head(j));
      const double d = m(j, j) - lower_.row(j).head(j).dot(ld.head(j));
      if (d == 0.0 || !std::isfinite(d)) {
        ok_ = false;
        return false;
      }
      diag_(j) = d;
      const Eigen::Index rest = n - j - 1;
      if (rest > 0) {
        lower_.col(j).tail(rest) =
            (m.col(j).tail(rest) - lower_.bottomLeftCorner(rest, j) * ld.head(j)) / d;
      }
    }
    return true;
  }

  bool ok() const { return ok_; }
  const Eigen::VectorXd& d() const { return diag_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y =
        lower_.triangularView<Eigen::UnitLower>().solve(b);
    y.array() /= diag_.array();
    return lower_.transpose().triangularView<Eigen::UnitUpper>().solve(y);
  }

  // Count of negative pivots (inertia).
  Eigen::Index negative_pivots() const { return (diag_.array() < 0.0).count(); }

 private:
  Eigen::MatrixXd lower_;
  Eigen::VectorXd diag_;
  bool ok_ = false;
};

}  // namespace trayguard
