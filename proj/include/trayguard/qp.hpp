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

// Dense convex QP kernel.
//
//   minimize    1/2 x^T Q x + q^T x + offset
//   subject to  A_eq x = b_eq
//               lower <= A_in x <= upper
//
// Solved with an OSQP-style ADMM iteration (fixed rho with residual
// balancing, over-relaxation) followed by solution polishing: the active
// set guessed from the ADMM duals is refined with a primal-dual active-set
// loop on the reduced KKT system, which yields KKT-exact solutions when it
// terminates. Multipliers follow the convention
//   Q x + q + A_eq^T y_eq + A_in^T y_in = 0,
// so y_in <= 0 on an active lower bound and y_in >= 0 on an active upper one.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trayguard/error.hpp"
#include "trayguard/ldlt.hpp"

namespace trayguard {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QpProblem {
  MatrixXd Q;
  VectorXd q;
  MatrixXd A_eq;
  VectorXd b_eq;
  MatrixXd A_in;
  VectorXd lower;
  VectorXd upper;
  double offset = 0.0;

  QpProblem() = default;
  QpProblem(MatrixXd hessian, VectorXd linear)
      : Q(std::move(hessian)), q(std::move(linear)) {
    const Index n = q.size();
    A_eq.resize(0, n);
    b_eq.resize(0);
    A_in.resize(0, n);
    lower.resize(0);
    upper.resize(0);
  }

  Index num_variables() const { return q.size(); }
  Index num_equalities() const { return A_eq.rows(); }
  Index num_inequalities() const { return A_in.rows(); }

  void add_equality(const Eigen::RowVectorXd& row, double rhs) {
    A_eq.conservativeResize(A_eq.rows() + 1, num_variables());
    A_eq.row(A_eq.rows() - 1) = row;
    b_eq.conservativeResize(b_eq.size() + 1);
    b_eq(b_eq.size() - 1) = rhs;
  }

  void add_equalities(const MatrixXd& rows, const VectorXd& rhs) {
    const Index m0 = A_eq.rows();
    A_eq.conservativeResize(m0 + rows.rows(), num_variables());
    A_eq.bottomRows(rows.rows()) = rows;
    b_eq.conservativeResize(m0 + rhs.size());
    b_eq.tail(rhs.size()) = rhs;
  }

  void add_inequality(const Eigen::RowVectorXd& row, double lo, double hi) {
    A_in.conservativeResize(A_in.rows() + 1, num_variables());
    A_in.row(A_in.rows() - 1) = row;
    lower.conservativeResize(lower.size() + 1);
    upper.conservativeResize(upper.size() + 1);
    lower(lower.size() - 1) = lo;
    upper(upper.size() - 1) = hi;
  }

  double objective(const VectorXd& x) const {
    return 0.5 * x.dot(Q * x) + q.dot(x) + offset;
  }

  // Throws kInvalidProblem on inconsistent sizes, asymmetric or indefinite Q.
  void validate() const;
};

enum class QpStatus { kOptimal, kPrimalInfeasible, kMaxIterations };

inline std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kPrimalInfeasible: return "primal-infeasible";
    case QpStatus::kMaxIterations: return "max-iterations";
  }
  return "unknown";
}

struct QpSolution {
  VectorXd x;
  VectorXd y_eq;
  VectorXd y_in;
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double objective = kInf;
  bool polished = false;

  bool optimal() const { return status == QpStatus::kOptimal; }
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double tol = 1e-6;
  int max_iter = 4000;
  int adapt_interval = 25;
  int check_interval = 5;
  double infeasibility_tol = 1e-5;
  bool polish = true;
  // When set, the problem is written here as JSON before solving.
  std::optional<std::string> dump_path;
};

// Smallest eigenvalue estimate of a symmetric matrix: power iteration on
// (s I - Q) with the Gershgorin shift s.
inline double min_eigenvalue_estimate(const MatrixXd& Q, int iterations = 50) {
  const Index n = Q.rows();
  if (n == 0) return 0.0;
  const double shift = Q.cwiseAbs().rowwise().sum().maxCoeff();
  const MatrixXd shifted = shift * MatrixXd::Identity(n, n) - Q;
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i % 7);
  v.normalize();
  double mu = 0.0;
  for (int k = 0; k < iterations; ++k) {
    VectorXd w = shifted * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    mu = v.dot(w);
    v = w / norm;
  }
  mu = std::max(mu, v.dot(shifted * v));
  return shift - mu;
}

inline void QpProblem::validate() const {
  const Index n = q.size();
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidProblem, what);
  };
  if (Q.rows() != n || Q.cols() != n) fail("Q must be n x n");
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) fail("A_eq/b_eq size");
  if (A_in.cols() != n || A_in.rows() != lower.size() ||
      A_in.rows() != upper.size()) {
    fail("A_in/lower/upper size");
  }
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    fail("Q is not symmetric");
  }
  for (Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i)) {
      fail("inequality bounds must satisfy lower <= upper");
    }
  }
  if (!Q.allFinite() || !q.allFinite() || !A_eq.allFinite() ||
      !b_eq.allFinite() || !A_in.allFinite()) {
    fail("problem data must be finite");
  }
  const MatrixXd sym = 0.5 * (Q + Q.transpose());
  if (min_eigenvalue_estimate(sym) < -1e-6 * scale) fail("Q is not PSD");
}

// ---------------------------------------------------------------------------
// JSON (debug dumps and the solve-qp tool). Infinite bounds map to null.

namespace detail {

inline nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json vector_to_json(const VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

inline VectorXd vector_from_json(const nlohmann::json& j, double null_value) {
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = j[i].is_null() ? null_value : j[i].get<double>();
  }
  return v;
}

inline MatrixXd matrix_from_json(const nlohmann::json& j, Index cols) {
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Index>(j[i].size()) != cols) {
      throw Error(ErrorCode::kInvalidProblem, "ragged matrix row");
    }
    for (Index c = 0; c < cols; ++c) {
      m(static_cast<Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace detail

inline nlohmann::json qp_to_json(const QpProblem& p) {
  return {{"Q", detail::matrix_to_json(p.Q)},
          {"q", detail::vector_to_json(p.q)},
          {"A_eq", detail::matrix_to_json(p.A_eq)},
          {"b_eq", detail::vector_to_json(p.b_eq)},
          {"A_in", detail::matrix_to_json(p.A_in)},
          {"lower", detail::vector_to_json(p.lower)},
          {"upper", detail::vector_to_json(p.upper)},
          {"offset", p.offset}};
}

inline QpProblem qp_from_json(const nlohmann::json& j) {
  try {
    const VectorXd q = detail::vector_from_json(j.at("q"), 0.0);
    const Index n = q.size();
    QpProblem p(detail::matrix_from_json(j.at("Q"), n), q);
    if (j.contains("A_eq")) {
      p.A_eq = detail::matrix_from_json(j.at("A_eq"), n);
      p.b_eq = detail::vector_from_json(j.at("b_eq"), 0.0);
    }
    if (j.contains("A_in")) {
      p.A_in = detail::matrix_from_json(j.at("A_in"), n);
      p.lower = detail::vector_from_json(j.at("lower"), -kInf);
      p.upper = detail::vector_from_json(j.at("upper"), kInf);
    }
    p.offset = j.value("offset", 0.0);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidProblem, e.what());
  }
}

inline nlohmann::json solution_to_json(const QpSolution& s) {
  return {{"status", std::string(to_string(s.status))},
          {"x", detail::vector_to_json(s.x)},
          {"y_eq", detail::vector_to_json(s.y_eq)},
          {"y_in", detail::vector_to_json(s.y_in)},
          {"objective", s.objective},
          {"iterations", s.iterations},
          {"primal_residual", s.primal_residual},
          {"dual_residual", s.dual_residual},
          {"polished", s.polished}};
}

// ---------------------------------------------------------------------------

// Holds the mutable workspace; one instance per thread.
class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {}) : settings_(std::move(settings)) {}

  const QpSettings& settings() const { return settings_; }
  QpSettings& settings() { return settings_; }

  QpSolution solve(const QpProblem& problem);

 private:
  enum class Bound : signed char { kInactive = 0, kLower = -1, kUpper = 1 };

  void setup(const QpProblem& problem);
  void factor();
  bool polish(const VectorXd& y_guess, const VectorXd& z_guess,
              QpSolution& out);
  bool infeasibility_certificate(const VectorXd& dy) const;
  void finish(QpSolution& s) const;

  QpSettings settings_;
  // Stacked problem data: l <= A x <= u, first m_eq rows are equalities.
  MatrixXd P_;
  VectorXd c_;
  MatrixXd A_;
  VectorXd l_;
  VectorXd u_;
  Index n_ = 0;
  Index m_eq_ = 0;
  Index m_ = 0;
  double offset_ = 0.0;
  VectorXd rho_vec_;
  double rho_ = 0.1;
  Ldlt kkt_;
};

inline void QpSolver::setup(const QpProblem& p) {
  n_ = p.num_variables();
  m_eq_ = p.num_equalities();
  m_ = m_eq_ + p.num_inequalities();
  P_ = 0.5 * (p.Q + p.Q.transpose());
  c_ = p.q;
  offset_ = p.offset;
  A_.resize(m_, n_);
  l_.resize(m_);
  u_.resize(m_);
  if (m_eq_ > 0) {
    A_.topRows(m_eq_) = p.A_eq;
    l_.head(m_eq_) = p.b_eq;
    u_.head(m_eq_) = p.b_eq;
  }
  if (p.num_inequalities() > 0) {
    A_.bottomRows(p.num_inequalities()) = p.A_in;
    l_.tail(p.num_inequalities()) = p.lower;
    u_.tail(p.num_inequalities()) = p.upper;
  }
  rho_ = settings_.rho;
}

inline void QpSolver::factor() {
  rho_vec_.resize(m_);
  for (Index i = 0; i < m_; ++i) {
    if (l_(i) == u_(i)) {
      rho_vec_(i) = 1e3 * rho_;
    } else if (!std::isfinite(l_(i)) && !std::isfinite(u_(i))) {
      rho_vec_(i) = 1e-6;
    } else {
      rho_vec_(i) = rho_;
    }
  }
  MatrixXd K = P_;
  K.diagonal().array() += settings_.sigma;
  K.noalias() += A_.transpose() * rho_vec_.asDiagonal() * A_;
  kkt_.compute(K);
}

inline bool QpSolver::infeasibility_certificate(const VectorXd& dy) const {
  const double norm = dy.cwiseAbs().maxCoeff();
  if (!(norm > 0.0)) return false;
  const double eps = settings_.infeasibility_tol;
  if ((A_.transpose() * dy).cwiseAbs().maxCoeff() > eps * norm) return false;
  double support = 0.0;
  for (Index i = 0; i < m_; ++i) {
    const double d = dy(i);
    if (d > eps * norm) {
      if (!std::isfinite(u_(i))) return false;
      support += u_(i) * d;
    } else if (d < -eps * norm) {
      if (!std::isfinite(l_(i))) return false;
      support += l_(i) * d;
    }
  }
  return support < -eps * norm;
}

inline void QpSolver::finish(QpSolution& s) const {
  const VectorXd y = s.y_eq;  // stacked multipliers, split here
  s.y_eq = y.head(m_eq_);
  s.y_in = y.tail(m_ - m_eq_);
  s.objective = 0.5 * s.x.dot(P_ * s.x) + c_.dot(s.x) + offset_;
}

// Reduced KKT solve on a guessed active set, then primal-dual active-set
// corrections until the KKT conditions hold at tolerance.
inline bool QpSolver::polish(const VectorXd& y_guess, const VectorXd& z_guess,
                             QpSolution& out) {
  const double tol = settings_.tol;
  std::vector<Bound> active(static_cast<std::size_t>(m_), Bound::kInactive);
  for (Index i = m_eq_; i < m_; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (l_(i) == u_(i)) {
      active[k] = Bound::kLower;
    } else if (std::isfinite(l_(i)) && z_guess(i) - l_(i) < -y_guess(i)) {
      active[k] = Bound::kLower;
    } else if (std::isfinite(u_(i)) && u_(i) - z_guess(i) < y_guess(i)) {
      active[k] = Bound::kUpper;
    }
  }

  const int max_rounds = static_cast<int>(2 * m_ + 10);
  constexpr double kDelta = 1e-10;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Index> rows;
    rows.reserve(static_cast<std::size_t>(m_));
    for (Index i = 0; i < m_; ++i) {
      if (i < m_eq_ || active[static_cast<std::size_t>(i)] != Bound::kInactive) {
        rows.push_back(i);
      }
    }
    const Index k = static_cast<Index>(rows.size());
    MatrixXd K0 = MatrixXd::Zero(n_ + k, n_ + k);
    K0.topLeftCorner(n_, n_) = P_;
    VectorXd rhs(n_ + k);
    rhs.head(n_) = -c_;
    for (Index r = 0; r < k; ++r) {
      const Index i = rows[static_cast<std::size_t>(r)];
      K0.block(n_ + r, 0, 1, n_) = A_.row(i);
      K0.block(0, n_ + r, n_, 1) = A_.row(i).transpose();
      const bool upper = i >= m_eq_ &&
                         active[static_cast<std::size_t>(i)] == Bound::kUpper;
      rhs(n_ + r) = upper ? u_(i) : l_(i);
    }
    MatrixXd Kd = K0;
    Kd.topLeftCorner(n_, n_).diagonal().array() += kDelta;
    Kd.bottomRightCorner(k, k).diagonal().array() -= kDelta;
    Ldlt fact(Kd);
    if (!fact.ok()) return false;
    VectorXd sol = fact.solve(rhs);
    for (int refine = 0; refine < 8; ++refine) {
      const VectorXd r = rhs - K0 * sol;
      if (r.cwiseAbs().maxCoeff() < 1e-14 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
        break;
      }
      sol += fact.solve(r);
    }
    if (!sol.allFinite()) return false;

    VectorXd x = sol.head(n_);
    VectorXd y = VectorXd::Zero(m_);
    for (Index r = 0; r < k; ++r) y(rows[static_cast<std::size_t>(r)]) = sol(n_ + r);

    // Most violated inactive constraint, most wrong-signed active multiplier.
    const VectorXd Ax = A_ * x;
    Index worst_primal = -1;
    double worst_primal_val = tol;
    Bound worst_side = Bound::kInactive;
    Index worst_dual = -1;
    double worst_dual_val = tol;
    for (Index i = m_eq_; i < m_; ++i) {
      const auto s = active[static_cast<std::size_t>(i)];
      if (s == Bound::kInactive) {
        if (l_(i) - Ax(i) > worst_primal_val) {
          worst_primal_val = l_(i) - Ax(i);
          worst_primal = i;
          worst_side = Bound::kLower;
        }
        if (Ax(i) - u_(i) > worst_primal_val) {
          worst_primal_val = Ax(i) - u_(i);
          worst_primal = i;
          worst_side = Bound::kUpper;
        }
      } else if (l_(i) != u_(i)) {
        const double wrong = s == Bound::kLower ? y(i) : -y(i);
        if (wrong > worst_dual_val) {
          worst_dual_val = wrong;
          worst_dual = i;
        }
      }
    }
    if (worst_primal < 0 && worst_dual < 0) {
      out.x = std::move(x);
      out.y_eq = std::move(y);  // split in finish()
      out.polished = true;
      return true;
    }
    if (worst_primal >= 0 && worst_primal_val >= worst_dual_val) {
      active[static_cast<std::size_t>(worst_primal)] = worst_side;
    } else {
      active[static_cast<std::size_t>(worst_dual)] = Bound::kInactive;
    }
  }
  return false;
}

inline QpSolution QpSolver::solve(const QpProblem& problem) {
  problem.validate();
  if (settings_.dump_path) {
    std::ofstream dump(*settings_.dump_path);
    dump << qp_to_json(problem).dump(2) << '\n';
  }
  setup(problem);

  QpSolution out;
  const double tol = settings_.tol;

  auto residuals = [&](const VectorXd& x, const VectorXd& y, QpSolution& s) {
    VectorXd viol = VectorXd::Zero(m_);
    const VectorXd Ax = A_ * x;
    for (Index i = 0; i < m_; ++i) {
      viol(i) = std::max({0.0, l_(i) - Ax(i), Ax(i) - u_(i)});
    }
    s.primal_residual = m_ > 0 ? viol.maxCoeff() : 0.0;
    s.dual_residual =
        n_ > 0 ? (P_ * x + c_ + A_.transpose() * y).cwiseAbs().maxCoeff() : 0.0;
  };

  // Equality-only problems are solved directly by the reduced KKT system.
  const bool equality_only = [&] {
    for (Index i = 0; i < m_; ++i) {
      if (l_(i) != u_(i) && (std::isfinite(l_(i)) || std::isfinite(u_(i)))) {
        return false;
      }
    }
    return true;
  }();
  if (equality_only && settings_.polish) {
    if (polish(VectorXd::Zero(m_), VectorXd::Zero(m_), out)) {
      residuals(out.x, out.y_eq, out);
      if (out.primal_residual <= tol && out.dual_residual <= tol) {
        out.status = QpStatus::kOptimal;
        finish(out);
        return out;
      }
    }
    out = QpSolution{};
  }

  factor();
  VectorXd x = VectorXd::Zero(n_);
  VectorXd z = A_ * x;
  z = z.cwiseMax(l_).cwiseMin(u_);
  VectorXd y = VectorXd::Zero(m_);
  const double alpha = settings_.alpha;
  const double sigma = settings_.sigma;

  int iter = 0;
  bool converged = false;
  for (iter = 1; iter <= settings_.max_iter; ++iter) {
    const VectorXd rhs =
        sigma * x - c_ + A_.transpose() * (rho_vec_.cwiseProduct(z) - y);
    const VectorXd x_tilde = kkt_.solve(rhs);
    const VectorXd z_tilde = A_ * x_tilde;
    x = alpha * x_tilde + (1.0 - alpha) * x;
    const VectorXd z_relaxed = alpha * z_tilde + (1.0 - alpha) * z;
    const VectorXd z_next =
        (z_relaxed + y.cwiseQuotient(rho_vec_)).cwiseMax(l_).cwiseMin(u_);
    const VectorXd dy = rho_vec_.cwiseProduct(z_relaxed - z_next);
    y += dy;
    z = z_next;

    const bool check = iter % settings_.check_interval == 0 ||
                       iter == settings_.max_iter;
    if (!check) continue;

    QpSolution probe;
    residuals(x, y, probe);
    const double prim = m_ > 0 ? (A_ * x - z).cwiseAbs().maxCoeff() : 0.0;
    if (probe.primal_residual <= tol && prim <= tol &&
        probe.dual_residual <= tol) {
      converged = true;
      break;
    }
    if (m_ > 0 && infeasibility_certificate(dy)) {
      out.x = x;
      out.y_eq = y;
      out.iterations = iter;
      out.status = QpStatus::kPrimalInfeasible;
      residuals(x, y, out);
      finish(out);
      return out;
    }
    if (iter % settings_.adapt_interval == 0) {
      if (settings_.polish) {
        QpSolution trial;
        if (polish(y, z, trial)) {
          residuals(trial.x, trial.y_eq, trial);
          if (trial.primal_residual <= tol && trial.dual_residual <= tol) {
            trial.iterations = iter;
            trial.status = QpStatus::kOptimal;
            finish(trial);
            return trial;
          }
        }
      }
      const VectorXd Ax = A_ * x;
      const VectorXd Px = P_ * x;
      const VectorXd Aty = A_.transpose() * y;
      const double prim_scale =
          std::max({Ax.cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff(), 1e-12});
      const double dual_scale =
          std::max({Px.cwiseAbs().maxCoeff(), Aty.cwiseAbs().maxCoeff(),
                    c_.cwiseAbs().maxCoeff(), 1e-12});
      const double ratio = std::sqrt((prim / prim_scale) /
                                     std::max(probe.dual_residual / dual_scale,
                                              1e-30));
      const double rho_new = std::clamp(rho_ * ratio, 1e-6, 1e6);
      if (rho_new > 5.0 * rho_ || rho_new < 0.2 * rho_) {
        rho_ = rho_new;
        factor();
      }
    }
  }

  out.x = x;
  out.y_eq = y;
  out.iterations = std::min(iter, settings_.max_iter);
  out.status = converged ? QpStatus::kOptimal : QpStatus::kMaxIterations;
  if (settings_.polish) {
    QpSolution trial;
    if (polish(y, z, trial)) {
      residuals(trial.x, trial.y_eq, trial);
      if (trial.primal_residual <= tol && trial.dual_residual <= tol) {
        trial.iterations = out.iterations;
        trial.status = QpStatus::kOptimal;
        finish(trial);
        return trial;
      }
    }
  }
  residuals(out.x, out.y_eq, out);
  finish(out);
  return out;
}

inline QpSolution solve_qp(const QpProblem& p, double tol = 1e-6,
                           int max_iter = 4000) {
  QpSettings s;
  s.tol = tol;
  s.max_iter = max_iter;
  QpSolver solver(s);
  return solver.solve(p);
}

}  // namespace trayguard
