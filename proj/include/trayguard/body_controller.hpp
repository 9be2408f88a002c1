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

// Full-body inverse-dynamics QP over [qdd, tau, F_c], reference integration,
// joint impedance law, and the simplified transition controller.

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trayguard/dynamics.hpp"
#include "trayguard/error.hpp"
#include "trayguard/qp.hpp"

namespace trayguard {

struct ControllerWeights {
  MatrixXd W_qdd;
  MatrixXd W_tau;
  MatrixXd W_c;
  VectorXd K_p;  // diagonal gains
  VectorXd K_d;
  VectorXd tau_min;
  VectorXd tau_max;
  double mu = 0.4;

  static ControllerWeights defaults(const DynamicsModel& model) {
    ControllerWeights w;
    const int n = model.dof();
    const int m = model.actuated();
    const int c = model.contact_dim();
    w.W_qdd = MatrixXd::Identity(n, n);
    w.W_tau = 1e-3 * MatrixXd::Identity(m, m);
    w.W_c = 1e-4 * MatrixXd::Identity(c, c);
    w.K_p = VectorXd::Constant(n, 100.0);
    w.K_d = VectorXd::Constant(n, 20.0);
    w.tau_min = VectorXd::Constant(m, -200.0);
    w.tau_max = VectorXd::Constant(m, 200.0);
    return w;
  }

  void validate(const DynamicsModel& model) const {
    const int n = model.dof();
    const int m = model.actuated();
    const int c = model.contact_dim();
    if (W_qdd.rows() != n || W_qdd.cols() != n || W_tau.rows() != m ||
        W_tau.cols() != m || W_c.rows() != c || W_c.cols() != c ||
        K_p.size() != n || K_d.size() != n || tau_min.size() != m ||
        tau_max.size() != m) {
      throw Error(ErrorCode::kInvalidParameter, "controller weight sizes");
    }
    for (const MatrixXd* w : {&W_qdd, &W_tau, &W_c}) {
      if (w->size() == 0) continue;
      if (!w->isApprox(w->transpose()) ||
          Eigen::SelfAdjointEigenSolver<MatrixXd>(*w).eigenvalues().minCoeff() <
              -1e-12) {
        throw Error(ErrorCode::kInvalidParameter, "weights must be PSD");
      }
    }
    if (!(K_p.array() > 0).all() || !(K_d.array() > 0).all()) {
      throw Error(ErrorCode::kInvalidParameter, "PD gains must be positive");
    }
    if (!(tau_min.array() <= tau_max.array()).all()) {
      throw Error(ErrorCode::kInvalidParameter, "torque bounds inverted");
    }
    if (!(mu > 0.0)) {
      throw Error(ErrorCode::kInvalidParameter, "friction coefficient must be > 0");
    }
  }
};

struct ImpedanceGains {
  VectorXd K_p;
  VectorXd K_d;

  void validate(Eigen::Index m) const {
    if (K_p.size() != m || K_d.size() != m) {
      throw Error(ErrorCode::kInvalidParameter, "impedance gain sizes");
    }
    if (!(K_p.array() > 0).all() || !(K_d.array() > 0).all()) {
      throw Error(ErrorCode::kInvalidParameter,
                  "impedance gains must be positive");
    }
  }
};

// Linearized friction cone. Rows r with r F <= 0 for each face, plus
// -F_n <= 0. Planar points get two faces, spatial points four.
inline MatrixXd friction_cone_rows(int points, int point_dim, double mu) {
  if (point_dim != 2 && point_dim != 3) {
    throw Error(ErrorCode::kInvalidParameter, "contact dimension must be 2 or 3");
  }
  const int tangents = point_dim - 1;
  const int faces = 2 * tangents + 1;
  MatrixXd rows = MatrixXd::Zero(points * faces, points * point_dim);
  for (int p = 0; p < points; ++p) {
    const int col = p * point_dim;
    const int normal = col + point_dim - 1;
    int r = p * faces;
    for (int t = 0; t < tangents; ++t) {
      for (double sign : {1.0, -1.0}) {
        rows(r, col + t) = sign;
        rows(r, normal) = -mu;
        ++r;
      }
    }
    rows(r, normal) = -1.0;
  }
  return rows;
}

enum class FbcStatus { kOk, kInfeasible };

inline std::string_view to_string(FbcStatus s) {
  return s == FbcStatus::kOk ? "ok" : "controller-infeasible";
}

struct FbcResult {
  VectorXd qdd;
  VectorXd tau;
  VectorXd force;
  VectorXd qdd_desired;
  FbcStatus status = FbcStatus::kOk;
  QpStatus qp_status = QpStatus::kOptimal;
  double dynamics_residual = 0.0;  // inf-norm
  double contact_residual = 0.0;
};

class FullBodyController {
 public:
  FullBodyController() {
    QpSettings s;
    s.tol = 1e-9;
    s.max_iter = 20000;
    solver_ = QpSolver(s);
  }

  FbcResult solve(const DynamicsModel& model, const ControllerWeights& w,
                  const VectorXd& q, const VectorXd& qd, const VectorXd& q_des,
                  const VectorXd& qd_des) {
    w.validate(model);
    const Eigen::Index n = model.dof();
    const Eigen::Index m = model.actuated();
    const Eigen::Index c = model.contact_dim();
    if (q.size() != n || qd.size() != n || q_des.size() != n ||
        qd_des.size() != n) {
      throw Error(ErrorCode::kInvalidParameter, "state sizes");
    }
    if (c == 0) {
      throw Error(ErrorCode::kInvalidParameter, "contact set must be non-empty");
    }
    FbcResult out;
    out.qdd_desired = w.K_p.cwiseProduct(q_des - q) + w.K_d.cwiseProduct(qd_des - qd);

    const Eigen::Index nx = n + m + c;
    MatrixXd Q = MatrixXd::Zero(nx, nx);
    Q.block(0, 0, n, n) = 2.0 * w.W_qdd;
    Q.block(n, n, m, m) = 2.0 * w.W_tau;
    Q.block(n + m, n + m, c, c) = 2.0 * w.W_c;
    VectorXd lin = VectorXd::Zero(nx);
    lin.head(n) = -2.0 * (w.W_qdd * out.qdd_desired);
    QpProblem qp(Q, lin);
    qp.offset = out.qdd_desired.dot(w.W_qdd * out.qdd_desired);

    const MatrixXd D = model.mass_matrix(q);
    const VectorXd H = model.bias(q, qd);
    const MatrixXd S = model.selection();
    const MatrixXd J = model.contact_jacobian(q);
    const VectorXd Jdqd = model.contact_bias(q, qd);

    MatrixXd dyn(n, nx);
    dyn << D, -S.transpose(), -J.transpose();
    qp.add_equalities(dyn, -H);
    MatrixXd con = MatrixXd::Zero(c, nx);
    con.leftCols(n) = J;
    qp.add_equalities(con, -Jdqd);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nx);
      row(n + i) = 1.0;
      qp.add_inequality(row, w.tau_min(i), w.tau_max(i));
    }
    const MatrixXd fc =
        friction_cone_rows(model.contact_points(), model.contact_point_dim(), w.mu);
    for (Eigen::Index r = 0; r < fc.rows(); ++r) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nx);
      row.tail(c) = fc.row(r);
      qp.add_inequality(row, -kInf, 0.0);
    }

    const QpSolution s = solver_.solve(qp);
    out.qp_status = s.status;
    if (!s.optimal()) {
      out.status = FbcStatus::kInfeasible;
      out.qdd = VectorXd::Zero(n);
      out.tau = VectorXd::Zero(m);
      out.force = VectorXd::Zero(c);
      return out;
    }
    out.qdd = s.x.head(n);
    out.tau = s.x.segment(n, m);
    out.force = s.x.tail(c);
    out.dynamics_residual =
        (D * out.qdd + H - S.transpose() * out.tau - J.transpose() * out.force)
            .lpNorm<Eigen::Infinity>();
    out.contact_residual = (J * out.qdd + Jdqd).lpNorm<Eigen::Infinity>();
    return out;
  }

 private:
  QpSolver solver_;
};

struct ReferenceState {
  VectorXd q;
  VectorXd qd;
};

// Semi-implicit Euler.
inline ReferenceState integrate_reference(const VectorXd& q, const VectorXd& qd,
                                          const VectorXd& qdd, double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "dt must be > 0");
  }
  ReferenceState r;
  r.qd = qd + dt * qdd;
  r.q = q + dt * r.qd;
  return r;
}

struct TorqueCommand {
  VectorXd tau;
  bool clamped = false;
};

inline TorqueCommand impedance_torque(const VectorXd& tau_ff,
                                      const VectorXd& q_ref,
                                      const VectorXd& qd_ref, const VectorXd& q,
                                      const VectorXd& qd,
                                      const ImpedanceGains& gains,
                                      const VectorXd& tau_min,
                                      const VectorXd& tau_max) {
  const Eigen::Index m = tau_ff.size();
  gains.validate(m);
  if (q_ref.size() != m || qd_ref.size() != m || q.size() != m ||
      qd.size() != m || tau_min.size() != m || tau_max.size() != m) {
    throw Error(ErrorCode::kInvalidParameter, "impedance sizes");
  }
  TorqueCommand out;
  const VectorXd raw = tau_ff + gains.K_p.cwiseProduct(q_ref - q) +
                       gains.K_d.cwiseProduct(qd_ref - qd);
  out.tau = raw.cwiseMax(tau_min).cwiseMin(tau_max);
  out.clamped = out.tau != raw;
  return out;
}

// Gravity feedforward plus joint PD on the actuated coordinates; the inputs
// are full configuration vectors.
inline VectorXd transition_torque(const DynamicsModel& model,
                                  const VectorXd& q_des, const VectorXd& qd_des,
                                  const VectorXd& q, const VectorXd& qd,
                                  const ImpedanceGains& gains) {
  const MatrixXd S = model.selection();
  gains.validate(model.actuated());
  return S * model.gravity(q) + gains.K_p.cwiseProduct(S * (q_des - q)) +
         gains.K_d.cwiseProduct(S * (qd_des - qd));
}

struct IkSettings {
  double damping = 1e-4;
  double tol = 1e-9;
  int max_iter = 100;
};

struct IkResult {
  VectorXd q;
  VectorXd qd;
  double error = 0.0;
  int iterations = 0;
};

namespace detail {
inline MatrixXd damped_pinv(const MatrixXd& J, double lambda) {
  const MatrixXd JJt =
      J * J.transpose() + lambda * lambda * MatrixXd::Identity(J.rows(), J.rows());
  return J.transpose() * JJt.ldlt().solve(MatrixXd::Identity(J.rows(), J.rows()));
}
}  // namespace detail

// Damped least squares on the model's task point.
inline IkResult ik_references(const DynamicsModel& model, const VectorXd& q0,
                              const VectorXd& target,
                              const VectorXd& target_velocity,
                              const IkSettings& settings = {}) {
  IkResult r;
  r.q = q0;
  for (r.iterations = 0;; ++r.iterations) {
    const VectorXd e = target - model.task_position(r.q);
    r.error = e.norm();
    if (r.error < settings.tol) break;
    if (r.iterations >= settings.max_iter) {
      throw Error(ErrorCode::kIkFailure,
                  "inverse kinematics did not converge (error " +
                      std::to_string(r.error) + ")");
    }
    r.q += detail::damped_pinv(model.task_jacobian(r.q), settings.damping) * e;
  }
  r.qd = detail::damped_pinv(model.task_jacobian(r.q), settings.damping) *
         target_velocity;
  return r;
}

// Joint-space transition reference, linearly interpolated between knots.
class TransitionTrajectory {
 public:
  struct Knot {
    double t = 0.0;
    VectorXd q;
    VectorXd qd;
  };

  explicit TransitionTrajectory(std::vector<Knot> knots)
      : knots_(std::move(knots)) {
    if (knots_.empty()) {
      throw Error(ErrorCode::kConfig, "transition trajectory has no knots");
    }
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      if (knots_[k].q.size() != knots_[0].q.size() ||
          knots_[k].qd.size() != knots_[0].q.size()) {
        throw Error(ErrorCode::kConfig, "transition knot sizes differ");
      }
      if (k > 0 && !(knots_[k].t > knots_[k - 1].t)) {
        throw Error(ErrorCode::kConfig, "transition knot times must increase");
      }
    }
  }

  static TransitionTrajectory from_json(const nlohmann::json& j) {
    const auto& arr = j.is_object() ? j.at("knots") : j;
    std::vector<Knot> knots;
    for (const auto& kj : arr) {
      Knot k;
      k.t = kj.at("t").get<double>();
      const auto q = kj.at("q").get<std::vector<double>>();
      const auto qd = kj.at("qd").get<std::vector<double>>();
      k.q = Eigen::Map<const VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
      k.qd = Eigen::Map<const VectorXd>(qd.data(), static_cast<Eigen::Index>(qd.size()));
      knots.push_back(std::move(k));
    }
    return TransitionTrajectory(std::move(knots));
  }

  double start() const { return knots_.front().t; }
  double end() const { return knots_.back().t; }
  double duration() const { return end() - start(); }
  const std::vector<Knot>& knots() const { return knots_; }

  ReferenceState sample(double t) const {
    if (t <= knots_.front().t) return {knots_.front().q, knots_.front().qd};
    if (t >= knots_.back().t) return {knots_.back().q, knots_.back().qd};
    const auto it = std::upper_bound(
        knots_.begin(), knots_.end(), t,
        [](double value, const Knot& k) { return value < k.t; });
    const Knot& b = *it;
    const Knot& a = *(it - 1);
    const double s = (t - a.t) / (b.t - a.t);
    return {a.q + s * (b.q - a.q), a.qd + s * (b.qd - a.qd)};
  }

 private:
  std::vector<Knot> knots_;
};

}  // namespace trayguard
