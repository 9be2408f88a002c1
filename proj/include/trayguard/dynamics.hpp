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

// Rigid-body model interface for the full-body controller, plus two planar
// analytic models:
//   D(q) qdd + H(q, qd) = S^T tau + J_c(q)^T F_c,   H = C(q, qd) qd + G(q).
// Unactuated coordinates come first, so S = [0 | I].

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "trayguard/error.hpp"

namespace trayguard {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int dof() const = 0;
  virtual int unactuated() const = 0;
  int actuated() const { return dof() - unactuated(); }

  virtual MatrixXd mass_matrix(const VectorXd& q) const = 0;
  virtual VectorXd coriolis(const VectorXd& q, const VectorXd& qd) const = 0;
  virtual VectorXd gravity(const VectorXd& q) const = 0;
  VectorXd bias(const VectorXd& q, const VectorXd& qd) const {
    return coriolis(q, qd) + gravity(q);
  }

  MatrixXd selection() const {
    MatrixXd s = MatrixXd::Zero(actuated(), dof());
    s.rightCols(actuated()).setIdentity();
    return s;
  }

  // Point contacts; each contributes `contact_point_dim()` rows with the
  // normal component last.
  virtual int contact_points() const = 0;
  virtual int contact_point_dim() const = 0;
  int contact_dim() const { return contact_points() * contact_point_dim(); }
  virtual MatrixXd contact_jacobian(const VectorXd& q) const = 0;
  virtual VectorXd contact_bias(const VectorXd& q, const VectorXd& qd) const = 0;

  // Task point used by inverse kinematics.
  virtual VectorXd task_position(const VectorXd& q) const = 0;
  virtual MatrixXd task_jacobian(const VectorXd& q) const = 0;

 protected:
  void check_size(const VectorXd& v) const {
    if (v.size() != dof()) {
      throw Error(ErrorCode::kInvalidParameter, "state vector size mismatch");
    }
  }
};

struct LinkParams {
  double mass = 1.0;
  double length = 0.3;
  double com = 0.15;     // distance from the proximal joint
  double inertia = 0.0075;  // about the center of mass
};

namespace detail {

// Coriolis/centrifugal vector from the mass-matrix partials:
// c_k = sum_ij Gamma_kij qd_i qd_j,
// Gamma_kij = (dD_kj/dq_i + dD_ki/dq_j - dD_ij/dq_k) / 2.
inline VectorXd christoffel_bias(const std::vector<MatrixXd>& dD,
                                 const VectorXd& qd) {
  const Eigen::Index n = qd.size();
  VectorXd c = VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double g = 0.5 * (dD[i](k, j) + dD[j](k, i) - dD[k](i, j));
        c(k) += g * qd(i) * qd(j);
      }
    }
  }
  return c;
}

}  // namespace detail

// Two-link arm on a fixed base, joint angles measured from +x (link 1) and
// relative to link 1 (link 2); gravity along -y. The contact is the tip
// (tangent x, normal y).
class PlanarTwoLinkLeg : public DynamicsModel {
 public:
  PlanarTwoLinkLeg(LinkParams l1 = {}, LinkParams l2 = {}, double g = 9.81)
      : l1_(l1), l2_(l2), g_(g) {}

  int dof() const override { return 2; }
  int unactuated() const override { return 0; }

  const LinkParams& link1() const { return l1_; }
  const LinkParams& link2() const { return l2_; }
  double g() const { return g_; }

  MatrixXd mass_matrix(const VectorXd& q) const override {
    check_size(q);
    const double c2 = std::cos(q(1));
    const double m2 = l2_.mass;
    MatrixXd d(2, 2);
    d(0, 0) = l1_.mass * l1_.com * l1_.com +
              m2 * (l1_.length * l1_.length + l2_.com * l2_.com +
                    2 * l1_.length * l2_.com * c2) +
              l1_.inertia + l2_.inertia;
    d(0, 1) = m2 * (l2_.com * l2_.com + l1_.length * l2_.com * c2) + l2_.inertia;
    d(1, 0) = d(0, 1);
    d(1, 1) = m2 * l2_.com * l2_.com + l2_.inertia;
    return d;
  }

  VectorXd coriolis(const VectorXd& q, const VectorXd& qd) const override {
    check_size(q);
    const double h = -l2_.mass * l1_.length * l2_.com * std::sin(q(1));
    VectorXd c(2);
    c(0) = h * (2 * qd(0) * qd(1) + qd(1) * qd(1));
    c(1) = -h * qd(0) * qd(0);
    return c;
  }

  VectorXd gravity(const VectorXd& q) const override {
    check_size(q);
    const double c1 = std::cos(q(0));
    const double c12 = std::cos(q(0) + q(1));
    VectorXd gv(2);
    gv(0) = (l1_.mass * l1_.com + l2_.mass * l1_.length) * g_ * c1 +
            l2_.mass * l2_.com * g_ * c12;
    gv(1) = l2_.mass * l2_.com * g_ * c12;
    return gv;
  }

  int contact_points() const override { return 1; }
  int contact_point_dim() const override { return 2; }

  MatrixXd contact_jacobian(const VectorXd& q) const override {
    return task_jacobian(q);
  }

  VectorXd contact_bias(const VectorXd& q, const VectorXd& qd) const override {
    check_size(q);
    const double w1 = qd(0);
    const double w12 = qd(0) + qd(1);
    const double a = q(0);
    const double b = q(0) + q(1);
    VectorXd out(2);
    out(0) = -l1_.length * std::cos(a) * w1 * w1 -
             l2_.length * std::cos(b) * w12 * w12;
    out(1) = -l1_.length * std::sin(a) * w1 * w1 -
             l2_.length * std::sin(b) * w12 * w12;
    return out;
  }

  VectorXd task_position(const VectorXd& q) const override {
    check_size(q);
    const double a = q(0);
    const double b = q(0) + q(1);
    return Eigen::Vector2d(l1_.length * std::cos(a) + l2_.length * std::cos(b),
                           l1_.length * std::sin(a) + l2_.length * std::sin(b));
  }

  MatrixXd task_jacobian(const VectorXd& q) const override {
    check_size(q);
    const double a = q(0);
    const double b = q(0) + q(1);
    MatrixXd j(2, 2);
    j << -l1_.length * std::sin(a) - l2_.length * std::sin(b),
        -l2_.length * std::sin(b),
        l1_.length * std::cos(a) + l2_.length * std::cos(b),
        l2_.length * std::cos(b);
    return j;
  }

 private:
  LinkParams l1_;
  LinkParams l2_;
  double g_;
};

// The same two-link leg hanging from a body of mass m0 that slides on a
// passive vertical rail: q = (s, q1, q2) with s unactuated. A one-legged
// stand-in for a floating base: the stance foot must carry the weight.
class PlanarSliderLeg : public DynamicsModel {
 public:
  PlanarSliderLeg(double body_mass = 4.0, LinkParams l1 = {},
                  LinkParams l2 = {}, double g = 9.81)
      : m0_(body_mass), l1_(l1), l2_(l2), g_(g) {}

  int dof() const override { return 3; }
  int unactuated() const override { return 1; }

  double body_mass() const { return m0_; }
  const LinkParams& link1() const { return l1_; }
  const LinkParams& link2() const { return l2_; }
  double g() const { return g_; }
  double total_mass() const { return m0_ + l1_.mass + l2_.mass; }

  MatrixXd mass_matrix(const VectorXd& q) const override {
    check_size(q);
    const double c1 = std::cos(q(1));
    const double c12 = std::cos(q(1) + q(2));
    const double c2 = std::cos(q(2));
    const double m1 = l1_.mass;
    const double m2 = l2_.mass;
    MatrixXd d(3, 3);
    d(0, 0) = total_mass();
    d(0, 1) = m1 * l1_.com * c1 + m2 * (l1_.length * c1 + l2_.com * c12);
    d(0, 2) = m2 * l2_.com * c12;
    d(1, 1) = m1 * l1_.com * l1_.com +
              m2 * (l1_.length * l1_.length + l2_.com * l2_.com +
                    2 * l1_.length * l2_.com * c2) +
              l1_.inertia + l2_.inertia;
    d(1, 2) = m2 * (l2_.com * l2_.com + l1_.length * l2_.com * c2) + l2_.inertia;
    d(2, 2) = m2 * l2_.com * l2_.com + l2_.inertia;
    d(1, 0) = d(0, 1);
    d(2, 0) = d(0, 2);
    d(2, 1) = d(1, 2);
    return d;
  }

  // dD/dq_k for k = 0..2.
  std::vector<MatrixXd> mass_matrix_partials(const VectorXd& q) const {
    check_size(q);
    const double s1 = std::sin(q(1));
    const double s12 = std::sin(q(1) + q(2));
    const double s2 = std::sin(q(2));
    const double m1 = l1_.mass;
    const double m2 = l2_.mass;
    std::vector<MatrixXd> dD(3, MatrixXd::Zero(3, 3));
    // q1
    dD[1](0, 1) = -m1 * l1_.com * s1 - m2 * (l1_.length * s1 + l2_.com * s12);
    dD[1](0, 2) = -m2 * l2_.com * s12;
    // q2
    dD[2](0, 1) = -m2 * l2_.com * s12;
    dD[2](0, 2) = -m2 * l2_.com * s12;
    dD[2](1, 1) = -2 * m2 * l1_.length * l2_.com * s2;
    dD[2](1, 2) = -m2 * l1_.length * l2_.com * s2;
    for (auto& m : dD) {
      m(1, 0) = m(0, 1);
      m(2, 0) = m(0, 2);
      m(2, 1) = m(1, 2);
    }
    return dD;
  }

  VectorXd coriolis(const VectorXd& q, const VectorXd& qd) const override {
    return detail::christoffel_bias(mass_matrix_partials(q), qd);
  }

  VectorXd gravity(const VectorXd& q) const override {
    check_size(q);
    const double c1 = std::cos(q(1));
    const double c12 = std::cos(q(1) + q(2));
    VectorXd gv(3);
    gv(0) = total_mass() * g_;
    gv(1) = g_ * (l1_.mass * l1_.com * c1 +
                  l2_.mass * (l1_.length * c1 + l2_.com * c12));
    gv(2) = g_ * l2_.mass * l2_.com * c12;
    return gv;
  }

  int contact_points() const override { return 1; }
  int contact_point_dim() const override { return 2; }

  MatrixXd contact_jacobian(const VectorXd& q) const override {
    return task_jacobian(q);
  }

  VectorXd contact_bias(const VectorXd& q, const VectorXd& qd) const override {
    check_size(q);
    const double w1 = qd(1);
    const double w12 = qd(1) + qd(2);
    const double a = q(1);
    const double b = q(1) + q(2);
    VectorXd out(2);
    out(0) = -l1_.length * std::cos(a) * w1 * w1 -
             l2_.length * std::cos(b) * w12 * w12;
    out(1) = -l1_.length * std::sin(a) * w1 * w1 -
             l2_.length * std::sin(b) * w12 * w12;
    return out;
  }

  // Foot position in the world.
  VectorXd task_position(const VectorXd& q) const override {
    check_size(q);
    const double a = q(1);
    const double b = q(1) + q(2);
    return Eigen::Vector2d(
        l1_.length * std::cos(a) + l2_.length * std::cos(b),
        q(0) + l1_.length * std::sin(a) + l2_.length * std::sin(b));
  }

  MatrixXd task_jacobian(const VectorXd& q) const override {
    check_size(q);
    const double a = q(1);
    const double b = q(1) + q(2);
    MatrixXd j(2, 3);
    j << 0.0, -l1_.length * std::sin(a) - l2_.length * std::sin(b),
        -l2_.length * std::sin(b), 1.0,
        l1_.length * std::cos(a) + l2_.length * std::cos(b),
        l2_.length * std::cos(b);
    return j;
  }

 private:
  double m0_;
  LinkParams l1_;
  LinkParams l2_;
  double g_;
};

}  // namespace trayguard
