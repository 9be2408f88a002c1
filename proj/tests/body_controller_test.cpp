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

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "trayguard/body_controller.hpp"

namespace trayguard {
namespace {

constexpr double kPi = std::numbers::pi;

// Standing pose: body above the foot, knee bent forward.
VectorXd standing_pose() {
  VectorXd q(3);
  q << 0.45, -kPi / 2 - 0.6, 1.2;
  return q;
}

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

TEST(Ik, CurrentPoseIsFixedPoint) {
  const PlanarTwoLinkLeg model;
  const VectorXd q = Eigen::Vector2d(0.3, 0.8);
  const auto r = ik_references(model, q, model.task_position(q), VectorXd::Zero(2));
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.q, q);
  EXPECT_LE(r.qd.norm(), 1e-15);
}

TEST(Ik, FullyExtended) {
  const PlanarTwoLinkLeg model;
  const double reach = model.link1().length + model.link2().length;
  const auto r = ik_references(model, VectorXd::Zero(2), Eigen::Vector2d(reach, 0),
                               VectorXd::Zero(2));
  EXPECT_LE(r.q.norm(), 1e-12);
}

TEST(Ik, ForwardKinematicsRoundTrip) {
  const PlanarTwoLinkLeg two;
  const PlanarSliderLeg slider;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    // Reachable by construction: FK of a random configuration.
    const VectorXd q_true = Eigen::Vector2d(u(rng) * kPi, 0.3 + 2.4 * std::abs(u(rng)));
    const VectorXd target = two.task_position(q_true);
    const VectorXd guess = q_true + 0.3 * random_vector(rng, 2, 1.0);
    const VectorXd v = random_vector(rng, 2, 0.5);
    const auto r = ik_references(two, guess, target, v);
    EXPECT_LE((two.task_position(r.q) - target).norm(), 1e-6);
    EXPECT_LE((two.task_jacobian(r.q) * r.qd - v).norm(), 1e-5);  // damped

    const VectorXd qs_true = standing_pose() + 0.2 * random_vector(rng, 3, 1.0);
    const VectorXd ts = slider.task_position(qs_true);
    const auto rs = ik_references(slider, standing_pose(), ts, VectorXd::Zero(2));
    EXPECT_LE((slider.task_position(rs.q) - ts).norm(), 1e-6);
  }
}

TEST(Ik, UnreachableFails) {
  const PlanarTwoLinkLeg model;
  try {
    ik_references(model, Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(2.0, 0.0),
                  VectorXd::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIkFailure);
  }
}

TEST(Fbc, StaticStanceBalancesGravity) {
  const PlanarSliderLeg model;
  const ControllerWeights w = ControllerWeights::defaults(model);
  FullBodyController fbc;
  const VectorXd q = standing_pose();
  const VectorXd z = VectorXd::Zero(3);
  const FbcResult r = fbc.solve(model, w, q, z, q, z);
  ASSERT_EQ(r.status, FbcStatus::kOk);
  // The small force weight lets the body sag slightly rather than hold exactly.
  EXPECT_LE(r.qdd.norm(), 1e-2);
  EXPECT_LE(r.dynamics_residual, 1e-8);
  EXPECT_LE(r.contact_residual, 1e-8);
  EXPECT_NEAR(r.force(1), model.total_mass() * model.g(),
              1e-2 * model.total_mass() * model.g());

  // With only the tracking term the pose is held exactly.
  ControllerWeights exact = w;
  exact.W_c.setZero();
  exact.W_tau.setZero();
  const FbcResult r0 = fbc.solve(model, exact, q, z, q, z);
  ASSERT_EQ(r0.status, FbcStatus::kOk);
  EXPECT_LE(r0.qdd.norm(), 1e-6);
  EXPECT_NEAR(r0.force(1), model.total_mass() * model.g(), 1e-6);
  const MatrixXd S = model.selection();
  const VectorXd rhs = model.gravity(q) - model.contact_jacobian(q).transpose() * r0.force;
  EXPECT_LE((S.transpose() * r0.tau - rhs).norm(), 1e-6);
}

TEST(Fbc, RandomStatesSatisfyDynamicsAndFriction) {
  const PlanarSliderLeg model;
  ControllerWeights w = ControllerWeights::defaults(model);
  FullBodyController fbc;
  std::mt19937_64 rng(8);
  int solved = 0;
  for (int k = 0; k < 200; ++k) {
    const VectorXd q = standing_pose() + random_vector(rng, 3, 0.15);
    const VectorXd qd = random_vector(rng, 3, 0.5);
    const VectorXd q_des = q + random_vector(rng, 3, 0.05);
    const VectorXd qd_des = random_vector(rng, 3, 0.2);
    const FbcResult r = fbc.solve(model, w, q, qd, q_des, qd_des);
    ASSERT_EQ(r.status, FbcStatus::kOk) << k;
    ++solved;
    EXPECT_LE(r.dynamics_residual, 1e-8);
    EXPECT_LE(r.contact_residual, 1e-8);
    EXPECT_LE(std::abs(r.force(0)), 0.4 * r.force(1) + 1e-9);
    EXPECT_GE(r.force(1), -1e-9);
    EXPECT_TRUE((r.tau.array() <= w.tau_max.array() + 1e-9).all());
    EXPECT_TRUE((r.tau.array() >= w.tau_min.array() - 1e-9).all());
  }
  EXPECT_EQ(solved, 200);
}

TEST(Fbc, FrictionConeBindsWhenTrackingPullsSideways) {
  const PlanarSliderLeg model;
  ControllerWeights w = ControllerWeights::defaults(model);
  w.W_c = 1e-8 * MatrixXd::Identity(2, 2);
  FullBodyController fbc;
  const VectorXd q = standing_pose();
  const VectorXd z = VectorXd::Zero(3);
  VectorXd qd_des = z;
  qd_des(1) = 5.0;  // strong hip swing request
  const FbcResult r = fbc.solve(model, w, q, z, q, qd_des);
  ASSERT_EQ(r.status, FbcStatus::kOk);
  EXPECT_LE(std::abs(r.force(0)), 0.4 * r.force(1) + 1e-9);
  EXPECT_LE(r.dynamics_residual, 1e-8);
}

TEST(Fbc, TorqueNormMinimalWithHeavyTorqueWeight) {
  const PlanarSliderLeg model;
  ControllerWeights w = ControllerWeights::defaults(model);
  w.W_tau = 1e6 * MatrixXd::Identity(2, 2);
  FullBodyController fbc;
  std::mt19937_64 rng(12);
  const VectorXd q = standing_pose() + random_vector(rng, 3, 0.1);
  const VectorXd qd = random_vector(rng, 3, 0.3);
  const VectorXd q_des = q + random_vector(rng, 3, 0.05);
  const VectorXd qd_des = VectorXd::Zero(3);
  const FbcResult r = fbc.solve(model, w, q, qd, q_des, qd_des);
  ASSERT_EQ(r.status, FbcStatus::kOk);

  const MatrixXd D = model.mass_matrix(q);
  const VectorXd H = model.bias(q, qd);
  const MatrixXd J = model.contact_jacobian(q);
  const VectorXd Jdqd = model.contact_bias(q, qd);
  const MatrixXd S = model.selection();
  // Feasible samples: qdd on the contact manifold, vertical force from the
  // unactuated row, random admissible tangential force, torque from the rest.
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(J);
  const VectorXd qdd_p = -cod.solve(Jdqd);
  const MatrixXd N = Eigen::FullPivLU<MatrixXd>(J).kernel();
  auto cost = [&](const VectorXd& qdd, const VectorXd& tau, const VectorXd& f) {
    const VectorXd e = r.qdd_desired - qdd;
    return e.dot(w.W_qdd * e) + tau.dot(w.W_tau * tau) + f.dot(w.W_c * f);
  };
  const double tau_star2 = r.tau.squaredNorm();
  const double cost_star = cost(r.qdd, r.tau, r.force);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int feasible = 0;
  for (int k = 0; k < 1000; ++k) {
    const VectorXd qdd = qdd_p + N * (5.0 * random_vector(rng, N.cols(), 1.0));
    const VectorXd b = D * qdd + H;
    Eigen::Vector2d f;
    f(1) = b(0);  // J(:,0) = (0, 1)
    f(0) = 0.4 * f(1) * u(rng);
    if (f(1) < 0) continue;
    const VectorXd tau = S * (b - J.transpose() * f);
    if ((tau.array().abs() > 200.0).any()) continue;
    ++feasible;
    EXPECT_LE(cost_star, cost(qdd, tau, f) + 1e-6);
    // Torque weight dominates: any torque saving is paid for by the rest.
    const VectorXd e = r.qdd_desired - qdd;
    EXPECT_LE(tau_star2, tau.squaredNorm() +
                             (e.dot(e) + 1e-4 * f.squaredNorm()) / 1e6 + 1e-9);
  }
  EXPECT_GT(feasible, 500);
}

TEST(Fbc, TightTorqueBoundsAreInfeasible) {
  const PlanarSliderLeg model;
  ControllerWeights w = ControllerWeights::defaults(model);
  w.tau_min = VectorXd::Constant(2, -1e-3);
  w.tau_max = VectorXd::Constant(2, 1e-3);
  FullBodyController fbc;
  VectorXd q = standing_pose();
  q(2) = 0.3;  // knee nearly straight would need little torque; tilt it
  q(1) = -0.4;
  const FbcResult r = fbc.solve(model, w, q, VectorXd::Zero(3), q, VectorXd::Zero(3));
  EXPECT_EQ(r.status, FbcStatus::kInfeasible);
  EXPECT_EQ(to_string(r.status), "controller-infeasible");
}

TEST(Fbc, FixedBaseTwoLink) {
  const PlanarTwoLinkLeg model;
  const ControllerWeights w = ControllerWeights::defaults(model);
  FullBodyController fbc;
  const VectorXd q = Eigen::Vector2d(-0.9, 1.3);
  const FbcResult r = fbc.solve(model, w, q, Eigen::Vector2d(0.2, -0.1), q,
                                VectorXd::Zero(2));
  ASSERT_EQ(r.status, FbcStatus::kOk);
  EXPECT_LE(r.dynamics_residual, 1e-8);
  EXPECT_LE(r.contact_residual, 1e-8);
}

TEST(FrictionCone, FaceCounts) {
  EXPECT_EQ(friction_cone_rows(1, 2, 0.4).rows(), 3);
  EXPECT_EQ(friction_cone_rows(2, 3, 0.4).rows(), 10);
  const MatrixXd rows = friction_cone_rows(1, 3, 0.4);
  // A force on the cone edge satisfies every face.
  const Eigen::Vector3d f(0.4, 0.0, 1.0);
  EXPECT_LE((rows * f).maxCoeff(), 1e-15);
  EXPECT_GT((rows * Eigen::Vector3d(0.41, 0.0, 1.0)).maxCoeff(), 0.0);
  EXPECT_THROW(friction_cone_rows(1, 4, 0.4), Error);
}

TEST(Reference, SemiImplicitEuler) {
  const VectorXd q = Eigen::Vector2d(0.1, -0.2);
  const VectorXd qd = Eigen::Vector2d(0.5, 1.0);
  auto r = integrate_reference(q, qd, VectorXd::Zero(2), 0.01);
  EXPECT_TRUE(r.q.isApprox(q + 0.01 * qd));
  r = integrate_reference(q, VectorXd::Zero(2), VectorXd::Ones(2), 0.01);
  EXPECT_TRUE(r.qd.isApprox(VectorXd::Constant(2, 0.01)));
  EXPECT_TRUE(r.q.isApprox(q + VectorXd::Constant(2, 1e-4)));
  EXPECT_THROW(integrate_reference(q, qd, qd, 0.0), Error);
}

TEST(Reference, HalfStepsDifferAtSecondOrder) {
  const VectorXd q = Eigen::Vector2d(0.1, -0.2);
  const VectorXd qd = Eigen::Vector2d(0.5, 1.0);
  const VectorXd a = Eigen::Vector2d(2.0, -3.0);
  for (double dt : {0.02, 0.01, 0.005}) {
    const auto full = integrate_reference(q, qd, a, dt);
    const auto h1 = integrate_reference(q, qd, a, dt / 2);
    const auto h2 = integrate_reference(h1.q, h1.qd, a, dt / 2);
    // Constant acceleration: the gap is exactly dt^2 a / 4.
    EXPECT_TRUE(((full.q - h2.q) / (dt * dt)).isApprox(a / 4, 1e-9));
  }
}

TEST(Impedance, Examples) {
  ImpedanceGains g{VectorXd::Constant(2, 10.0), VectorXd::Constant(2, 1.0)};
  const VectorXd lo = VectorXd::Constant(2, -5.0);
  const VectorXd hi = VectorXd::Constant(2, 5.0);
  const VectorXd z = VectorXd::Zero(2);
  const VectorXd ff = Eigen::Vector2d(0.3, -0.2);
  auto t = impedance_torque(ff, z, z, z, z, g, lo, hi);
  EXPECT_EQ(t.tau, ff);
  EXPECT_FALSE(t.clamped);
  t = impedance_torque(z, Eigen::Vector2d(0.1, 0.0), z, z, z, g, lo, hi);
  EXPECT_NEAR(t.tau(0), 1.0, 1e-15);
  EXPECT_NEAR(t.tau(1), 0.0, 1e-15);
  t = impedance_torque(z, Eigen::Vector2d(1.0, -1.0), z, z, z, g, lo, hi);
  EXPECT_TRUE(t.clamped);
  EXPECT_EQ(t.tau, Eigen::Vector2d(5.0, -5.0));
  ImpedanceGains bad{VectorXd::Constant(2, 0.0), VectorXd::Constant(2, 1.0)};
  EXPECT_THROW(impedance_torque(z, z, z, z, z, bad, lo, hi), Error);
}

TEST(Transition, GravityFeedforwardPlusPd) {
  const PlanarTwoLinkLeg model;
  ImpedanceGains g{VectorXd::Constant(2, 50.0), VectorXd::Constant(2, 2.0)};
  const VectorXd q = Eigen::Vector2d(0.0, 0.0);
  const VectorXd z = VectorXd::Zero(2);
  const auto l1 = model.link1();
  const auto l2 = model.link2();
  VectorXd tau = transition_torque(model, q, z, q, z, g);
  EXPECT_NEAR(tau(0), (l1.mass * l1.com + l2.mass * (l1.length + l2.com)) * 9.81, 1e-12);
  EXPECT_NEAR(tau(1), l2.mass * l2.com * 9.81, 1e-12);

  const PlanarTwoLinkLeg weightless({}, {}, 0.0);
  tau = transition_torque(weightless, Eigen::Vector2d(0.1, 0.0), Eigen::Vector2d(0.0, 1.0),
                          q, z, g);
  EXPECT_NEAR(tau(0), 5.0, 1e-12);
  EXPECT_NEAR(tau(1), 2.0, 1e-12);

  // Slider: only the actuated rows, gravity torque included.
  const PlanarSliderLeg slider;
  const VectorXd qs = standing_pose();
  tau = transition_torque(slider, qs, VectorXd::Zero(3), qs, VectorXd::Zero(3), g);
  EXPECT_TRUE(tau.isApprox(slider.gravity(qs).tail(2)));
}

TEST(TransitionTrajectory, InterpolatesAndValidates) {
  const nlohmann::json j = nlohmann::json::parse(R"([
    {"t": 0.0, "q": [0.0, 1.0], "qd": [0.0, 0.0]},
    {"t": 2.0, "q": [1.0, 3.0], "qd": [1.0, 0.0]}])");
  const auto traj = TransitionTrajectory::from_json(j);
  EXPECT_DOUBLE_EQ(traj.duration(), 2.0);
  const auto s = traj.sample(0.5);
  EXPECT_TRUE(s.q.isApprox(Eigen::Vector2d(0.25, 1.5)));
  EXPECT_TRUE(s.qd.isApprox(Eigen::Vector2d(0.25, 0.0)));
  EXPECT_TRUE(traj.sample(-1.0).q.isApprox(Eigen::Vector2d(0.0, 1.0)));
  EXPECT_TRUE(traj.sample(9.0).q.isApprox(Eigen::Vector2d(1.0, 3.0)));
  const nlohmann::json bad = nlohmann::json::parse(R"([
    {"t": 1.0, "q": [0.0], "qd": [0.0]},
    {"t": 1.0, "q": [1.0], "qd": [0.0]}])");
  EXPECT_THROW(TransitionTrajectory::from_json(bad), Error);
}

}  // namespace
}  // namespace trayguard
