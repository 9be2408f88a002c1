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

#include <cstdio>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "trayguard/io.hpp"
#include "trayguard/qp.hpp"

namespace trayguard {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double complementarity(const QpProblem& p, const QpSolution& s) {
  const VectorXd Ax = p.A_in * s.x;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.num_inequalities(); ++i) {
    const double y = s.y_in(i);
    if (y < 0) worst = std::max(worst, -y * std::abs(Ax(i) - p.lower(i)));
    if (y > 0) worst = std::max(worst, y * std::abs(p.upper(i) - Ax(i)));
  }
  return worst;
}

double stationarity(const QpProblem& p, const QpSolution& s) {
  return (p.Q * s.x + p.q + p.A_eq.transpose() * s.y_eq +
          p.A_in.transpose() * s.y_in)
      .cwiseAbs()
      .maxCoeff();
}

TEST(QpTest, ProjectionOntoHyperplane) {
  QpProblem p(2.0 * MatrixXd::Identity(4, 4), VectorXd::Zero(4));
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(4);
  row(0) = 1.0;
  p.add_equality(row, 1.0);
  const QpSolution s = solve_qp(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 1.0, 1e-9);
  EXPECT_NEAR(s.x.tail(3).norm(), 0.0, 1e-9);
}

TEST(QpTest, UnconstrainedMinimizer) {
  const QpProblem p(MatrixXd::Identity(2, 2), -VectorXd::Ones(2));
  const QpSolution s = solve_qp(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 1.0, 1e-9);
  EXPECT_NEAR(s.x(1), 1.0, 1e-9);
  EXPECT_NEAR(s.objective, -1.0, 1e-9);
}

TEST(QpTest, BoxConstrainedMatchesEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    QpProblem p = testing::random_qp(rng, 6, 0, 0);
    std::uniform_int_distribution<int> pick(0, 5);
    for (int b = 0; b < 4; ++b) {
      Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(6);
      e(pick(rng)) = 1.0;
      p.add_inequality(e, -0.3, 0.3);
    }
    const auto oracle = testing::enumerate_active_sets(p);
    ASSERT_TRUE(oracle.found);
    const QpSolution s = solve_qp(p);
    ASSERT_TRUE(s.optimal()) << "trial " << trial;
    EXPECT_NEAR(s.objective, oracle.objective, 1e-6);
    EXPECT_LE((s.x - oracle.x).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(QpTest, KktConditionsOnRandomProblems) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(2, 10);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng);
    const int me = std::min(n - 1, trial % 3);
    const QpProblem p = testing::random_qp(rng, n, me, 8 - me);
    const QpSolution s = solve_qp(p);
    ASSERT_TRUE(s.optimal()) << "trial " << trial;
    EXPECT_LE(stationarity(p, s), 1e-5);
    EXPECT_LE(complementarity(p, s), 1e-5);
    EXPECT_LE(s.primal_residual, 1e-6);
  }
}

TEST(QpTest, OptimumBeatsRandomFeasibleSamples) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const QpProblem p = testing::random_qp(rng, 5, 0, 6);
    const QpSolution s = solve_qp(p);
    ASSERT_TRUE(s.optimal());
    int feasible = 0;
    while (feasible < 1000) {
      VectorXd x(5);
      for (int i = 0; i < 5; ++i) x(i) = s.x(i) + 0.2 * normal(rng);
      const VectorXd Ax = p.A_in * x;
      if (((Ax - p.lower).array() < 0).any() ||
          ((Ax - p.upper).array() > 0).any()) {
        continue;
      }
      ++feasible;
      EXPECT_LE(s.objective, p.objective(x) + 1e-9);
    }
  }
}

TEST(QpTest, InfeasibleProblemReportsStatus) {
  QpProblem p(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  Eigen::RowVectorXd row(2);
  row << 1.0, 1.0;
  p.add_inequality(row, 2.0, kInf);
  p.add_inequality(row, -kInf, 1.0);
  const QpSolution s = solve_qp(p);
  EXPECT_EQ(s.status, QpStatus::kPrimalInfeasible);
}

TEST(QpTest, InconsistentEqualitiesReportInfeasible) {
  QpProblem p(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  Eigen::RowVectorXd row(2);
  row << 1.0, 0.0;
  p.add_equality(row, 1.0);
  p.add_equality(row, 2.0);
  const QpSolution s = solve_qp(p);
  EXPECT_EQ(s.status, QpStatus::kPrimalInfeasible);
}

TEST(QpTest, IterationCapReturnsBestIterate) {
  std::mt19937_64 rng(9);
  const QpProblem p = testing::random_qp(rng, 6, 0, 6);
  QpSettings settings;
  settings.max_iter = 3;
  settings.polish = false;
  QpSolver solver(settings);
  const QpSolution s = solver.solve(p);
  EXPECT_EQ(s.status, QpStatus::kMaxIterations);
  EXPECT_EQ(s.iterations, 3);
  EXPECT_EQ(s.x.size(), 6);
}

TEST(QpTest, DeterministicIterates) {
  std::mt19937_64 rng(21);
  const QpProblem p = testing::random_qp(rng, 8, 1, 6);
  QpSettings settings;
  settings.polish = false;
  QpSolver a(settings);
  QpSolver b(settings);
  const QpSolution sa = a.solve(p);
  const QpSolution sb = b.solve(p);
  ASSERT_EQ(sa.iterations, sb.iterations);
  for (Eigen::Index i = 0; i < sa.x.size(); ++i) {
    EXPECT_EQ(sa.x(i), sb.x(i));  // bit-identical
  }
}

TEST(QpTest, RejectsIndefiniteOrAsymmetricHessian) {
  MatrixXd Q(2, 2);
  Q << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(solve_qp(QpProblem(Q, VectorXd::Zero(2))), Error);
  Q << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(solve_qp(QpProblem(Q, VectorXd::Zero(2))), Error);
}

TEST(QpTest, MinEigenvalueEstimate) {
  MatrixXd Q(3, 3);
  Q << 4, 1, 0, 1, 3, 0, 0, 0, 0.5;
  const double exact =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(Q).eigenvalues().minCoeff();
  EXPECT_NEAR(min_eigenvalue_estimate(Q, 200), exact, 1e-6);
}

TEST(QpTest, JsonDumpReloadsToSameSolution) {
  std::mt19937_64 rng(2);
  const QpProblem p = testing::random_qp(rng, 4, 1, 3);
  const auto path =
      (std::filesystem::temp_directory_path() / "trayguard_qp_dump.json")
          .string();
  QpSettings settings;
  settings.dump_path = path;
  QpSolver solver(settings);
  const QpSolution s1 = solver.solve(p);
  const QpProblem reloaded = qp_from_json(read_json_file(path));
  const QpSolution s2 = solve_qp(reloaded);
  EXPECT_NEAR(s1.objective, s2.objective, 1e-9);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace trayguard
