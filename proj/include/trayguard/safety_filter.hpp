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

// Reduced-order CBF safety filter. The base is modelled as a planar single
// integrator phi_dot = nu (drift zero, identity input map); two barriers keep
// it outside the padded manway ellipse and inside the tray disk:
//
//   h1(phi) = phi^T A phi + B phi + c
//   h2(phi) = -|phi - tray_center|^2 + (r_p - eps)^2
//
// and the filter solves
//
//   min |k_d(phi) - nu|^2  s.t.  grad h_i^T nu >= -gamma_i h_i + m_i,
//                                nu_min <= nu <= nu_max.
//
// m_i is a sampled-data margin: with a zero-order hold over `sample_period`,
// h(phi + nu dt) = h + dt grad h^T nu + dt^2 nu^T M nu for the barrier's
// Hessian 2M, so a barrier with negative curvature needs
// m_i = dt * max(0, -lambda_min(M)) * max |nu|^2 to stay nonnegative at the
// next tick. The ellipse is convex and gets m_1 = 0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string_view>
#include <vector>

#include "trayguard/error.hpp"
#include "trayguard/geometry.hpp"
#include "trayguard/qp.hpp"

namespace trayguard {

inline double h1(const TrayWorld& world, int layer, const Vec2& p) {
  return world.ellipse(layer).value(p);
}

inline double h2(const TrayWorld& world, const Vec2& p) {
  const double r = world.safe_radius();
  return -(p - world.tray_center).squaredNorm() + r * r;
}

struct ReducedModel {
  Vec2 nu_min = Vec2::Constant(-0.3);
  Vec2 nu_max = Vec2::Constant(0.3);
  double sample_period = 0.0;  // 0 = continuous-time constraint only

  void validate() const {
    if (!(nu_min.array() < nu_max.array()).all()) {
      throw Error(ErrorCode::kInvalidParameter, "nu_min must be < nu_max");
    }
    if (!(sample_period >= 0.0)) {
      throw Error(ErrorCode::kInvalidParameter, "sample period must be >= 0");
    }
  }

  double max_speed_squared() const {
    return nu_min.cwiseAbs().cwiseMax(nu_max.cwiseAbs()).squaredNorm();
  }

  Vec2 clamp(const Vec2& v) const { return v.cwiseMax(nu_min).cwiseMin(nu_max); }
};

enum class BarrierKind { kManwayEllipse, kTrayDisk };

struct BarrierSpec {
  BarrierKind kind = BarrierKind::kManwayEllipse;
  EllipseParams ellipse;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double gamma = 1.0;  // alpha(h) = gamma * h

  static BarrierSpec manway(const TrayWorld& world, int layer,
                            double gamma = 1.0) {
    BarrierSpec b;
    b.kind = BarrierKind::kManwayEllipse;
    b.ellipse = world.ellipse(layer);
    b.gamma = gamma;
    return b;
  }

  static BarrierSpec tray(const TrayWorld& world, double gamma = 1.0) {
    BarrierSpec b;
    b.kind = BarrierKind::kTrayDisk;
    b.center = world.tray_center;
    b.radius = world.safe_radius();
    b.gamma = gamma;
    return b;
  }

  double value(const Vec2& p) const {
    if (kind == BarrierKind::kManwayEllipse) return ellipse.value(p);
    return -(p - center).squaredNorm() + radius * radius;
  }

  Vec2 gradient(const Vec2& p) const {
    if (kind == BarrierKind::kManwayEllipse) return ellipse.gradient(p);
    return -2.0 * (p - center);
  }

  // Smallest eigenvalue of M where h(p + d) = h(p) + grad^T d + d^T M d.
  double curvature_floor() const {
    if (kind == BarrierKind::kManwayEllipse) {
      return Eigen::SelfAdjointEigenSolver<Mat2>(ellipse.A).eigenvalues().minCoeff();
    }
    return -1.0;
  }
};

struct ReferenceController {
  Vec2 goal = Vec2::Zero();  // xi
  Vec2 gains = Vec2::Constant(1.0);

  void validate() const {
    if (!(gains.array() > 0.0).all()) {
      throw Error(ErrorCode::kInvalidParameter, "reference gains must be > 0");
    }
  }

  Vec2 command(const Vec2& p) const {
    return gains.cwiseProduct(goal - p);
  }
};

enum class FilterStatus { kOk, kInfeasible };

inline std::string_view to_string(FilterStatus s) {
  return s == FilterStatus::kOk ? "ok" : "filter-infeasible";
}

struct FilterDiagnostics {
  std::vector<double> h;
  std::vector<bool> active;
  Vec2 nominal = Vec2::Zero();
  FilterStatus status = FilterStatus::kOk;
  QpStatus qp_status = QpStatus::kOptimal;
  int iterations = 0;
};

struct FilterResult {
  VelocityCommand command;
  FilterDiagnostics diagnostics;
};

// Holds a solver workspace; use one instance per thread.
class SafetyFilter {
 public:
  SafetyFilter() {
    QpSettings s;
    s.tol = 1e-9;
    solver_ = QpSolver(s);
  }

  FilterResult filter(const ReducedModel& model,
                      const std::vector<BarrierSpec>& barriers,
                      const ReferenceController& ref, const Vec2& p) {
    model.validate();
    ref.validate();
    FilterResult out;
    auto& diag = out.diagnostics;
    diag.nominal = ref.command(p);

    QpProblem qp(2.0 * Eigen::MatrixXd::Identity(2, 2), -2.0 * diag.nominal);
    qp.offset = diag.nominal.squaredNorm();
    const double speed2 = model.max_speed_squared();
    for (const auto& b : barriers) {
      if (!(b.gamma > 0.0)) {
        throw Error(ErrorCode::kInvalidParameter, "class-K gain must be > 0");
      }
      const double h = b.value(p);
      const Vec2 g = b.gradient(p);
      const double margin =
          model.sample_period * std::max(0.0, -b.curvature_floor()) * speed2;
      diag.h.push_back(h);
      qp.add_inequality(g.transpose(), -b.gamma * h + margin, kInf);
    }
    qp.add_inequality(Eigen::RowVector2d(1.0, 0.0), model.nu_min.x(),
                      model.nu_max.x());
    qp.add_inequality(Eigen::RowVector2d(0.0, 1.0), model.nu_min.y(),
                      model.nu_max.y());

    const QpSolution s = solver_.solve(qp);
    diag.qp_status = s.status;
    diag.iterations = s.iterations;
    if (!s.optimal()) {
      diag.status = FilterStatus::kInfeasible;
      diag.active.assign(barriers.size(), false);
      out.command.linear = Vec2::Zero();
      return out;
    }
    out.command.linear = model.clamp(s.x.head<2>());
    for (std::size_t i = 0; i < barriers.size(); ++i) {
      diag.active.push_back(std::abs(s.y_in(static_cast<Eigen::Index>(i))) > 1e-12);
    }
    return out;
  }

 private:
  QpSolver solver_;
};

// Proportional heading control, saturated.
inline double heading_command(double yaw, double yaw_goal, double gain = 1.0,
                              double max_rate = 0.5) {
  return std::clamp(gain * wrap_angle(yaw_goal - yaw), -max_rate, max_rate);
}

}  // namespace trayguard
