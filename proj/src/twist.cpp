#include "rilo/twist.hpp"

#include <cmath>
#include <string>

#include "rilo/errors.hpp"

namespace rilo {

void accumulate_pair(TwistSystem& system, const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
  const double x1 = x(0), x2 = x(1), x3 = x(2);
  const double y1 = y(0), y2 = y(1), y3 = y(2);

  Matrix6d Q;
  // clang-format off
  Q << x1*x1 + x2*x2, -x2*x3,         -x1*x3,          x2, -x1,  0,
       -x2*x3,         x1*x1 + x3*x3, -x1*x2,         -x3,  0,   x1,
       -x1*x3,        -x1*x2,          x2*x2 + x3*x3,  0,   x3, -x2,
        x2,           -x3,             0,              1,   0,   0,
       -x1,            0,              x3,             0,   1,   0,
        0,             x1,            -x2,             0,   0,   1;
  // clang-format on
  Vector6d q;
  q << y1 * x2 - y2 * x1,
      -y1 * x3 + y3 * x1,
       y2 * x3 - y3 * x2,
       x1 - y1,
       x2 - y2,
       x3 - y3;

  system.Q_sum += Q;
  system.q_sum += q;
  system.count += 1;
}

Vector6d solve_twist_raw(const TwistSystem& system, const TwistSolveOptions& opts) {
  if (system.count < 3)
    throw DegenerateGeometry("solve_twist: need at least 3 accumulated pairs, have " +
                             std::to_string(system.count));

  Vector6d q = system.q_sum;
  q.head<3>() = -q.head<3>();  // align the published q with Q's block structure

  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(system.Q_sum);
  if (eig.info() != Eigen::Success)
    throw DegenerateGeometry("solve_twist: eigendecomposition failed");
  const Vector6d& lam = eig.eigenvalues();  // ascending
  const double lmax = lam(5);
  if (!(lmax > 0.0) || !(lam(0) > lmax / opts.max_condition))
    throw DegenerateGeometry(
        "solve_twist: normal equations singular or ill-conditioned (eigenvalues " +
        std::to_string(lam(0)) + " .. " + std::to_string(lmax) + ")");

  const Vector6d proj = eig.eigenvectors().transpose() * (-q);
  return eig.eigenvectors() * proj.cwiseQuotient(lam);
}

TwistParams solve_twist(const TwistSystem& system, const TwistSolveOptions& opts) {
  const Vector6d t = solve_twist_raw(system, opts);
  TwistParams p;
  p.alpha = -t(2);
  p.beta = -t(1);
  p.gamma = -t(0);
  p.b = t.tail<3>();
  constexpr double kQuarterPi = M_PI / 4.0;
  p.linearization_valid = std::abs(p.alpha) < kQuarterPi && std::abs(p.beta) < kQuarterPi &&
                          std::abs(p.gamma) < kQuarterPi;
  return p;
}

Pose twist_to_pose(const TwistParams& t) {
  Pose p;
  p.rotation = rotation_exp(t.angles());
  p.translation = t.b;
  return p;
}

}  // namespace rilo
