#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "rilo/pose.hpp"

namespace rilo {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Accumulated normal equations of the linearized point-pair alignment. Each
// pair (x, y) contributes a rank-structured 6x6 block Q_i and 6-vector q_i;
// see accumulate_pair for the exact entries.
struct TwistSystem {
  Matrix6d Q_sum = Matrix6d::Zero();
  Vector6d q_sum = Vector6d::Zero();
  std::size_t count = 0;
};

// Adds one correspondence: x in the earlier frame, y its match in the later
// frame. Entries follow the published layout verbatim:
//
//   Q_i = [ M Mt   M ]      with M = [  x2 -x1  0 ]
//         [ Mt     I ]               [ -x3  0  x1 ]
//                                    [  0  x3 -x2 ]
//
//   q_i = ( y1*x2 - y2*x1,  -y1*x3 + y3*x1,  y2*x3 - y3*x2,
//           x1 - y1,  x2 - y2,  x3 - y3 )
//
// As printed, q_i's first three entries carry the opposite sign from the
// normal-equations vector Mt*(x - y) that the block structure of Q_i implies
// (the last three match). solve_twist compensates; accumulate_pair stays
// faithful to the published form so the stored system is externally checkable.
void accumulate_pair(TwistSystem& system, const Eigen::Vector3d& x, const Eigen::Vector3d& y);

// Solved motion parameters: rotation angles about the x, y, z axes
// (axis-angle vector (alpha, beta, gamma)) and a translation.
struct TwistParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  bool linearization_valid = true;  // all |angles| < pi/4

  Eigen::Vector3d angles() const { return {alpha, beta, gamma}; }
};

struct TwistSolveOptions {
  double max_condition = 1e12;  // reject Q_sum beyond this condition number
};

// Raw minimizer t of the accumulated quadratic (1/2) t'Qt + q~'t, where q~ is
// q_sum with the first three entries negated (the sign fix noted above).
// Solved by symmetric eigendecomposition; throws DegenerateGeometry when
// count < 3 or Q_sum is singular/ill-conditioned (e.g. collinear pairs).
Vector6d solve_twist_raw(const TwistSystem& system, const TwistSolveOptions& opts = {});

// solve_twist_raw mapped to physical parameters. In the solved vector t the
// rotation block appears in reversed axis order with flipped sign — the M
// matrix above satisfies Mt*theta = u x (cross) with u = (-t2, -t1, -t0) — so
// angles = (-t[2], -t[1], -t[0]) and translation = t[3..5].
TwistParams solve_twist(const TwistSystem& system, const TwistSolveOptions& opts = {});

// Exact pose for the twist: rotation_exp of the axis-angle vector plus the
// literal translation. Agrees with the linearized model to O(|angles|^2).
Pose twist_to_pose(const TwistParams& t);

}  // namespace rilo
