#pragma once

#include <Eigen/Dense>

namespace rilo {

// Rigid SE(3) transform: x ↦ R·x + t.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
};

// ‖RᵀR − I‖_∞ < 1e-9 and det(R) within 1e-9 of +1.
bool is_valid_pose(const Pose& p);

// Composition: apply(compose(a, b), x) == apply(a, apply(b, x)).
Pose compose(const Pose& a, const Pose& b);

Pose inverse(const Pose& p);

inline Eigen::Vector3d apply(const Pose& p, const Eigen::Vector3d& x) {
  return p.rotation * x + p.translation;
}

// Rotation about +z by `yaw` radians plus an optional translation.
Pose make_yaw(double yaw, const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

// Rotation matrix for the axis-angle vector w (exact exponential; ‖w‖ = angle).
Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& w);

// Axis-angle vector of R; inverse of rotation_exp (the angle lands in [0, π]).
Eigen::Vector3d rotation_log(const Eigen::Matrix3d& R);

// Rotation angle of R in radians: acos((tr R − 1)/2) with the argument clamped.
double rotation_angle(const Eigen::Matrix3d& R);

// Unit quaternion, scalar first, canonicalized to the a ≥ 0 hemisphere.
struct UnitQuaternion {
  double a = 1.0, b = 0.0, c = 0.0, d = 0.0;

  Eigen::Vector3d vector_part() const { return {b, c, d}; }
  double norm() const;
};

UnitQuaternion quat_from_pose(const Pose& p);

Eigen::Matrix3d quat_to_rotation(const UnitQuaternion& q);

// Rebuild a unit quaternion from its vector part (b, c, d), filling the scalar
// as +√(1 − ‖v‖²). Inputs with ‖v‖ > 1 (e.g. raw network output) are projected
// onto the unit sphere with a = 0; *clamped reports whether that happened.
UnitQuaternion quat_recover(const Eigen::Vector3d& v, bool* clamped = nullptr);

}  // namespace rilo
