#include "rilo/pose.hpp"

#include <algorithm>
#include <cmath>

namespace rilo {

bool is_valid_pose(const Pose& p) {
  const Eigen::Matrix3d err = p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() >= 1e-9) return false;
  if (std::abs(p.rotation.determinant() - 1.0) >= 1e-9) return false;
  return p.translation.allFinite();
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose inverse(const Pose& p) {
  const Eigen::Matrix3d rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

Pose make_yaw(double yaw, const Eigen::Vector3d& translation) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  p.translation = translation;
  return p;
}

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-14) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Eigen::Vector3d rotation_log(const Eigen::Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

double rotation_angle(const Eigen::Matrix3d& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double UnitQuaternion::norm() const { return std::sqrt(a * a + b * b + c * c + d * d); }

UnitQuaternion quat_from_pose(const Pose& p) {
  const Eigen::Quaterniond q(p.rotation);
  UnitQuaternion out{q.w(), q.x(), q.y(), q.z()};
  if (out.a < 0.0) {
    out.a = -out.a;
    out.b = -out.b;
    out.c = -out.c;
    out.d = -out.d;
  }
  return out;
}

Eigen::Matrix3d quat_to_rotation(const UnitQuaternion& q) {
  return Eigen::Quaterniond(q.a, q.b, q.c, q.d).toRotationMatrix();
}

UnitQuaternion quat_recover(const Eigen::Vector3d& v, bool* clamped) {
  const double n2 = v.squaredNorm();
  if (n2 > 1.0) {
    if (clamped) *clamped = true;
    const Eigen::Vector3d u = v / std::sqrt(n2);
    return {0.0, u.x(), u.y(), u.z()};
  }
  if (clamped) *clamped = false;
  return {std::sqrt(1.0 - n2), v.x(), v.y(), v.z()};
}

}  // namespace rilo
