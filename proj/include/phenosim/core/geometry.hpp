#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace phenosim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid transform mapping a body/camera frame into its parent frame.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_dir(const Vec3& d) const { return rotation * d; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }

  Pose compose(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  bool rotation_valid(double tol = 1e-9) const {
    Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    return err.cwiseAbs().maxCoeff() < tol &&
           std::abs(rotation.determinant() - 1.0) < tol;
  }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Ray(const Vec3& o, const Vec3& d) : origin(o), direction(d) {
    double n = direction.norm();
    if (std::abs(n - 1.0) > 1e-9) {
      if (n <= 0.0) throw std::invalid_argument("ray direction is zero");
      direction /= n;
    }
  }
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool contains_strict(const Vec3& p) const {
    return p.x() > min.x() && p.x() < max.x() && p.y() > min.y() &&
           p.y() < max.y() && p.z() > min.z() && p.z() < max.z();
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};

// Look-at camera pose: optical axis +z toward target, +x right, +y down.
inline Pose look_at(const Vec3& eye, const Vec3& target,
                    const Vec3& up_ref = Vec3(0, 0, 1)) {
  Vec3 z = (target - eye).normalized();
  Vec3 y = -up_ref + up_ref.dot(z) * z;
  if (y.norm() < 1e-8) {
    Vec3 alt(0, 1, 0);
    y = -alt + alt.dot(z) * z;
  }
  y.normalize();
  Vec3 x = y.cross(z);
  Pose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.translation = eye;
  return pose;
}

inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace phenosim
