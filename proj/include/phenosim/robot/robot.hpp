#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "phenosim/core/geometry.hpp"

namespace phenosim {

using Vec2 = Eigen::Vector2d;

class KinematicsError : public std::runtime_error {
 public:
  enum class Code { Unreachable, JointLimit, OutOfWorkspace };
  KinematicsError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Planar CDPR in the vertical plane x = plane offset. In-plane coordinates
// (u, v) map to world (y, z); gravity acts along -v. The doubled cable pairs
// share a motor, so the model carries 4 effective cables.
struct CdprConfig {
  std::array<Vec2, 4> anchors = {Vec2(0.0, 0.0), Vec2(2.9, 0.0),
                                 Vec2(2.9, 2.3), Vec2(0.0, 2.3)};
  std::array<Vec2, 4> attachments = {Vec2(-0.05, -0.05), Vec2(0.05, -0.05),
                                     Vec2(0.05, 0.05), Vec2(-0.05, 0.05)};
  Vec2 workspace_min = Vec2(0.15, 0.15);
  Vec2 workspace_max = Vec2(2.75, 2.15);
  double min_tension_n = 5.0;
  double max_tension_n = 200.0;
  double platform_mass_kg = 2.0;  // platform plus lumped arm mass

  bool in_workspace(const Vec2& p) const {
    return p.x() >= workspace_min.x() && p.x() <= workspace_max.x() &&
           p.y() >= workspace_min.y() && p.y() <= workspace_max.y();
  }
};

inline std::array<double, 4> cdpr_ik(const Vec2& platform,
                                     const CdprConfig& cfg) {
  if (!cfg.in_workspace(platform))
    throw KinematicsError(KinematicsError::Code::OutOfWorkspace,
                          "platform outside CDPR workspace");
  std::array<double, 4> lengths;
  for (int i = 0; i < 4; ++i)
    lengths[i] = (cfg.anchors[i] - (platform + cfg.attachments[i])).norm();
  return lengths;
}

// Static force/moment balance A t = w solved for the minimum-norm tension
// vector within bounds. The 3x4 system has a one-dimensional null space, so
// the bounded problem reduces to clamping a scalar. Infeasible is a value.
inline std::optional<std::array<double, 4>> cable_tensions(
    const Vec2& platform, const CdprConfig& cfg) {
  if (!cfg.in_workspace(platform))
    throw KinematicsError(KinematicsError::Code::OutOfWorkspace,
                          "platform outside CDPR workspace");
  Eigen::Matrix<double, 3, 4> A;
  for (int i = 0; i < 4; ++i) {
    Vec2 att = cfg.attachments[i];
    Vec2 dir = cfg.anchors[i] - (platform + att);
    double len = dir.norm();
    if (len < 1e-12) return std::nullopt;
    dir /= len;
    A(0, i) = dir.x();
    A(1, i) = dir.y();
    A(2, i) = att.x() * dir.y() - att.y() * dir.x();
  }
  Eigen::Vector3d wrench(0.0, cfg.platform_mass_kg * 9.81, 0.0);

  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(
      A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) < 1e-10) return std::nullopt;  // degenerate pose
  Eigen::Vector4d t_min_norm = svd.solve(wrench);
  Eigen::Vector4d null_dir = svd.matrixV().col(3);

  // feasible interval for t = t_min_norm + s * null_dir
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    double n = null_dir(i);
    if (std::abs(n) < 1e-14) {
      if (t_min_norm(i) < cfg.min_tension_n - 1e-9 ||
          t_min_norm(i) > cfg.max_tension_n + 1e-9)
        return std::nullopt;
      continue;
    }
    double a = (cfg.min_tension_n - t_min_norm(i)) / n;
    double b = (cfg.max_tension_n - t_min_norm(i)) / n;
    if (a > b) std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  if (lo > hi) return std::nullopt;
  double s = std::clamp(-t_min_norm.dot(null_dir) / null_dir.squaredNorm(),
                        lo, hi);
  Eigen::Vector4d t = t_min_norm + s * null_dir;
  return std::array<double, 4>{t(0), t(1), t(2), t(3)};
}

// 4DoF arm: base yaw about the mount axis, then shoulder/elbow/wrist pitch
// joints in the yawed plane. Arm-base frame: +z along the mount boresight
// (toward the tower), all joints zero puts the camera at full reach on +z
// with the optical axis along +z.
struct ArmConfig {
  std::array<double, 3> link_lengths_m = {0.107, 0.194, 0.032};
  std::array<std::array<double, 2>, 4> joint_limits_rad = {{
      {-kPi, kPi},           // base yaw
      {-2.967, 2.967},       // shoulder
      {-2.967, 2.967},       // elbow
      {-2.967, 2.967},       // wrist
  }};
  double reach() const {
    return link_lengths_m[0] + link_lengths_m[1] + link_lengths_m[2];
  }
};

struct JointState {
  double base_yaw = 0.0;
  double shoulder = 0.0;
  double elbow = 0.0;
  double wrist = 0.0;

  std::array<double, 4> as_array() const {
    return {base_yaw, shoulder, elbow, wrist};
  }
};

inline void check_joint_limits(const JointState& joints,
                               const ArmConfig& cfg) {
  auto q = joints.as_array();
  for (int i = 0; i < 4; ++i)
    if (q[i] < cfg.joint_limits_rad[i][0] - 1e-12 ||
        q[i] > cfg.joint_limits_rad[i][1] + 1e-12)
      throw KinematicsError(KinematicsError::Code::JointLimit,
                            "joint " + std::to_string(i) + " out of limits");
}

// Camera pose in the arm-base frame. Optical axis +z of the returned pose;
// the camera x axis is the pitch axis (roll is mechanism-determined).
inline Pose arm_fk(const JointState& joints, const ArmConfig& cfg) {
  check_joint_limits(joints, cfg);
  const auto& len = cfg.link_lengths_m;
  double q1 = joints.shoulder, q12 = q1 + joints.elbow,
         q123 = q12 + joints.wrist;
  double r = len[0] * std::sin(q1) + len[1] * std::sin(q12) +
             len[2] * std::sin(q123);
  double z = len[0] * std::cos(q1) + len[1] * std::cos(q12) +
             len[2] * std::cos(q123);
  Mat3 yaw = rot_z(joints.base_yaw);
  Pose pose;
  pose.translation = yaw * Vec3(0.0, r, z);
  Vec3 optical = yaw * Vec3(0.0, std::sin(q123), std::cos(q123));
  Vec3 pitch_axis = yaw * Vec3(1.0, 0.0, 0.0);
  pose.rotation.col(0) = pitch_axis;
  pose.rotation.col(1) = optical.cross(pitch_axis);
  pose.rotation.col(2) = optical;
  return pose;
}

namespace detail {
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}
}  // namespace detail

// Position + viewing-direction IK. The target must lie in a plane through
// the base axis together with its viewing direction (the planner constructs
// such targets); the planar 3R subproblem then solves position and pitch.
inline JointState arm_ik(const Vec3& position, const Vec3& view_dir,
                         const ArmConfig& cfg) {
  const auto& len = cfg.link_lengths_m;
  Vec3 d = view_dir.normalized();

  double radial = std::hypot(position.x(), position.y());
  double theta;
  if (radial > 1e-9)
    theta = std::atan2(-position.x(), position.y());
  else if (std::hypot(d.x(), d.y()) > 1e-9)
    theta = std::atan2(-d.x(), d.y());
  else
    theta = 0.0;

  Mat3 unyaw = rot_z(-theta);
  Vec3 p = unyaw * position;
  Vec3 dl = unyaw * d;
  if (std::abs(p.x()) > 1e-6 * std::max(1.0, position.norm()) ||
      std::abs(dl.x()) > 1e-6)
    throw KinematicsError(KinematicsError::Code::Unreachable,
                          "target not coplanar with the base axis");

  if (position.norm() > cfg.reach() + 1e-9)
    throw KinematicsError(KinematicsError::Code::Unreachable,
                          "target beyond full reach");

  double psi = std::atan2(dl.y(), dl.z());
  double r_w = p.y() - len[2] * dl.y();
  double z_w = p.z() - len[2] * dl.z();
  double rho2 = r_w * r_w + z_w * z_w;
  double D = (rho2 - len[0] * len[0] - len[1] * len[1]) /
             (2.0 * len[0] * len[1]);
  if (D < -1.0 - 1e-9 || D > 1.0 + 1e-9)
    throw KinematicsError(KinematicsError::Code::Unreachable,
                          "wrist center outside reach annulus");
  D = std::clamp(D, -1.0, 1.0);
  double elbow_mag = std::acos(D);

  bool limit_fail = false;
  for (double q2 : {-elbow_mag, elbow_mag}) {  // elbow-up first
    double q1 = std::atan2(r_w, z_w) -
                std::atan2(len[1] * std::sin(q2),
                           len[0] + len[1] * std::cos(q2));
    q1 = detail::wrap_angle(q1);
    double q3 = detail::wrap_angle(psi - q1 - q2);
    JointState joints{theta, q1, q2, q3};
    try {
      check_joint_limits(joints, cfg);
      return joints;
    } catch (const KinematicsError&) {
      limit_fail = true;
    }
  }
  if (limit_fail)
    throw KinematicsError(KinematicsError::Code::JointLimit,
                          "both elbow branches violate joint limits");
  throw KinematicsError(KinematicsError::Code::Unreachable, "no IK solution");
}

// World layout: tower plane x = 0, growth axis +x, CDPR plane x = offset.
struct RobotConfig {
  CdprConfig cdpr;
  ArmConfig arm;
  double plane_offset_m = 0.12;

  // Arm-base pose for a platform at in-plane coordinates (u, v):
  // base z boresight points toward the tower (world -x).
  Pose base_pose(const Vec2& platform) const {
    Pose pose;
    pose.rotation.col(0) = Vec3(0, -1, 0);  // base x
    pose.rotation.col(1) = Vec3(0, 0, 1);   // base y
    pose.rotation.col(2) = Vec3(-1, 0, 0);  // base z (boresight)
    pose.translation = Vec3(plane_offset_m, platform.x(), platform.y());
    return pose;
  }
};

struct SystemSolution {
  Vec2 platform;
  JointState joints;
};

// Platform goes to the plant's pre-programmed station (its projection into
// the CDPR plane); the arm solves the remaining pose.
inline SystemSolution system_ik(const Pose& camera_world,
                                const Vec3& plant_position,
                                const RobotConfig& cfg) {
  Vec2 station(plant_position.y(), plant_position.z());
  if (!cfg.cdpr.in_workspace(station))
    throw KinematicsError(KinematicsError::Code::OutOfWorkspace,
                          "plant station outside CDPR workspace");
  Pose base = cfg.base_pose(station);
  Pose cam_in_base = base.inverse().compose(camera_world);
  JointState joints =
      arm_ik(cam_in_base.translation, cam_in_base.rotation.col(2), cfg.arm);
  return SystemSolution{station, joints};
}

}  // namespace phenosim
