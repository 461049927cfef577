#pragma once

#include <Eigen/Geometry>

#include "travel/core.hpp"

namespace travel {

/// Body attitude from roll (about x) followed by pitch (about y). Yaw is
/// irrelevant for gravity alignment and is ignored.
inline Eigen::Matrix3d tilt_rotation(const Pose& pose) {
  return (Eigen::AngleAxisd(pose.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(pose.roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

namespace detail {

inline PointCloud rotate_cloud(const PointCloud& cloud, const Eigen::Matrix3d& r) {
  PointCloud out = cloud;
  for (auto& p : out.points) {
    const Eigen::Vector3d v = r * Eigen::Vector3d(p.x, p.y, p.z);
    p.x = v.x();
    p.y = v.y();
    p.z = v.z();
  }
  return out;
}

}  // namespace detail

/// Rotates the cloud upright by undoing roll and pitch. Order, intensity and
/// ring fields are preserved; translation and yaw are left alone.
inline PointCloud align_attitude(const PointCloud& cloud, const Pose& pose) {
  if (pose.roll == 0.0 && pose.pitch == 0.0) return cloud;
  return detail::rotate_cloud(cloud, tilt_rotation(pose).transpose());
}

/// Inverse of align_attitude for the same pose.
inline PointCloud restore_attitude(const PointCloud& cloud, const Pose& pose) {
  if (pose.roll == 0.0 && pose.pitch == 0.0) return cloud;
  return detail::rotate_cloud(cloud, tilt_rotation(pose));
}

}  // namespace travel
