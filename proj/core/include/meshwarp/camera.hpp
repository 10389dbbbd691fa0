#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Core>

namespace meshwarp {

/// Pinhole camera. World points map to camera space as R * X + t (x right,
/// y down, z forward); pixel (u, v) has its center at (u + 0.5, v + 0.5).
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int width = 0;
  int height = 0;

  /// Throws unless fx, fy > 0, the image is non-empty, and R is orthonormal
  /// within 1e-6.
  void validate() const;

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
  /// Continuous pixel coordinates of a camera-space point (z must be > 0).
  Eigen::Vector2d project_camera(const Eigen::Vector3d& cam) const {
    return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
  }
  Eigen::Vector2d project(const Eigen::Vector3d& world) const {
    return project_camera(to_camera(world));
  }
  /// Camera center in world coordinates.
  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

  friend bool operator==(const Camera&, const Camera&) = default;
};

/// Camera at `eye` looking at `target`, with `up` as the world up direction.
Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
               const Eigen::Vector3d& up, double focal_px, int width, int height);

/// Converts HMR-style weak-perspective parameters (scale s and translation
/// tx, ty applied in normalized [-1, 1] image coordinates) into an
/// equivalent pinhole camera with the given focal length. The resulting
/// camera has identity rotation and places the mesh at depth
/// 2 * focal / (s * width).
Camera weak_perspective_to_pinhole(double s, double tx, double ty, int width, int height,
                                   double focal_px = 5000.0);

/// {fx, fy, cx, cy, R: 9 floats row-major, t: 3 floats, w, h}
Camera read_camera_json(const std::filesystem::path& path);
void write_camera_json(const std::filesystem::path& path, const Camera& camera);

}  // namespace meshwarp
