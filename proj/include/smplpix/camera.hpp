#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace smplpix {

// Points closer than this to the camera plane (in camera-space z) are treated
// as behind the camera.
inline constexpr double kNearPlane = 1e-6;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  Eigen::Matrix3d matrix() const;
};

// Pinhole camera: x_cam = R x + t, pixel = dehomogenize(K x_cam). The camera
// looks down +z, image u grows along +x (columns) and v along +y (rows).
struct Camera {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  int width = 1;
  int height = 1;

  Camera() = default;
  Camera(const Intrinsics& intr, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  // Throws Error(Parameter) on a non-orthonormal R, det(R) <= 0, non-positive
  // focal lengths or image size, or a third K row other than (0, 0, 1).
  void validate() const;

  Eigen::Vector3d center() const { return -R.transpose() * t; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& x) const { return R * x + t; }
};

struct Projection {
  double u;  // pixels, horizontal
  double v;  // pixels, vertical
  double d;  // camera-space depth, meters
};

// Empty when the point is at or behind the near plane.
std::optional<Projection> project(const Eigen::Vector3d& x, const Camera& cam);

// Inverse of project for a point in front of the camera.
Eigen::Vector3d unproject(double u, double v, double d, const Camera& cam);

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
               const Intrinsics& intrinsics);

Camera camera_from_json(const std::string& json_text);
std::string camera_to_json(const Camera& cam);
Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& cam, const std::filesystem::path& path);

}  // namespace smplpix
