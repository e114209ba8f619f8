#include "smplpix/camera.hpp"

#include "smplpix/error.hpp"
#include "smplpix/io_util.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <cmath>

namespace smplpix {

using nlohmann::json;

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Camera::Camera(const Intrinsics& intr, const Eigen::Matrix3d& rotation,
               const Eigen::Vector3d& translation)
    : K(intr.matrix()), R(rotation), t(translation), width(intr.width), height(intr.height) {
  validate();
}

void Camera::validate() const {
  require(K.allFinite() && R.allFinite() && t.allFinite(), "camera: non-finite parameters");
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(ortho < 1e-6, "camera: rotation is not orthonormal");
  require(R.determinant() > 0.0, "camera: rotation has negative determinant");
  require(K(0, 0) > 0.0 && K(1, 1) > 0.0, "camera: focal lengths must be positive");
  require(K(1, 0) == 0.0 && K(2, 0) == 0.0 && K(2, 1) == 0.0 && K(2, 2) == 1.0,
          "camera: intrinsics must be upper triangular with K[2][2] = 1");
  require(width >= 1 && height >= 1, "camera: image size must be positive");
}

std::optional<Projection> project(const Eigen::Vector3d& x, const Camera& cam) {
  const Eigen::Vector3d xc = cam.R * x + cam.t;
  const double d = xc.z();
  if (!(d > kNearPlane)) return std::nullopt;
  const Eigen::Vector3d h = cam.K * xc;
  return Projection{h.x() / h.z(), h.y() / h.z(), d};
}

Eigen::Vector3d unproject(double u, double v, double d, const Camera& cam) {
  const Eigen::Vector3d ray = cam.K.inverse() * Eigen::Vector3d(u, v, 1.0);
  const Eigen::Vector3d xc = ray * (d / ray.z());
  return cam.R.transpose() * (xc - cam.t);
}

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
               const Intrinsics& intrinsics) {
  const Eigen::Vector3d view = target - eye;
  require(view.norm() > 0.0, "look_at: eye and target coincide");
  const Eigen::Vector3d z = view.normalized();
  const Eigen::Vector3d side = z.cross(up);
  require(up.norm() > 0.0 && side.norm() > 1e-9 * up.norm(),
          "look_at: up vector is parallel to the view direction");
  const Eigen::Vector3d x = side.normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return Camera(intrinsics, R, -R * eye);
}

namespace {

Eigen::Matrix3d matrix_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 3)
    fail(ErrorCode::Parse, std::string("camera: \"") + key + "\" must be a 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    const auto& row = (*it)[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 3)
      fail(ErrorCode::Parse, std::string("camera: \"") + key + "\" must be a 3x3 array");
    for (int c = 0; c < 3; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

Camera camera_from_json(const std::string& json_text) {
  Camera cam;
  try {
    const json j = json::parse(json_text);
    cam.K = matrix_from(j, "K");
    cam.R = matrix_from(j, "R");
    const auto& t = j.at("t");
    if (!t.is_array() || t.size() != 3) fail(ErrorCode::Parse, "camera: \"t\" must have 3 entries");
    for (int i = 0; i < 3; ++i) cam.t[i] = t[static_cast<std::size_t>(i)].get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("camera: ") + e.what());
  }
  cam.validate();
  return cam;
}

std::string camera_to_json(const Camera& cam) {
  json j;
  auto rows = [](const Eigen::Matrix3d& m) {
    json out = json::array();
    for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return out;
  };
  j["K"] = rows(cam.K);
  j["R"] = rows(cam.R);
  j["t"] = {cam.t.x(), cam.t.y(), cam.t.z()};
  j["width"] = cam.width;
  j["height"] = cam.height;
  return j.dump(2) + "\n";
}

Camera load_camera(const std::filesystem::path& path) {
  try {
    return camera_from_json(read_file_text(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_camera(const Camera& cam, const std::filesystem::path& path) {
  write_file_atomic(path, camera_to_json(cam));
}

}  // namespace smplpix
