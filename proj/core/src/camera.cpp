#include "meshwarp/camera.hpp"

#include <fstream>

#include <Eigen/Geometry>

#include "json.hpp"
#include "meshwarp/error.hpp"

namespace meshwarp {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error("camera image size must be positive");
  const double err = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(err <= 1e-6)) throw Error("camera rotation is not orthonormal");
}

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
               const Eigen::Vector3d& up, double focal_px, int width, int height) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Camera cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * eye;
  cam.fx = cam.fy = focal_px;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  return cam;
}

Camera weak_perspective_to_pinhole(double s, double tx, double ty, int width, int height,
                                   double focal_px) {
  if (!(s > 0.0)) throw Error("weak-perspective scale must be positive");
  Camera cam;
  cam.fx = cam.fy = focal_px;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  cam.translation = {tx, ty, 2.0 * focal_px / (s * width)};
  return cam;
}

Camera read_camera_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open camera file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    Camera cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    const auto r = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (r.size() != 9 || t.size() != 3) throw Error("R must have 9 and t 3 entries");
    for (int i = 0; i < 9; ++i) cam.rotation(i / 3, i % 3) = r[i];
    cam.translation = {t[0], t[1], t[2]};
    cam.width = j.at("w").get<int>();
    cam.height = j.at("h").get<int>();
    cam.validate();
    return cam;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid camera file " + path.string() + ": " + e.what());
  }
}

void write_camera_json(const std::filesystem::path& path, const Camera& camera) {
  nlohmann::json j;
  j["fx"] = camera.fx;
  j["fy"] = camera.fy;
  j["cx"] = camera.cx;
  j["cy"] = camera.cy;
  std::vector<double> r(9);
  for (int i = 0; i < 9; ++i) r[i] = camera.rotation(i / 3, i % 3);
  j["R"] = r;
  j["t"] = {camera.translation.x(), camera.translation.y(), camera.translation.z()};
  j["w"] = camera.width;
  j["h"] = camera.height;
  std::ofstream out(path);
  if (!out) throw Error("cannot write camera file " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace meshwarp
