#include "morphic/sense/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace morphic::sense {

namespace {

CameraModel head_camera(const arm::ArmModel& model,
                        const Eigen::Vector3d& offset, double pitch_deg,
                        double fov_deg) {
  CameraModel cam;
  const double pitch = pitch_deg * M_PI / 180.0;
  const Eigen::Vector3d forward{std::cos(pitch), 0.0, -std::sin(pitch)};
  const Eigen::Vector3d right{0.0, 1.0, 0.0};
  const Eigen::Vector3d up = forward.cross(right);  // (sin, 0, cos)
  Eigen::Matrix3d rot;
  rot.col(0) = right;
  rot.col(1) = up;
  rot.col(2) = forward;
  cam.pose.q = Eigen::Quaterniond(rot).normalized();
  cam.pose.p = model.base_pose.p + offset;
  cam.fov_deg = fov_deg;
  return cam;
}

}  // namespace

CameraModel default_camera(const arm::ArmModel& model) {
  return head_camera(model, {-0.2, 0.18, 0.4}, 35.0, 70.0);
}

CameraModel overview_camera(const arm::ArmModel& model) {
  return head_camera(model, {-0.5, 0.20, 0.95}, 30.0, 80.0);
}

void write_pgm(const Image& image, int channel, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  f << "P5\n" << image.width << " " << image.height << "\n255\n";
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double v = std::clamp(image.at(channel, y, x), 0.0, 1.0);
      f.put(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

}  // namespace morphic::sense
