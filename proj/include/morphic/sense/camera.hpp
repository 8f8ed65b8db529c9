#pragma once

#include <string>
#include <vector>

#include "morphic/arm/types.hpp"

namespace morphic::sense {

// Pinhole camera fixed to the robot base frame ("head" mount). The local
// frame is x = image right, y = image up, z = viewing direction.
struct CameraModel {
  arm::Pose pose;
  double fov_deg = 70.0;
  int height = 48;
  int width = 48;
  int channels = 2;  // 1 = shaded albedo, 2 = + inverse depth
};

// Head position relative to the arm base: 0.4 m up, 0.2 m back, offset
// 0.18 m sideways so the torso column does not blind the central workspace;
// pitched down 35 degrees, FOV 70. Deliberately close-in: the wrist and
// forearm frequently pass between this camera and the object.
CameraModel default_camera(const arm::ArmModel& model);

// Mast-mounted pose that keeps the whole table, both cabinets (doors open or
// closed), and the reachable goal volume inside the frustum: 0.95 m up,
// 0.5 m back, 0.2 m sideways, pitched down 30 degrees, FOV 80.
CameraModel overview_camera(const arm::ArmModel& model);

// Planar channel-major tensor, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
                 static_cast<std::size_t>(c),
             0.0) {}

  double& at(int ch, int y, int x) {
    return data[(static_cast<std::size_t>(ch) * static_cast<std::size_t>(height) +
                 static_cast<std::size_t>(y)) *
                    static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
  double at(int ch, int y, int x) const {
    return data[(static_cast<std::size_t>(ch) * static_cast<std::size_t>(height) +
                 static_cast<std::size_t>(y)) *
                    static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
};

// Debug export of one channel as an 8-bit portable graymap.
void write_pgm(const Image& image, int channel, const std::string& path);

}  // namespace morphic::sense
