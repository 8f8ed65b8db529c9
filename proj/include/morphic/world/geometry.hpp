#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cmath>

namespace morphic::world {

struct Box3 {
  Eigen::Vector3d lo{0.0, 0.0, 0.0};
  Eigen::Vector3d hi{0.0, 0.0, 0.0};

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  bool contains_xy(double x, double y) const {
    return x >= lo.x() && x <= hi.x() && y >= lo.y() && y <= hi.y();
  }
  Eigen::Vector3d center() const { return 0.5 * (lo + hi); }
};

// End-effector orientation pointing straight down (180 deg about +y).
inline const Eigen::Quaterniond kDownQuat{0.0, 0.0, 1.0, 0.0};

// Static workspace: a work table in front of the arm with two hinged-door
// cabinets standing on its far half, mirrored across the x axis. Doors are
// hinged on their outer front edges and swing outward, away from the robot's
// centerline. All coordinates are meters in the arm base frame (base column
// at x = y = 0, floor at z = 0).
struct Workspace {
  Box3 table{{0.30, -0.50, 0.75}, {0.90, 0.50, 0.80}};
  std::array<Box3, 2> cabinet_body{
      Box3{{0.62, 0.12, 0.80}, {0.90, 0.42, 1.15}},
      Box3{{0.62, -0.42, 0.80}, {0.90, -0.12, 1.15}}};
  // Interior acceptance volume (front face open, walls 2 cm).
  std::array<Box3, 2> cabinet_interior{
      Box3{{0.63, 0.14, 0.80}, {0.88, 0.40, 1.13}},
      Box3{{0.63, -0.40, 0.80}, {0.88, -0.14, 1.13}}};

  double door_width = 0.30;
  double door_thickness = 0.02;
  double door_zlo = 0.80;
  double door_zhi = 1.15;
  double door_max = 110.0 * M_PI / 180.0;
  double handle_z = 0.975;
  // Hinge = outer front vertical edge of each cabinet.
  std::array<Eigen::Vector2d, 2> hinge{Eigen::Vector2d{0.62, 0.42},
                                       Eigen::Vector2d{0.62, -0.42}};

  // Unit direction from the hinge to the door's free edge at opening angle
  // theta (theta = 0 closed, door flush with the cabinet front; positive
  // theta swings the free edge toward the robot and outward).
  Eigen::Vector2d door_dir(int cabinet, double theta) const {
    const double sy = cabinet == 0 ? -1.0 : 1.0;
    return {-std::sin(theta), sy * std::cos(theta)};
  }
  Eigen::Vector3d handle_pos(int cabinet, double theta) const {
    const Eigen::Vector2d e =
        hinge[static_cast<std::size_t>(cabinet)] + door_width * door_dir(cabinet, theta);
    return {e.x(), e.y(), handle_z};
  }
  // Opening angle whose free-edge direction points at p (xy projection),
  // unclamped; callers clamp to [0, door_max].
  double door_angle_of(int cabinet, const Eigen::Vector3d& p) const {
    const Eigen::Vector2d v =
        p.head<2>() - hinge[static_cast<std::size_t>(cabinet)];
    const double sy = cabinet == 0 ? -1.0 : 1.0;
    return std::atan2(-v.x(), sy * v.y());
  }
  // World-from-local transform of a door panel; the local panel box is
  // [0, door_width] x [-t/2, t/2] x [0, door_zhi - door_zlo].
  Eigen::Isometry3d door_frame(int cabinet, double theta) const;

  Box3 reach_goal_box{{0.35, -0.30, 0.88}, {0.72, 0.30, 1.12}};
  Box3 pick_spawn{{0.38, -0.30, 0.80}, {0.58, 0.30, 0.80}};
  double object_radius = 0.03;

  // Height of the surface an object dropped from `from_z` at (x, y) comes to
  // rest on (object origin sits at its bottom contact point).
  double support_z(double x, double y, double from_z) const;
};

const Workspace& workspace();

}  // namespace morphic::world
