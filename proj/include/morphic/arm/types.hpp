#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <string>

namespace morphic::arm {

inline constexpr int kNumJoints = 7;

struct Pose {
  Eigen::Vector3d p{0.0, 0.0, 0.0};
  Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};

  Pose compose(const Pose& o) const {
    return {p + q * o.p, (q * o.q).normalized()};
  }
  Pose inverse() const {
    const Eigen::Quaterniond qi = q.conjugate();
    return {qi * (-p), qi};
  }
  Eigen::Vector3d apply(const Eigen::Vector3d& v) const { return p + q * v; }
  static Pose identity() { return {}; }
};

// Angle of the relative rotation, in [0, pi].
double orientation_distance(const Eigen::Quaterniond& a,
                            const Eigen::Quaterniond& b);

// Rotation vector (axis * angle, world frame) taking `current` to `target`.
Eigen::Vector3d orientation_error(const Eigen::Quaterniond& target,
                                  const Eigen::Quaterniond& current);

struct LinkRange {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

// Additive per-link length offsets, meters. The all-zeros vector is the
// hand-designed baseline.
struct MorphologyParams {
  std::array<double, kNumJoints> deltas{};

  bool operator==(const MorphologyParams& o) const { return deltas == o.deltas; }
};

struct ArmState {
  std::array<double, kNumJoints> q{};  // joint angles, radians
  double finger = 1.0;                 // gripper opening, 1 open .. 0 closed
};

struct ArmModel {
  Pose base_pose;
  std::array<double, kNumJoints> base_lengths{};
  std::array<Eigen::Vector3d, kNumJoints> joint_axes;
  std::array<double, kNumJoints> limit_lo{};
  std::array<double, kNumJoints> limit_hi{};
  std::array<double, kNumJoints> collision_radius{};
  std::array<LinkRange, kNumJoints> link_ranges;

  double link_length(const MorphologyParams& m, int i) const {
    return base_lengths[static_cast<std::size_t>(i)] +
           m.deltas[static_cast<std::size_t>(i)];
  }
};

ArmModel default_arm();
MorphologyParams baseline_design();

}  // namespace morphic::arm
