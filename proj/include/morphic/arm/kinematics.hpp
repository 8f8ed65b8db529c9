#pragma once

#include <span>

#include "morphic/arm/types.hpp"

namespace morphic::arm {

struct LinkFrames {
  // joint_pose[i]: frame just after joint i's rotation, origin at joint i.
  std::array<Pose, kNumJoints> joint_pose;
  // point[0] = base origin, point[i+1] = distal end of link i.
  std::array<Eigen::Vector3d, kNumJoints + 1> point;
  Pose ee;  // distal end of the last link
};

LinkFrames forward_kinematics(const ArmModel& model, const MorphologyParams& m,
                              const ArmState& state);

// 6 x 7, linear velocity rows on top, angular below.
Eigen::Matrix<double, 6, kNumJoints> ee_jacobian(const ArmModel& model,
                                                 const MorphologyParams& m,
                                                 const ArmState& state);

namespace detail {

// Generic revolute chain: joint i rotates about axes[i], then the link
// extends by lengths[i] along the local +z. Exposed so tests can build
// reduced chains (e.g. the planar 2-link case) against closed forms.
struct ChainFrames {
  std::vector<Pose> joint_pose;
  std::vector<Eigen::Vector3d> point;
  Pose ee;
};

ChainFrames fk_chain(const Pose& base, std::span<const Eigen::Vector3d> axes,
                     std::span<const double> lengths, std::span<const double> q);

Eigen::MatrixXd jacobian_chain(const ChainFrames& frames,
                               std::span<const Eigen::Vector3d> axes);

}  // namespace detail

}  // namespace morphic::arm
