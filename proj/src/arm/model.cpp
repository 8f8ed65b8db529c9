#include "morphic/arm/types.hpp"

namespace morphic::arm {

ArmModel default_arm() {
  ArmModel m;
  // The base sits on a fixed pedestal so the head camera (mounted 0.4 m
  // above the base) overlooks the 0.8 m work table.
  m.base_pose = {Eigen::Vector3d(0.0, 0.0, 0.60),
                 Eigen::Quaterniond::Identity()};
  m.base_lengths = {0.40, 0.15, 0.30, 0.25, 0.25, 0.10, 0.10};

  const Eigen::Vector3d x(1, 0, 0), y(0, 1, 0), z(0, 0, 1);
  (void)x;
  m.joint_axes = {z, y, y, y, z, y, z};

  // Roll joints (z) get wide travel; pitch joints are tighter so folded
  // configurations stay mostly in front of the base.
  m.limit_lo = {-2.9, -2.1, -2.1, -2.3, -2.9, -2.1, -2.9};
  m.limit_hi = {2.9, 2.1, 2.1, 2.3, 2.9, 2.1, 2.9};

  m.collision_radius = {0.060, 0.050, 0.045, 0.045, 0.040, 0.035, 0.030};

  m.link_ranges = {LinkRange{"torso", -0.30, 0.30},
                   LinkRange{"shoulder", 0.00, 0.30},
                   LinkRange{"bicep", -0.05, 0.40},
                   LinkRange{"elbow", -0.05, 0.30},
                   LinkRange{"forearm", -0.20, 0.30},
                   LinkRange{"wrist", 0.00, 0.20},
                   LinkRange{"gripper", -0.05, 0.20}};
  return m;
}

MorphologyParams baseline_design() { return MorphologyParams{}; }

}  // namespace morphic::arm
