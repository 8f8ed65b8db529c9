#pragma once

#include <vector>

#include "morphic/arm/kinematics.hpp"
#include "morphic/arm/types.hpp"

namespace morphic::arm {

struct Capsule {
  Eigen::Vector3d a, b;
  double radius = 0.0;
};

struct CollisionEnv {
  double contact_distance = 0.005;
  bool has_table = false;
  Eigen::AlignedBox3d table;   // table slab
  double floor_z = -1e18;      // default: no floor (free space)
  std::vector<Capsule> static_capsules;  // pedestal etc.
};

std::vector<Capsule> arm_capsules(const ArmModel& model, const LinkFrames& frames);

// Self-collision between non-adjacent links, arm against statics, table slab
// penetration, floor penetration.
bool in_collision(const std::vector<Capsule>& arm, const CollisionEnv& env);

double segment_distance(const Eigen::Vector3d& a0, const Eigen::Vector3d& a1,
                        const Eigen::Vector3d& b0, const Eigen::Vector3d& b1);

double segment_box_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Eigen::AlignedBox3d& box);

}  // namespace morphic::arm
