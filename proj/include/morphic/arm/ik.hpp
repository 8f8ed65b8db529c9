#pragma once

#include "morphic/arm/collision.hpp"
#include "morphic/arm/kinematics.hpp"
#include "morphic/arm/types.hpp"
#include "morphic/util/expected.hpp"
#include "morphic/util/rng.hpp"

namespace morphic::arm {

enum class IkError { NoConvergence, Collision };

struct IkConfig {
  double lambda = 0.1;       // damping
  int max_iterations = 100;
  double tol_pos = 1e-3;     // meters
  double tol_rot = 1e-2;     // radians
  int max_restarts = 5;      // seeded attempts after the warm start
  double max_joint_step = 0.5;  // per-iteration update cap, radians
  std::uint64_t restart_seed = 0x51c0ffee;
};

// Damped least squares with per-iteration joint-limit clamping. Converged
// solutions that collide are rejected (no silent clamping); rejected or
// non-converged attempts restart from deterministic random configurations.
// The finger value passes through untouched.
util::Expected<ArmState, IkError> solve_ik(const ArmModel& model,
                                           const MorphologyParams& m,
                                           const Pose& target,
                                           const ArmState& init,
                                           const IkConfig& cfg,
                                           const CollisionEnv& env);

MorphologyParams sample_morphology(util::Rng& rng,
                                   const std::array<LinkRange, kNumJoints>& ranges);

}  // namespace morphic::arm
