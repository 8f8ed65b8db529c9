#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "morphic/sense/camera.hpp"
#include "morphic/util/expected.hpp"
#include "morphic/world/world.hpp"

namespace morphic::expert {

// One recorded timestep: the observation pair captured BEFORE the action was
// applied, and the capped command that was applied. Labels are stored after
// float32 quantization so that persisted trajectories replay bit-exactly.
struct Step {
  sense::Image image;  // un-augmented
  world::PrivilegedState priv;
  world::Action action;
};

struct Trajectory {
  arm::MorphologyParams morphology;
  world::Task task;
  std::uint64_t seed = 0;
  std::vector<Step> steps;
  bool success = false;
  // Privileged state after the last applied action, full precision; persisted
  // so open-loop replays have an exact target.
  Eigen::Matrix<double, world::PrivilegedState::kDim, 1> final_priv =
      Eigen::Matrix<double, world::PrivilegedState::kDim, 1>::Zero();
};

enum class PlanError { PlanInfeasible };

// The scripted reference path for this reset, with every waypoint checked for
// IK feasibility (sequentially warm-started, collision-aware). A morphology
// that cannot reach its script yields PlanInfeasible — a skipped episode,
// never a crash.
util::Expected<std::vector<world::Waypoint>, PlanError> plan(
    const world::WorldState& state, const world::Task& task,
    const arm::ArmModel& model, const arm::MorphologyParams& params);

// Round each action component through float32. Displacement and finger
// entries round toward zero so the per-step caps survive quantization; the
// orientation is re-normalized inside the world's clamp on application.
world::Action quantize_action(const world::Action& a);

// Lossless only if `a` was produced by quantize_action.
std::array<float, 8> action_to_f32(const world::Action& a);

// Raw reconstruction: no re-normalization, so a stored array round-trips to
// the exact Action that was applied during collection.
world::Action action_from_f32(const std::array<float, 8>& v);

// Greedy waypoint tracker. Each step: advance past every waypoint already
// within the world's waypoint tolerance, aim the capped action at the current
// one (holding at the last), record (image, priv, action), then apply.
// Timeout at the episode cap simply leaves success = false.
Trajectory execute(const std::vector<world::Waypoint>& plan,
                   world::WorldState state, const world::Task& task,
                   const arm::ArmModel& model,
                   const arm::MorphologyParams& params,
                   const sense::CameraModel& camera, std::uint64_t seed);

}  // namespace morphic::expert
