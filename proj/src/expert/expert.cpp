#include "morphic/expert/expert.hpp"

#include <algorithm>
#include <cmath>

#include "morphic/arm/ik.hpp"
#include "morphic/arm/kinematics.hpp"
#include "morphic/sense/render.hpp"
#include "morphic/world/script.hpp"

namespace morphic::expert {

namespace {

// Cast with rounding toward zero so magnitudes never grow.
float shrink_f32(double v) {
  float f = static_cast<float>(v);
  if (std::abs(static_cast<double>(f)) > std::abs(v)) {
    f = std::nextafterf(f, 0.0f);
  }
  return f;
}

bool within_tolerance(const world::WorldState& s, const world::Waypoint& w) {
  const auto& cfg = world::world_config();
  return (s.ee.p - w.pose.p).norm() <= cfg.waypoint_tol_pos &&
         arm::orientation_distance(s.ee.q, w.pose.q) <= cfg.waypoint_tol_rot &&
         std::abs(s.arm.finger - w.finger) <= cfg.waypoint_tol_finger;
}

}  // namespace

util::Expected<std::vector<world::Waypoint>, PlanError> plan(
    const world::WorldState& state, const world::Task& task,
    const arm::ArmModel& model, const arm::MorphologyParams& params) {
  const auto waypoints = world::script_waypoints(task, state);
  const auto env = world::world_env(model);
  arm::ArmState probe = state.arm;
  for (const auto& wp : waypoints) {
    auto sol = arm::solve_ik(model, params, wp.pose, probe, {}, env);
    if (!sol.ok()) return util::err(PlanError::PlanInfeasible);
    probe = *sol;
  }
  return waypoints;
}

world::Action quantize_action(const world::Action& a) {
  const auto flat = a.flatten();  // canonical: unit quaternion, w >= 0
  std::array<float, 8> v{};
  for (int i : {0, 1, 2, 7}) v[static_cast<std::size_t>(i)] = shrink_f32(flat[i]);
  for (int i : {3, 4, 5, 6}) {
    v[static_cast<std::size_t>(i)] = static_cast<float>(flat[i]);
  }
  return action_from_f32(v);
}

std::array<float, 8> action_to_f32(const world::Action& a) {
  return {static_cast<float>(a.dxyz.x()),  static_cast<float>(a.dxyz.y()),
          static_cast<float>(a.dxyz.z()),  static_cast<float>(a.drot.w()),
          static_cast<float>(a.drot.x()),  static_cast<float>(a.drot.y()),
          static_cast<float>(a.drot.z()),  static_cast<float>(a.dfinger)};
}

world::Action action_from_f32(const std::array<float, 8>& v) {
  world::Action a;
  a.dxyz = Eigen::Vector3d{v[0], v[1], v[2]};
  a.drot = Eigen::Quaterniond(v[3], v[4], v[5], v[6]);
  a.dfinger = v[7];
  return a;
}

Trajectory execute(const std::vector<world::Waypoint>& plan,
                   world::WorldState state, const world::Task& task,
                   const arm::ArmModel& model,
                   const arm::MorphologyParams& params,
                   const sense::CameraModel& camera, std::uint64_t seed) {
  Trajectory traj;
  traj.morphology = params;
  traj.task = task;
  traj.seed = seed;
  const int cap = world::world_config().episode_cap;
  std::size_t stage = 0;
  for (int t = 0; t < cap && !plan.empty() && !world::is_success(state, task);
       ++t) {
    while (stage < plan.size() && within_tolerance(state, plan[stage])) {
      ++stage;
    }
    const auto& wp = plan[std::min(stage, plan.size() - 1)];
    world::Action raw;
    raw.dxyz = wp.pose.p - state.ee.p;
    raw.drot = (wp.pose.q * state.ee.q.conjugate()).normalized();
    raw.dfinger = wp.finger - state.arm.finger;
    const world::Action action = quantize_action(world::clamp_action(raw));

    Step step;
    step.image = sense::render(state, model, params, camera);
    step.priv = world::privileged_state(state, model, params, task);
    step.action = action;
    traj.steps.push_back(std::move(step));

    state = world::step(state, action, model, params);
  }
  traj.success = world::is_success(state, task);
  traj.final_priv = world::privileged_state(state, model, params, task).flatten();
  return traj;
}

}  // namespace morphic::expert
