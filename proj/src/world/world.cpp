#include "morphic/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "morphic/arm/ik.hpp"
#include "morphic/arm/kinematics.hpp"
#include "morphic/util/rng.hpp"
#include "morphic/world/script.hpp"

namespace morphic::world {

namespace {

constexpr std::uint64_t kResetStreamKey = 0x0cea5e1dull;

// IK seed for reset-time pose solves: elbow bent, gripper ahead of the torso.
arm::ArmState ready_state() {
  arm::ArmState s;
  s.q = {0.0, 0.5, 0.7, 0.9, 0.0, 0.9, 0.0};
  s.finger = 1.0;
  return s;
}

Eigen::Vector3d object_center(const WorldState& s) {
  return s.object.p + Eigen::Vector3d{0.0, 0.0, workspace().object_radius};
}

void update_contact(WorldState& s, const WorldConfig& cfg) {
  const double gap =
      (s.ee.p - object_center(s)).norm() - workspace().object_radius;
  s.contact_distance = std::max(0.0, gap);
  s.touching = s.attached || s.contact_distance < cfg.contact_touch_distance;
}

bool waypoint_satisfied(const WorldState& s, const Waypoint& w,
                        const WorldConfig& cfg) {
  return (s.ee.p - w.pose.p).norm() <= cfg.waypoint_tol_pos &&
         arm::orientation_distance(s.ee.q, w.pose.q) <= cfg.waypoint_tol_rot &&
         std::abs(s.arm.finger - w.finger) <= cfg.waypoint_tol_finger;
}

void advance_script(WorldState& s, const WorldConfig& cfg) {
  while (s.script_stage < static_cast<int>(s.waypoints.size()) &&
         waypoint_satisfied(
             s, s.waypoints[static_cast<std::size_t>(s.script_stage)], cfg)) {
    ++s.script_stage;
  }
}

void update_streak(WorldState& s, const WorldConfig& cfg) {
  bool ok = false;
  switch (s.task_kind) {
    case TaskKind::Reach:
      ok = (s.ee.p - s.goal.p).norm() < cfg.reach_tol_pos &&
           arm::orientation_distance(s.ee.q, s.goal.q) < cfg.reach_tol_rot;
      break;
    case TaskKind::Pick:
      ok = s.object.p.z() >= workspace().table.hi.z() + cfg.pick_lift_height;
      break;
    default:
      return;
  }
  s.success_streak = ok ? s.success_streak + 1 : 0;
}

// Solve the arm onto a sampled pose; returns false after exhausting attempts.
bool sample_ik_start(WorldState& s, util::Rng& rng, const arm::ArmModel& model,
                     const arm::MorphologyParams& params,
                     const arm::CollisionEnv& env, int attempts,
                     const std::function<arm::Pose(util::Rng&)>& draw_target,
                     double finger) {
  const arm::IkConfig cfg;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const arm::Pose target = draw_target(rng);
    arm::ArmState init = ready_state();
    init.finger = finger;
    const auto sol = arm::solve_ik(model, params, target, init, cfg, env);
    if (!sol.ok()) continue;
    s.arm = *sol;
    s.arm.finger = finger;
    s.ee = arm::forward_kinematics(model, params, s.arm).ee;
    return true;
  }
  return false;
}

}  // namespace

const char* task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Reach: return "reach";
    case TaskKind::Pick: return "pick";
    case TaskKind::Place: return "place";
    case TaskKind::Close: return "close";
  }
  return "unknown";
}

Eigen::Matrix<double, Action::kDim, 1> Action::flatten() const {
  Eigen::Quaterniond q = drot.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  Eigen::Matrix<double, kDim, 1> v;
  v << dxyz.x(), dxyz.y(), dxyz.z(), q.w(), q.x(), q.y(), q.z(), dfinger;
  return v;
}

Action Action::from_flat(const Eigen::Matrix<double, kDim, 1>& v) {
  Action a;
  a.dxyz = v.head<3>();
  Eigen::Quaterniond q{v[3], v[4], v[5], v[6]};
  if (q.norm() < 1e-12) {
    q = Eigen::Quaterniond::Identity();
  } else {
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  }
  a.drot = q;
  a.dfinger = v[7];
  return a;
}

Eigen::Matrix<double, PrivilegedState::kDim, 1> PrivilegedState::flatten() const {
  Eigen::Matrix<double, kDim, 1> v;
  v << joints, ee_current, ee_goal, object, contact, doors;
  return v;
}

const WorldConfig& world_config() {
  static const WorldConfig cfg;
  return cfg;
}

arm::CollisionEnv world_env(const arm::ArmModel& model) {
  (void)model;
  const auto& ws = workspace();
  arm::CollisionEnv env;
  env.has_table = true;
  env.table = Eigen::AlignedBox3d(ws.table.lo, ws.table.hi);
  env.floor_z = 0.0;
  // Pedestal ends below the arm base so the shoulder link clears it even at
  // the shortest torso length.
  env.static_capsules.push_back(
      {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.55}, 0.06});
  return env;
}

Action clamp_action(const Action& a) {
  const auto& cfg = world_config();
  Action out = a;
  const double n = out.dxyz.norm();
  if (n > cfg.max_dxyz) out.dxyz *= cfg.max_dxyz / n;

  Eigen::Quaterniond q = out.drot;
  if (q.norm() < 1e-12) {
    q = Eigen::Quaterniond::Identity();
  } else {
    q.normalize();
  }
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double angle = 2.0 * std::acos(std::clamp(q.w(), -1.0, 1.0));
  if (angle > cfg.max_drot) {
    const Eigen::Vector3d axis = q.vec().normalized();
    q = Eigen::Quaterniond{Eigen::AngleAxisd{cfg.max_drot, axis}};
  }
  out.drot = q;
  out.dfinger = std::clamp(out.dfinger, -cfg.max_dfinger, cfg.max_dfinger);
  return out;
}

util::Expected<WorldState, ResetError> reset(
    const Task& task, std::uint64_t seed, const arm::ArmModel& model,
    const arm::MorphologyParams& params) {
  const auto& ws = workspace();
  const auto& cfg = world_config();
  util::Rng rng(util::substream(seed, kResetStreamKey));
  const arm::CollisionEnv env = world_env(model);

  WorldState s;
  s.task_kind = task.kind;
  // Parked far outside the workspace until a task places it.
  s.object = {{2.0, 0.0, 0.0}, Eigen::Quaterniond::Identity()};

  switch (task.kind) {
    case TaskKind::Reach: {
      if (task.goal) {
        if (!ws.reach_goal_box.contains(task.goal->p)) {
          throw std::invalid_argument("reach goal outside the goal box");
        }
        s.goal = *task.goal;
      } else {
        s.goal.p = {rng.uniform(ws.reach_goal_box.lo.x(), ws.reach_goal_box.hi.x()),
                    rng.uniform(ws.reach_goal_box.lo.y(), ws.reach_goal_box.hi.y()),
                    rng.uniform(ws.reach_goal_box.lo.z(), ws.reach_goal_box.hi.z())};
        s.goal.q = kDownQuat;
      }
      // Random start: a collision-free configuration reached by IK from a
      // sampled hover pose (random yaw and up to 20 degrees of tilt), so the
      // controller can always untangle the arm toward the goal.
      const auto draw = [](util::Rng& r) {
        arm::Pose t;
        t.p = {r.uniform(0.35, 0.65), r.uniform(-0.35, 0.35),
               r.uniform(0.90, 1.25)};
        const double yaw = r.uniform(-2.6, 2.6);
        const double tilt = r.uniform(0.0, 20.0 * M_PI / 180.0);
        const double taz = r.uniform(0.0, 2.0 * M_PI);
        const Eigen::Vector3d axis{std::cos(taz), std::sin(taz), 0.0};
        t.q = (Eigen::Quaterniond{Eigen::AngleAxisd{yaw, Eigen::Vector3d::UnitZ()}} *
               Eigen::Quaterniond{Eigen::AngleAxisd{tilt, axis}} * kDownQuat)
                  .normalized();
        return t;
      };
      if (!sample_ik_start(s, rng, model, params, env, 100, draw, 1.0)) {
        return util::err(ResetError::Infeasible);
      }
      break;
    }
    case TaskKind::Pick: {
      const double ox = rng.uniform(ws.pick_spawn.lo.x(), ws.pick_spawn.hi.x());
      const double oy = rng.uniform(ws.pick_spawn.lo.y(), ws.pick_spawn.hi.y());
      s.object = {{ox, oy, ws.table.hi.z()}, Eigen::Quaterniond::Identity()};
      const Eigen::Vector3d center = object_center(s);
      const auto draw = [&center](util::Rng& r) {
        const double az = r.uniform(0.0, 2.0 * M_PI);
        const double el = r.uniform(30.0 * M_PI / 180.0, 75.0 * M_PI / 180.0);
        const double rad = r.uniform(0.12, 0.22);
        const double yaw = r.uniform(-M_PI, M_PI);
        arm::Pose t;
        t.p = center + rad * Eigen::Vector3d{std::cos(el) * std::cos(az),
                                             std::cos(el) * std::sin(az),
                                             std::sin(el)};
        t.q = (Eigen::Quaterniond{Eigen::AngleAxisd{yaw, Eigen::Vector3d::UnitZ()}} *
               kDownQuat)
                  .normalized();
        return t;
      };
      if (!sample_ik_start(s, rng, model, params, env, 100, draw, 1.0)) {
        return util::err(ResetError::Infeasible);
      }
      break;
    }
    case TaskKind::Place: {
      if (task.cabinet && (*task.cabinet < 0 || *task.cabinet > 1)) {
        throw std::invalid_argument("cabinet index must be 0 or 1");
      }
      s.target_cabinet =
          task.cabinet ? *task.cabinet : static_cast<int>(rng.uniform_int(0, 1));
      s.door_angle[static_cast<std::size_t>(s.target_cabinet)] = ws.door_max;
      const auto draw = [](util::Rng& r) {
        arm::Pose t;
        t.p = {r.uniform(0.42, 0.58), r.uniform(-0.20, 0.20),
               r.uniform(0.95, 1.08)};
        t.q = kDownQuat;
        return t;
      };
      if (!sample_ik_start(s, rng, model, params, env, 100, draw, 0.1)) {
        return util::err(ResetError::Infeasible);
      }
      s.object = {s.ee.p - Eigen::Vector3d{0.0, 0.0, 0.07},
                  Eigen::Quaterniond::Identity()};
      s.attached = true;
      s.grasp_offset = s.ee.inverse().compose(s.object);
      break;
    }
    case TaskKind::Close: {
      if (task.cabinet && (*task.cabinet < 0 || *task.cabinet > 1)) {
        throw std::invalid_argument("cabinet index must be 0 or 1");
      }
      s.target_cabinet =
          task.cabinet ? *task.cabinet : static_cast<int>(rng.uniform_int(0, 1));
      const auto k = static_cast<std::size_t>(s.target_cabinet);
      s.door_angle[k] = ws.door_max;
      const Box3& interior = ws.cabinet_interior[k];
      const double cy = interior.center().y();
      s.object = {{rng.uniform(0.68, 0.84), cy + rng.uniform(-0.08, 0.08),
                   interior.lo.z()},
                  Eigen::Quaterniond::Identity()};
      const double side = s.target_cabinet == 0 ? 1.0 : -1.0;
      const auto draw = [side](util::Rng& r) {
        arm::Pose t;
        t.p = {r.uniform(0.42, 0.52), side * r.uniform(0.05, 0.20),
               r.uniform(0.95, 1.08)};
        t.q = kDownQuat;
        return t;
      };
      if (!sample_ik_start(s, rng, model, params, env, 100, draw, 1.0)) {
        return util::err(ResetError::Infeasible);
      }
      break;
    }
  }

  update_contact(s, cfg);
  s.waypoints = script_waypoints(task, s);
  advance_script(s, cfg);
  return s;
}

WorldState step(const WorldState& state, const Action& action,
                const arm::ArmModel& model,
                const arm::MorphologyParams& params) {
  const auto& cfg = world_config();
  const auto& ws = workspace();
  WorldState s = state;
  const Action a = clamp_action(action);

  arm::Pose target;
  target.p = s.ee.p + a.dxyz;
  target.q = (a.drot * s.ee.q).normalized();

  arm::IkConfig ik;
  ik.max_restarts = 0;  // warm start only; a failed solve holds position
  const arm::CollisionEnv env = world_env(model);
  const auto sol = arm::solve_ik(model, params, target, s.arm, ik, env);
  if (sol.ok()) {
    s.arm = *sol;
    s.ee = arm::forward_kinematics(model, params, s.arm).ee;
  }

  s.arm.finger = std::clamp(s.arm.finger + a.dfinger, 0.0, 1.0);

  for (int k = 0; k < 2; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const Eigen::Vector3d handle = ws.handle_pos(k, s.door_angle[kk]);
    if ((s.ee.p - handle).norm() <= cfg.handle_radius &&
        s.arm.finger < cfg.grasp_close_threshold) {
      s.door_angle[kk] =
          std::clamp(ws.door_angle_of(k, s.ee.p), 0.0, ws.door_max);
    }
  }

  if (!s.attached && s.arm.finger < cfg.grasp_close_threshold) {
    const double gap =
        (s.ee.p - object_center(s)).norm() - ws.object_radius;
    if (std::max(0.0, gap) < cfg.grasp_distance) {
      s.attached = true;
      s.grasp_offset = s.ee.inverse().compose(s.object);
    }
  }
  if (s.attached && s.arm.finger > cfg.release_threshold) {
    s.attached = false;
    s.object.p.z() =
        ws.support_z(s.object.p.x(), s.object.p.y(), s.object.p.z());
  } else if (s.attached) {
    s.object = s.ee.compose(s.grasp_offset);
  }

  update_contact(s, cfg);
  advance_script(s, cfg);
  s.ee_disp_xy = (s.ee.p - state.ee.p).head<2>();
  s.step_count += 1;
  update_streak(s, cfg);
  return s;
}

bool is_success(const WorldState& s, const Task& task) {
  const auto& cfg = world_config();
  switch (task.kind) {
    case TaskKind::Reach:
    case TaskKind::Pick:
      return s.success_streak > cfg.success_hold_steps;
    case TaskKind::Place: {
      if (s.attached) return false;
      const auto k = static_cast<std::size_t>(s.target_cabinet);
      const Eigen::Vector3d center =
          s.object.p + Eigen::Vector3d{0.0, 0.0, workspace().object_radius};
      return workspace().cabinet_interior[k].contains(center);
    }
    case TaskKind::Close:
      return s.door_angle[static_cast<std::size_t>(s.target_cabinet)] <
             cfg.close_tol;
  }
  return false;
}

Waypoint current_goal(const WorldState& s, const Task& task) {
  if (task.kind == TaskKind::Reach) return {s.goal, 1.0};
  if (s.waypoints.empty()) return {s.ee, s.arm.finger};
  const auto i = static_cast<std::size_t>(
      std::min(s.script_stage, static_cast<int>(s.waypoints.size()) - 1));
  return s.waypoints[i];
}

PrivilegedState privileged_state(const WorldState& s,
                                 const arm::ArmModel& model,
                                 const arm::MorphologyParams& params,
                                 const Task& task) {
  (void)model;
  (void)params;
  PrivilegedState p;
  for (int i = 0; i < arm::kNumJoints; ++i) {
    p.joints[i] = s.arm.q[static_cast<std::size_t>(i)];
  }
  p.joints[7] = s.arm.finger;

  p.ee_current << s.ee.p, s.ee.q.w(), s.ee.q.x(), s.ee.q.y(), s.ee.q.z(),
      s.arm.finger, s.arm.finger, s.ee_disp_xy;

  const Waypoint g = current_goal(s, task);
  p.ee_goal << g.pose.p, g.pose.q.w(), g.pose.q.x(), g.pose.q.y(), g.pose.q.z(),
      g.finger, g.finger, 0.0, 0.0;

  p.object << s.object.p, s.object.q.w(), s.object.q.x(), s.object.q.y(),
      s.object.q.z();
  p.contact << (s.touching ? 1.0 : 0.0), s.contact_distance;
  p.doors << s.door_angle[0], s.door_angle[1];
  return p;
}

}  // namespace morphic::world
