#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "morphic/arm/collision.hpp"
#include "morphic/arm/types.hpp"
#include "morphic/util/expected.hpp"
#include "morphic/world/geometry.hpp"

namespace morphic::world {

enum class TaskKind : std::uint32_t { Reach = 0, Pick = 1, Place = 2, Close = 3 };

inline constexpr int kTaskKindCount = 4;

const char* task_name(TaskKind kind);

// Unset optional fields are sampled at reset from the episode seed.
struct Task {
  TaskKind kind = TaskKind::Reach;
  std::optional<arm::Pose> goal;  // Reach only; must lie in the goal box
  std::optional<int> cabinet;     // Place/Close only; 0 or 1

  static Task reach() { return {TaskKind::Reach, {}, {}}; }
  static Task pick() { return {TaskKind::Pick, {}, {}}; }
  static Task place() { return {TaskKind::Place, {}, {}}; }
  static Task close() { return {TaskKind::Close, {}, {}}; }
};

// End-effector displacement command. The rotation acts on the left in the
// world frame; callers exceeding the per-step caps are clamped, not rejected.
struct Action {
  Eigen::Vector3d dxyz{0.0, 0.0, 0.0};
  Eigen::Quaterniond drot{1.0, 0.0, 0.0, 0.0};
  double dfinger = 0.0;

  static constexpr int kDim = 8;
  // [dx, dy, dz, qw, qx, qy, qz, dfinger], quaternion canonicalized to w >= 0.
  Eigen::Matrix<double, kDim, 1> flatten() const;
  static Action from_flat(const Eigen::Matrix<double, kDim, 1>& v);
};

struct Waypoint {
  arm::Pose pose;
  double finger = 1.0;
};

struct WorldState {
  arm::ArmState arm;
  arm::Pose ee;
  arm::Pose object;  // origin at the object's bottom contact point
  bool attached = false;
  arm::Pose grasp_offset;  // object pose in the EE frame while attached
  std::array<double, 2> door_angle{0.0, 0.0};
  bool touching = false;
  double contact_distance = 0.0;
  int step_count = 0;
  int success_streak = 0;

  // Episode parameters realized at reset.
  TaskKind task_kind = TaskKind::Reach;
  arm::Pose goal;          // Reach goal
  int target_cabinet = 0;  // Place/Close target
  std::vector<Waypoint> waypoints;  // scripted reference path
  int script_stage = 0;             // first unmet waypoint
  Eigen::Vector2d ee_disp_xy{0.0, 0.0};  // EE xy displacement last step
};

// Full simulator observation used to bootstrap training; the deployed policy
// never sees it. Slice order in flatten() is fixed and versioned by the
// trajectory file format.
struct PrivilegedState {
  Eigen::Matrix<double, 8, 1> joints;       // 7 joint angles + finger
  Eigen::Matrix<double, 11, 1> ee_current;  // p(3) q(4) finger x2 disp_xy(2)
  Eigen::Matrix<double, 11, 1> ee_goal;     // p(3) q(4) finger x2 zeros(2)
  Eigen::Matrix<double, 7, 1> object;       // p(3) q(4)
  Eigen::Matrix<double, 2, 1> contact;      // touching flag, distance
  Eigen::Matrix<double, 2, 1> doors;        // door opening angles

  static constexpr int kDim = 41;
  static constexpr int kGoalOffset = 19;  // flatten() index of ee_goal
  static constexpr int kGoalDim = 11;
  Eigen::Matrix<double, kDim, 1> flatten() const;
};

struct WorldConfig {
  double max_dxyz = 0.02;                    // meters per step
  double max_drot = 5.0 * M_PI / 180.0;      // radians per step
  double max_dfinger = 0.1;
  double grasp_distance = 0.03;              // attach when closer than this
  double grasp_close_threshold = 0.35;       // finger below = closed
  double release_threshold = 0.65;           // finger above = released
  double handle_radius = 0.05;               // EE-to-handle engagement radius
  double contact_touch_distance = 0.005;
  int episode_cap = 200;
  // Scripted-waypoint completion tolerances.
  double waypoint_tol_pos = 0.01;
  double waypoint_tol_rot = 3.0 * M_PI / 180.0;
  double waypoint_tol_finger = 0.05;
  // Success predicate constants.
  double reach_tol_pos = 0.03;
  double reach_tol_rot = 10.0 * M_PI / 180.0;
  double pick_lift_height = 0.20;  // above the table top
  double close_tol = 5.0 * M_PI / 180.0;
  int success_hold_steps = 20;  // streak must exceed this
};

const WorldConfig& world_config();

// Collision environment the arm lives in: table slab, floor, pedestal.
// Cabinets and doors are visual/task geometry only.
arm::CollisionEnv world_env(const arm::ArmModel& model);

enum class ResetError { Infeasible };

util::Expected<WorldState, ResetError> reset(const Task& task,
                                             std::uint64_t seed,
                                             const arm::ArmModel& model,
                                             const arm::MorphologyParams& params);

// Pure quasi-static transition; IK failures hold the arm silently.
WorldState step(const WorldState& state, const Action& action,
                const arm::ArmModel& model,
                const arm::MorphologyParams& params);

bool is_success(const WorldState& state, const Task& task);

// The pose/finger target the scripted expert is currently driving toward
// (the task goal itself for Reach).
Waypoint current_goal(const WorldState& state, const Task& task);

PrivilegedState privileged_state(const WorldState& state,
                                 const arm::ArmModel& model,
                                 const arm::MorphologyParams& params,
                                 const Task& task);

// Project an arbitrary command onto the per-step caps (norm-preserving
// direction, axis-preserving rotation clamp, finger clamp).
Action clamp_action(const Action& a);

}  // namespace morphic::world
