#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphic/arm/types.hpp"
#include "morphic/nn/layers.hpp"
#include "morphic/sense/camera.hpp"
#include "morphic/util/expected.hpp"
#include "morphic/world/world.hpp"

namespace morphic::policy {

// Goal fields fed to the onboard encoder: position + quaternion (wxyz) of
// the realized reach goal, all-zero for tasks whose goal is implicit in the
// scene.
inline constexpr int kGoalDim = 7;

// Network sizes. Defaults are the trained configuration; everything is a
// knob so tests can shrink the stack to finite-difference scale.
struct PolicyConfig {
  int image_height = 48;
  int image_width = 48;
  int image_channels = 2;
  int conv1_ch = 8, conv1_k = 5, conv1_s = 2;
  int conv2_ch = 16, conv2_k = 3, conv2_s = 2;
  int hidden = 128;
  int latent = 64;  // d: dimension of the unit latents z^R and z^P
  int morph_hidden = 32;
  int morph_latent = 16;

  bool operator==(const PolicyConfig& o) const;
  // Flattened image-feature count after the conv trunk.
  int conv_features() const;
};

void to_json(nlohmann::json& j, const PolicyConfig& c);
void from_json(const nlohmann::json& j, PolicyConfig& c);

// One policy controlling every sampled design. Four stacks: an image
// encoder (conv trunk + dense tail that also ingests the goal fields), a
// privileged-state encoder, a morphology encoder, and an action head shared
// by the onboard and privileged routes. Both encoders emit unit vectors;
// the head's quaternion channels pass through unit normalization.
//
// Layers carry activation tapes, so a policy instance is single-threaded;
// the flat parameter order is conv, r_tail, p_net, m_net, head.
struct MagicPolicy {
  PolicyConfig cfg;
  std::uint64_t init_seed = 0;
  nn::Sequential conv;    // image (C,H,W) -> flattened features
  nn::Sequential r_tail;  // [features, goal] -> z^R
  nn::Sequential p_net;   // privileged state (41) -> z^P
  nn::Sequential m_net;   // morphology deltas (7) -> z^M
  nn::Sequential head;    // [z, z^M] -> action (8), quat slice unit-norm

  std::size_t param_count() const;
  void gather_params(std::span<double> out) const;
  void scatter_params(std::span<const double> in);
  void gather_grads(std::span<double> out) const;
  void zero_grads();
};

// Fresh policy with seeded initialization. Parameters are rounded to the
// float32 lattice immediately, so a step-0 checkpoint reloads bit-exactly
// and a zero-gradient optimizer step is an exact fixed point.
MagicPolicy make_policy(const PolicyConfig& cfg, std::uint64_t init_seed);

// Observation available on the deployed robot.
struct OnboardObs {
  sense::Image image;
  Eigen::Matrix<double, kGoalDim, 1> goal =
      Eigen::Matrix<double, kGoalDim, 1>::Zero();
};

// Goal fields for the current episode, taken from the realized reset state
// (identical whether the task carried an explicit goal or sampled one).
Eigen::Matrix<double, kGoalDim, 1> goal_fields(const world::WorldState& state,
                                               const world::Task& task);

// Render + goal fields in one call; the standard way to build the onboard
// observation during evaluation.
OnboardObs onboard_observation(const world::WorldState& state,
                               const arm::ArmModel& model,
                               const arm::MorphologyParams& params,
                               const world::Task& task,
                               const sense::CameraModel& camera);

world::Action act_onboard(MagicPolicy& policy, const OnboardObs& obs,
                          const arm::MorphologyParams& m);
world::Action act_privileged(MagicPolicy& policy,
                             const world::PrivilegedState& s,
                             const arm::MorphologyParams& m);

// Latent encoders, exposed for training and alignment metrics.
nn::Tensor encode_morphology(MagicPolicy& policy,
                             const arm::MorphologyParams& m);
nn::Tensor encode_onboard(MagicPolicy& policy, const sense::Image& image,
                          const Eigen::Matrix<double, kGoalDim, 1>& goal);
nn::Tensor encode_privileged(MagicPolicy& policy, const nn::Tensor& priv);

// Head pass on an explicit latent (size latent + morph_latent).
world::Action head_action(MagicPolicy& policy, const nn::Tensor& z,
                          const nn::Tensor& z_m);

// Checkpoint = policy parameters, optionally with optimizer moments for
// bitwise training resume (format per docs/formats.md).
struct PolicyCheckpoint {
  MagicPolicy policy;
  long step = 0;
  std::vector<float> adam_m, adam_v;  // empty when saved without a trainer
};

void save_policy(const std::string& path, const MagicPolicy& policy,
                 long step, std::span<const float> adam_m = {},
                 std::span<const float> adam_v = {});
util::Expected<PolicyCheckpoint, std::string> load_policy(
    const std::string& path);

}  // namespace morphic::policy
