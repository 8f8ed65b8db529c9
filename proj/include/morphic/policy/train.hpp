#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphic/arm/kinematics.hpp"
#include "morphic/nn/adam.hpp"
#include "morphic/policy/policy.hpp"
#include "morphic/util/expected.hpp"

namespace morphic::policy {

// Seed salts for the independent RNG streams consumed during training.
inline constexpr std::uint64_t kShuffleSalt = 0x53485546;  // epoch shuffles
inline constexpr std::uint64_t kAugmentSalt = 0x415547;    // per-sample aug

enum class StopGrad { None, SgR, SgP };
const char* stop_grad_name(StopGrad m);

struct TrainConfig {
  int batch = 64;
  long total_steps = 200000;
  // Per-term weights: onboard imitation, latent alignment, privileged
  // imitation. All-equal is the trained default.
  double w_bc_onboard = 1.0;
  double w_align = 1.0;
  double w_bc_priv = 1.0;
  // sg_R detaches z^R inside the alignment term (alignment shapes only the
  // privileged encoder); sg_P is the mirror image.
  StopGrad stop_grad = StopGrad::None;
  bool augment = true;     // train-time patch dropout on images
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
  nn::AdamConfig adam{};
  int log_every = 100;       // JSONL cadence
  int heldout_every = 1000;  // held-out alignment metric cadence
  int eval_every = 0;        // eval-hook cadence, 0 = never
  int checkpoint_every = 0;  // periodic checkpoint cadence, 0 = never
};

// Step-level training view of a trajectory buffer, resident in memory at
// stored float32 precision (steps x (H*W*C + 49) x 4 bytes). Loading
// re-derives each reach trajectory's realized goal pose: trajectories that
// carried an explicit goal use it directly, sampled-goal trajectories replay
// their seeded reset. (The stored privileged state's goal slice is the
// stage-dependent script waypoint, which would leak expert progress.)
class TrainSet {
 public:
  static util::Expected<TrainSet, std::string> load(const std::string& dir,
                                                    const arm::ArmModel& model);

  std::size_t size() const { return traj_of_step_.size(); }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  struct View {
    const float* image;    // height*width*channels, channel-major planes
    const float* priv;     // 41
    const float* action;   // 8, expert label
    const double* morph;   // 7
    const double* goal;    // 7, zero outside Reach
    std::uint32_t trajectory;
  };
  View sample(std::size_t i) const;

  // Every 101st step index, capped at 512: excluded from training, used for
  // the held-out alignment metric.
  const std::vector<std::uint32_t>& holdout() const { return holdout_; }
  const std::vector<std::uint32_t>& train_indices() const { return train_; }

 private:
  TrainSet() = default;
  int height_ = 0, width_ = 0, channels_ = 0;
  std::vector<float> images_, privs_, actions_;
  std::vector<double> morphs_, goals_;  // per trajectory, 7 doubles each
  std::vector<std::uint32_t> traj_of_step_;
  std::vector<std::uint32_t> holdout_, train_;
};

// One decoded, augmented training example.
struct TrainSample {
  nn::Tensor image;  // (C,H,W)
  nn::Tensor priv;   // (41)
  nn::Tensor morph;  // (7)
  nn::Tensor goal;   // (kGoalDim)
  std::array<double, 8> action{};
};

struct StepLosses {
  double bc_onboard = 0.0;  // unweighted per-term batch means
  double align = 0.0;
  double bc_priv = 0.0;
  double total = 0.0;  // weighted sum of the three terms
  double latent_dev = 0.0;  // max | ||z|| - 1 | over both latents, batch-wide
  bool finite = true;
};

// One gradient step: both actions route through the shared head, the
// alignment term couples the latents subject to the stop-grad mode, gradient
// accumulation is sequential in batch order, and the optimizer step applies
// only when every loss term is finite.
StepLosses train_step(MagicPolicy& policy, nn::Adam& opt,
                      const TrainConfig& cfg,
                      const std::vector<TrainSample>& batch);

// Mean alignment Huber between z^R and z^P over the held-out split,
// computed on un-augmented images.
double heldout_alignment(MagicPolicy& policy, const TrainSet& data,
                         double delta);

// Called at eval cadence; the returned object lands in that step's log
// record under "eval".
using EvalHook = std::function<nlohmann::json(MagicPolicy&, long step)>;

struct TrainPaths {
  std::string log_path;        // JSONL training log, "" = no log
  std::string checkpoint_dir;  // "" = no checkpoints
  std::string resume_from;     // checkpoint path, "" = fresh start
};

struct TrainResult {
  long steps_done = 0;
  StepLosses last;
  std::string final_checkpoint;  // "" when checkpoint_dir is empty
};

enum class TrainError { BadConfig, EmptyBuffer, NonFiniteLoss, Io };
const char* train_error_name(TrainError e);

// Epoch-shuffled step-level batches until total_steps. The sample stream is
// the concatenation of per-epoch permutations, so its position is
// step * batch and a checkpoint (params, moments, step) resumes bitwise.
util::Expected<TrainResult, TrainError> train(MagicPolicy& policy,
                                              const TrainSet& data,
                                              const TrainConfig& cfg,
                                              const TrainPaths& paths,
                                              const EvalHook& eval_hook = {});

}  // namespace morphic::policy
