#include <cstdint>
#include <string>
#include <utility>

#include "morphic/expert/storage.hpp"
#include "morphic/policy/train.hpp"
#include "morphic/world/world.hpp"

namespace morphic::policy {

namespace {

constexpr int kPrivDim = world::PrivilegedState::kDim;
constexpr int kActDim = world::Action::kDim;

std::array<double, kGoalDim> pose_fields(const arm::Pose& pose) {
  return {pose.p.x(), pose.p.y(), pose.p.z(),
          pose.q.w(), pose.q.x(), pose.q.y(), pose.q.z()};
}

}  // namespace

util::Expected<TrainSet, std::string> TrainSet::load(
    const std::string& dir, const arm::ArmModel& model) {
  auto opened = expert::BufferReader::open(dir);
  if (!opened.ok()) return util::err(opened.error());
  expert::BufferReader reader = std::move(*opened);
  if (reader.num_trajectories() == 0) {
    return util::err(std::string("trajectory buffer is empty"));
  }

  TrainSet out;
  out.height_ = reader.image_height();
  out.width_ = reader.image_width();
  out.channels_ = reader.image_channels();
  const std::size_t img_floats = static_cast<std::size_t>(out.height_) *
                                 static_cast<std::size_t>(out.width_) *
                                 static_cast<std::size_t>(out.channels_);
  const std::size_t n_steps = reader.num_steps();
  out.images_.reserve(n_steps * img_floats);
  out.privs_.reserve(n_steps * kPrivDim);
  out.actions_.reserve(n_steps * kActDim);
  out.traj_of_step_.reserve(n_steps);

  for (std::size_t k = 0; k < reader.num_trajectories(); ++k) {
    const auto& meta = reader.meta(k);
    arm::MorphologyParams mp;
    mp.deltas = meta.morphology;
    for (double d : meta.morphology) out.morphs_.push_back(d);

    std::array<double, kGoalDim> gf{};
    if (meta.task == world::TaskKind::Reach) {
      if (meta.goal.has_value()) {
        gf = pose_fields(*meta.goal);
      } else {
        // Sampled goal: replay the seeded reset to recover the realized pose.
        auto st = world::reset(world::Task::reach(), meta.seed, model, mp);
        if (!st.ok()) {
          return util::err("trajectory " + std::to_string(k) +
                           ": stored reach reset is no longer feasible");
        }
        gf = pose_fields({st->goal.p, st->goal.q});
      }
    }
    for (double d : gf) out.goals_.push_back(d);

    const expert::StoredTrajectory traj = reader.trajectory(k);
    for (const auto& s : traj.steps) {
      out.images_.insert(out.images_.end(), s.image.begin(), s.image.end());
      out.privs_.insert(out.privs_.end(), s.priv.begin(), s.priv.end());
      out.actions_.insert(out.actions_.end(), s.action.begin(),
                          s.action.end());
      out.traj_of_step_.push_back(static_cast<std::uint32_t>(k));
    }
  }

  const std::size_t total = out.traj_of_step_.size();
  if (total == 0) return util::err(std::string("buffer holds no steps"));
  for (std::size_t i = 0; i < total && out.holdout_.size() < 512; i += 101) {
    out.holdout_.push_back(static_cast<std::uint32_t>(i));
  }
  std::size_t h = 0;
  out.train_.reserve(total - out.holdout_.size());
  for (std::size_t i = 0; i < total; ++i) {
    if (h < out.holdout_.size() && out.holdout_[h] == i) {
      ++h;
      continue;
    }
    out.train_.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

TrainSet::View TrainSet::sample(std::size_t i) const {
  const std::size_t img_floats = static_cast<std::size_t>(height_) *
                                 static_cast<std::size_t>(width_) *
                                 static_cast<std::size_t>(channels_);
  const std::uint32_t traj = traj_of_step_.at(i);
  return {images_.data() + i * img_floats,
          privs_.data() + i * kPrivDim,
          actions_.data() + i * kActDim,
          morphs_.data() + static_cast<std::size_t>(traj) * arm::kNumJoints,
          goals_.data() + static_cast<std::size_t>(traj) * kGoalDim,
          traj};
}

}  // namespace morphic::policy
