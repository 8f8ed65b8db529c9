#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "morphic/expert/expert.hpp"
#include "morphic/sense/camera.hpp"
#include "morphic/util/expected.hpp"

namespace morphic::expert {

// Which task an episode index draws. Mixed modes cycle deterministically.
enum class TaskMix { Reach, Pick, Place, Close, Manip, All };

const char* task_mix_name(TaskMix mix);
std::optional<TaskMix> task_mix_from_name(const std::string& name);
world::Task task_for_episode(TaskMix mix, std::uint64_t episode);

struct CollectConfig {
  int n_target = 0;
  TaskMix mix = TaskMix::Reach;
  // nullopt: sample a fresh morphology per episode (agnostic mode);
  // set: fixed design throughout (targeted mode, sampling skipped).
  std::optional<arm::MorphologyParams> fixed;
  std::uint64_t seed = 0;
  sense::CameraModel camera;
  int workers = 1;
  // Episodes whose task overrides the mix (e.g. a pinned reach goal).
  std::optional<world::Task> task_override;
  // Abort when fewer than stall_min_rate of the trailing stall_window
  // attempted episodes succeeded.
  int stall_window = 1000;
  double stall_min_rate = 0.01;
};

inline constexpr int kMorphBins = 10;
using MorphHistogram =
    std::array<std::array<std::uint64_t, kMorphBins>, arm::kNumJoints>;

struct CollectStats {
  std::uint64_t episodes_attempted = 0;
  std::uint64_t reset_failures = 0;
  std::uint64_t plan_failures = 0;
  std::uint64_t execute_failures = 0;
  std::array<std::uint64_t, 4> stored_by_task{};  // indexed by TaskKind
  MorphHistogram attempted{};  // all sampled designs
  MorphHistogram accepted{};   // designs behind stored trajectories
};

struct BufferManifest {
  std::uint64_t n_stored = 0;
  std::uint64_t steps_total = 0;
  CollectStats stats;
  std::string dir;
};

enum class CollectError { CollectionStalled };

// Alg. "sample design, reset, plan, execute, keep successes" until n_target
// trajectories are stored in `out_dir` (refusing to reuse a non-empty one).
// Episodes are keyed by index — seed substream, task cycle, and morphology
// draw all derive from it — and appended in index order, so output bytes are
// identical for any worker count.
util::Expected<BufferManifest, CollectError> collect(
    const CollectConfig& config, const arm::ArmModel& model,
    const std::string& out_dir);

// Runs one episode exactly as collect schedules it.
Trajectory run_episode(const CollectConfig& config, const arm::ArmModel& model,
                       std::uint64_t episode_index, bool& reset_ok,
                       bool& plan_ok);

// Pearson statistic against a uniform expectation; 9 degrees of freedom for
// 10 bins. The p > 0.01 acceptance threshold for that case is chi2 < 21.666.
double chi_square_uniform(std::span<const std::uint64_t> bins);
inline constexpr double kChi2Bins10P01 = 21.666;

// Bin index for a link delta within its configured range.
int morph_bin(double value, const arm::LinkRange& range);

}  // namespace morphic::expert
