#include "morphic/expert/collect.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "morphic/arm/ik.hpp"
#include "morphic/expert/storage.hpp"
#include "morphic/util/parallel.hpp"
#include "morphic/util/rng.hpp"

namespace morphic::expert {

namespace fs = std::filesystem;

namespace {

// Separates the morphology draw from the reset stream of the same episode.
constexpr std::uint64_t kMorphSalt = 0x4d4f525048ull;

// Episodes run speculatively in fixed index blocks; results merge in index
// order, so the stored bytes cannot depend on the worker count.
constexpr std::size_t kBatch = 32;

nlohmann::ordered_json camera_json(const sense::CameraModel& cam) {
  nlohmann::ordered_json j;
  j["position"] = {cam.pose.p.x(), cam.pose.p.y(), cam.pose.p.z()};
  j["quat_wxyz"] = {cam.pose.q.w(), cam.pose.q.x(), cam.pose.q.y(),
                    cam.pose.q.z()};
  j["fov_deg"] = cam.fov_deg;
  j["height"] = cam.height;
  j["width"] = cam.width;
  j["channels"] = cam.channels;
  return j;
}

nlohmann::ordered_json task_json(const world::Task& task) {
  nlohmann::ordered_json j;
  j["kind"] = world::task_name(task.kind);
  if (task.goal) {
    j["goal_position"] = {task.goal->p.x(), task.goal->p.y(), task.goal->p.z()};
    j["goal_quat_wxyz"] = {task.goal->q.w(), task.goal->q.x(), task.goal->q.y(),
                           task.goal->q.z()};
  }
  if (task.cabinet) j["cabinet"] = *task.cabinet;
  return j;
}

nlohmann::ordered_json histogram_json(const MorphHistogram& h) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& row : h) j.push_back(row);
  return j;
}

}  // namespace

const char* task_mix_name(TaskMix mix) {
  switch (mix) {
    case TaskMix::Reach: return "reach";
    case TaskMix::Pick: return "pick";
    case TaskMix::Place: return "place";
    case TaskMix::Close: return "close";
    case TaskMix::Manip: return "manip";
    case TaskMix::All: return "all";
  }
  return "unknown";
}

std::optional<TaskMix> task_mix_from_name(const std::string& name) {
  for (TaskMix m : {TaskMix::Reach, TaskMix::Pick, TaskMix::Place,
                    TaskMix::Close, TaskMix::Manip, TaskMix::All}) {
    if (name == task_mix_name(m)) return m;
  }
  return std::nullopt;
}

world::Task task_for_episode(TaskMix mix, std::uint64_t episode) {
  switch (mix) {
    case TaskMix::Reach: return world::Task::reach();
    case TaskMix::Pick: return world::Task::pick();
    case TaskMix::Place: return world::Task::place();
    case TaskMix::Close: return world::Task::close();
    case TaskMix::Manip:
      switch (episode % 3) {
        case 0: return world::Task::pick();
        case 1: return world::Task::place();
        default: return world::Task::close();
      }
    case TaskMix::All:
      switch (episode % 4) {
        case 0: return world::Task::reach();
        case 1: return world::Task::pick();
        case 2: return world::Task::place();
        default: return world::Task::close();
      }
  }
  throw std::logic_error("unknown task mix");
}

Trajectory run_episode(const CollectConfig& config, const arm::ArmModel& model,
                       std::uint64_t episode_index, bool& reset_ok,
                       bool& plan_ok) {
  reset_ok = false;
  plan_ok = false;
  const std::uint64_t eseed = util::substream(config.seed, episode_index);

  Trajectory t;
  t.seed = eseed;
  if (config.fixed) {
    t.morphology = *config.fixed;
  } else {
    util::Rng mrng(util::substream(eseed, kMorphSalt));
    t.morphology = arm::sample_morphology(mrng, model.link_ranges);
  }
  t.task = config.task_override ? *config.task_override
                                : task_for_episode(config.mix, episode_index);

  auto state = world::reset(t.task, eseed, model, t.morphology);
  if (!state.ok()) return t;
  reset_ok = true;

  auto waypoints = plan(*state, t.task, model, t.morphology);
  if (!waypoints.ok()) return t;
  plan_ok = true;

  return execute(*waypoints, *state, t.task, model, t.morphology, config.camera,
                 eseed);
}

util::Expected<BufferManifest, CollectError> collect(
    const CollectConfig& config, const arm::ArmModel& model,
    const std::string& out_dir) {
  if (config.n_target <= 0) {
    throw std::invalid_argument("n_target must be positive");
  }
  if (config.stall_window <= 0) {
    throw std::invalid_argument("stall_window must be positive");
  }
  fs::create_directories(out_dir);
  if (!fs::is_empty(out_dir)) {
    throw std::runtime_error("collect: output directory not empty: " + out_dir);
  }

  ShardWriter writer(out_dir, config.camera.height, config.camera.width,
                     config.camera.channels);
  CollectStats stats;
  const auto target = static_cast<std::uint64_t>(config.n_target);

  // Index-ordered success flags feeding the trailing-window stall check.
  std::vector<char> outcomes;
  std::uint64_t window_successes = 0;
  bool stalled = false;

  struct Slot {
    Trajectory traj;
    bool reset_ok = false;
    bool plan_ok = false;
  };
  std::vector<Slot> batch(kBatch);

  std::uint64_t next_index = 0;
  while (writer.trajectories_written() < target && !stalled) {
    const std::uint64_t base = next_index;
    next_index += kBatch;
    util::parallel_for(kBatch, config.workers, [&](std::size_t i) {
      batch[i] = Slot{};
      batch[i].traj = run_episode(config, model, base + i, batch[i].reset_ok,
                                  batch[i].plan_ok);
    });

    for (std::size_t i = 0; i < kBatch; ++i) {
      if (writer.trajectories_written() >= target) break;
      Slot& slot = batch[i];
      stats.episodes_attempted += 1;
      for (int j = 0; j < arm::kNumJoints; ++j) {
        const auto ja = static_cast<std::size_t>(j);
        stats.attempted[ja][static_cast<std::size_t>(morph_bin(
            slot.traj.morphology.deltas[ja], model.link_ranges[ja]))] += 1;
      }

      bool stored = false;
      if (!slot.reset_ok) {
        stats.reset_failures += 1;
      } else if (!slot.plan_ok) {
        stats.plan_failures += 1;
      } else if (!slot.traj.success) {
        stats.execute_failures += 1;
      } else {
        writer.append(slot.traj);
        stats.stored_by_task[static_cast<std::size_t>(slot.traj.task.kind)] += 1;
        for (int j = 0; j < arm::kNumJoints; ++j) {
          const auto ja = static_cast<std::size_t>(j);
          stats.accepted[ja][static_cast<std::size_t>(morph_bin(
              slot.traj.morphology.deltas[ja], model.link_ranges[ja]))] += 1;
        }
        stored = true;
      }

      outcomes.push_back(stored ? 1 : 0);
      window_successes += stored ? 1u : 0u;
      const auto window = static_cast<std::size_t>(config.stall_window);
      if (outcomes.size() > window) {
        window_successes -= outcomes[outcomes.size() - window - 1];
      }
      if (outcomes.size() >= window &&
          static_cast<double>(window_successes) <
              config.stall_min_rate * static_cast<double>(window)) {
        stalled = true;
        break;
      }
    }
  }

  const auto shards = writer.finalize();
  if (stalled) return util::err(CollectError::CollectionStalled);

  nlohmann::ordered_json m;
  m["format"] = "MORPHTB1";
  m["image"] = {{"height", config.camera.height},
                {"width", config.camera.width},
                {"channels", config.camera.channels}};
  m["camera"] = camera_json(config.camera);
  m["seed"] = config.seed;
  m["task_mix"] = task_mix_name(config.mix);
  m["morphology_mode"] = config.fixed ? "fixed" : "sampled";
  if (config.fixed) m["fixed_deltas"] = config.fixed->deltas;
  if (config.task_override) m["task_override"] = task_json(*config.task_override);
  m["n_target"] = config.n_target;
  m["n_stored"] = writer.trajectories_written();
  m["steps_total"] = writer.steps_written();
  m["stored_by_task"] = stats.stored_by_task;
  m["episodes_attempted"] = stats.episodes_attempted;
  m["reset_failures"] = stats.reset_failures;
  m["plan_failures"] = stats.plan_failures;
  m["execute_failures"] = stats.execute_failures;
  m["attempted_histogram"] = histogram_json(stats.attempted);
  m["accepted_histogram"] = histogram_json(stats.accepted);
  m["shards"] = nlohmann::ordered_json::array();
  for (const auto& s : shards) {
    m["shards"].push_back({{"file", s.file},
                           {"sha256", s.sha256},
                           {"trajectories", s.trajectories},
                           {"steps", s.steps},
                           {"bytes", s.bytes}});
  }
  std::ofstream out(fs::path(out_dir) / "manifest.json",
                    std::ios::binary | std::ios::trunc);
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("collect: cannot write manifest.json");
  out.close();

  BufferManifest result;
  result.n_stored = writer.trajectories_written();
  result.steps_total = writer.steps_written();
  result.stats = stats;
  result.dir = out_dir;
  return result;
}

double chi_square_uniform(std::span<const std::uint64_t> bins) {
  std::uint64_t total = 0;
  for (auto b : bins) total += b;
  if (total == 0 || bins.empty()) return 0.0;
  const double expected =
      static_cast<double>(total) / static_cast<double>(bins.size());
  double chi2 = 0.0;
  for (auto b : bins) {
    const double d = static_cast<double>(b) - expected;
    chi2 += d * d / expected;
  }
  return chi2;
}

int morph_bin(double value, const arm::LinkRange& range) {
  const double span = range.hi - range.lo;
  if (span <= 0.0) return 0;
  const auto bin =
      static_cast<int>(std::floor((value - range.lo) / span * kMorphBins));
  return std::clamp(bin, 0, kMorphBins - 1);
}

}  // namespace morphic::expert
