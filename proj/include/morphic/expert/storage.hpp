#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "morphic/expert/expert.hpp"
#include "morphic/util/expected.hpp"

namespace morphic::expert {

// On-disk trajectory buffer: `manifest.json` plus `shard-%04d.bin` files of
// back-to-back trajectory records (little-endian, float32 step data, float64
// morphology and final privileged state). The exact byte layout is documented
// in docs/formats.md; shards roll over near 256 MB.

inline constexpr char kShardMagic[8] = {'M', 'O', 'R', 'P', 'H', 'T', 'B', '1'};
inline constexpr std::uint32_t kRecordMagic = 0x314a5254;  // "TRJ1"
inline constexpr std::size_t kShardRollBytes = 256ull << 20;

struct StoredStep {
  std::vector<float> image;  // height*width*channels, channel-major planes
  std::array<float, world::PrivilegedState::kDim> priv;
  std::array<float, world::Action::kDim> action;
};

struct StoredTrajectory {
  std::uint64_t seed = 0;
  world::TaskKind task = world::TaskKind::Reach;
  std::optional<arm::Pose> goal;  // set when the task carried one
  std::optional<int> cabinet;
  std::array<double, arm::kNumJoints> morphology{};
  bool success = false;
  std::vector<StoredStep> steps;
  // Privileged state after the last applied action, full precision: the
  // open-loop replay oracle.
  Eigen::Matrix<double, world::PrivilegedState::kDim, 1> final_priv;
};

// Incremental writer used during collection; trajectories must be appended in
// their final deterministic order. finalize() flushes the last shard and
// returns per-shard (file, sha256, trajectory count, step count, bytes).
class ShardWriter {
 public:
  struct ShardInfo {
    std::string file;
    std::string sha256;
    std::uint64_t trajectories = 0;
    std::uint64_t steps = 0;
    std::uint64_t bytes = 0;
  };

  ShardWriter(std::string dir, int height, int width, int channels);
  ~ShardWriter();
  ShardWriter(const ShardWriter&) = delete;
  ShardWriter& operator=(const ShardWriter&) = delete;

  void append(const Trajectory& t);
  std::vector<ShardInfo> finalize();

  std::uint64_t trajectories_written() const { return total_trajectories_; }
  std::uint64_t steps_written() const { return total_steps_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint64_t total_trajectories_ = 0;
  std::uint64_t total_steps_ = 0;
};

// Reads a buffer directory. Construction parses the manifest, verifies every
// shard's sha256 and the stored counts, and indexes record offsets; failures
// surface as the error string. Not thread-safe.
class BufferReader {
 public:
  static util::Expected<BufferReader, std::string> open(const std::string& dir);

  std::size_t num_trajectories() const { return index_.size(); }
  std::uint64_t num_steps() const { return total_steps_; }
  int image_height() const { return height_; }
  int image_width() const { return width_; }
  int image_channels() const { return channels_; }
  const std::string& manifest_json() const { return manifest_raw_; }

  struct Meta {
    std::uint64_t seed = 0;
    world::TaskKind task = world::TaskKind::Reach;
    std::optional<arm::Pose> goal;
    std::optional<int> cabinet;
    std::array<double, arm::kNumJoints> morphology{};
    std::uint32_t n_steps = 0;
  };
  const Meta& meta(std::size_t traj) const { return index_[traj].meta; }

  StoredStep step(std::size_t traj, std::size_t t);
  StoredTrajectory trajectory(std::size_t traj);

  // Flat step addressing for uniform sampling during training.
  std::pair<std::size_t, std::size_t> flat_step(std::uint64_t idx) const;

 private:
  BufferReader() = default;
  struct Entry {
    Meta meta;
    std::size_t shard = 0;
    std::uint64_t offset = 0;  // byte offset of the record's step block
  };
  std::string dir_;
  std::vector<std::string> shard_files_;
  std::vector<Entry> index_;
  std::vector<std::uint64_t> step_starts_;  // prefix sums for flat_step
  std::uint64_t total_steps_ = 0;
  int height_ = 0, width_ = 0, channels_ = 0;
  std::string manifest_raw_;
  std::size_t step_bytes_ = 0;
};

// Convenience for tests and small buffers: load everything, validated.
util::Expected<std::vector<StoredTrajectory>, std::string> load_trajectories(
    const std::string& dir);

}  // namespace morphic::expert
