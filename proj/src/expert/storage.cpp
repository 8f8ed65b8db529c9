#include "morphic/expert/storage.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "morphic/util/binio.hpp"
#include "morphic/util/hash.hpp"

namespace morphic::expert {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPrivDim = world::PrivilegedState::kDim;
constexpr std::size_t kActDim = world::Action::kDim;

std::string shard_name(std::size_t idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%04zu.bin", idx);
  return buf;
}

std::size_t step_record_bytes(int h, int w, int c) {
  return (static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
              static_cast<std::size_t>(c) +
          kPrivDim + kActDim) *
         sizeof(float);
}

}  // namespace

struct ShardWriter::Impl {
  std::string dir;
  int height, width, channels;
  std::ofstream out;
  std::size_t shard_idx = 0;
  std::uint64_t shard_bytes = 0;
  std::uint64_t shard_trajectories = 0;
  std::uint64_t shard_steps = 0;
  std::vector<ShardInfo> done;

  void open_next() {
    const std::string file = shard_name(shard_idx);
    out.open(fs::path(dir) / file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open shard " + file);
    out.write(kShardMagic, sizeof(kShardMagic));
    util::put_u32(out, static_cast<std::uint32_t>(height));
    util::put_u32(out, static_cast<std::uint32_t>(width));
    util::put_u32(out, static_cast<std::uint32_t>(channels));
    shard_bytes = sizeof(kShardMagic) + 12;
    shard_trajectories = 0;
    shard_steps = 0;
  }

  void close_current() {
    if (!out.is_open()) return;
    const std::string file = shard_name(shard_idx);
    out.close();
    auto digest = util::sha256_file_hex(fs::path(dir) / file);
    if (!digest.ok()) throw std::runtime_error(digest.error());
    done.push_back(
        {file, *digest, shard_trajectories, shard_steps, shard_bytes});
    ++shard_idx;
  }
};

ShardWriter::ShardWriter(std::string dir, int height, int width, int channels)
    : impl_(new Impl{std::move(dir), height, width, channels, {}, 0, 0, 0, 0, {}}) {}

ShardWriter::~ShardWriter() = default;

void ShardWriter::append(const Trajectory& t) {
  if (!t.success) throw std::logic_error("refusing to persist a failed trajectory");
  auto& im = *impl_;
  if (!im.out.is_open()) im.open_next();
  std::ostream& os = im.out;

  const std::uint64_t before = im.shard_bytes;
  util::put_u32(os, kRecordMagic);
  util::put_u64(os, t.seed);
  util::put_u32(os, static_cast<std::uint32_t>(t.task.kind));
  util::put_u32(os, static_cast<std::uint32_t>(
                        t.task.cabinet ? *t.task.cabinet : -1));
  util::put_u32(os, t.task.goal ? 1u : 0u);
  const arm::Pose goal = t.task.goal ? *t.task.goal : arm::Pose{};
  util::put_f64(os, goal.p.x());
  util::put_f64(os, goal.p.y());
  util::put_f64(os, goal.p.z());
  util::put_f64(os, goal.q.w());
  util::put_f64(os, goal.q.x());
  util::put_f64(os, goal.q.y());
  util::put_f64(os, goal.q.z());
  util::put_f64_block(os, t.morphology.deltas);
  util::put_u32(os, 1u);  // success
  util::put_u32(os, static_cast<std::uint32_t>(t.steps.size()));

  std::vector<float> fbuf;
  for (const auto& step : t.steps) {
    fbuf.assign(step.image.data.begin(), step.image.data.end());
    util::put_f32_block(os, fbuf);
    const auto priv = step.priv.flatten();
    std::array<float, kPrivDim> pf{};
    for (std::size_t i = 0; i < kPrivDim; ++i) {
      pf[i] = static_cast<float>(priv[static_cast<Eigen::Index>(i)]);
    }
    util::put_f32_block(os, pf);
    util::put_f32_block(os, action_to_f32(step.action));
  }
  std::array<double, kPrivDim> fin{};
  for (std::size_t i = 0; i < kPrivDim; ++i) {
    fin[i] = t.final_priv[static_cast<Eigen::Index>(i)];
  }
  util::put_f64_block(os, fin);
  if (!os) throw std::runtime_error("shard write failed");

  const std::size_t header = 4 + 8 + 4 + 4 + 4 + 7 * 8 + 7 * 8 + 4 + 4;
  im.shard_bytes =
      before + header +
      t.steps.size() * step_record_bytes(im.height, im.width, im.channels) +
      kPrivDim * 8;
  im.shard_trajectories += 1;
  im.shard_steps += t.steps.size();
  total_trajectories_ += 1;
  total_steps_ += t.steps.size();

  if (im.shard_bytes >= kShardRollBytes) im.close_current();
}

std::vector<ShardWriter::ShardInfo> ShardWriter::finalize() {
  impl_->close_current();
  return impl_->done;
}

util::Expected<BufferReader, std::string> BufferReader::open(
    const std::string& dir) {
  BufferReader r;
  r.dir_ = dir;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) return util::err(std::string("missing manifest: ") + manifest_path.string());
  r.manifest_raw_.assign(std::istreambuf_iterator<char>(mf),
                         std::istreambuf_iterator<char>());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(r.manifest_raw_);
  } catch (const std::exception& e) {
    return util::err(std::string("manifest parse error: ") + e.what());
  }
  try {
    if (m.at("format") != "MORPHTB1") return util::err(std::string("unknown buffer format"));
    r.height_ = m.at("image").at("height").get<int>();
    r.width_ = m.at("image").at("width").get<int>();
    r.channels_ = m.at("image").at("channels").get<int>();
    r.step_bytes_ = step_record_bytes(r.height_, r.width_, r.channels_);

    const auto expected_n = m.at("n_stored").get<std::uint64_t>();
    const auto expected_steps = m.at("steps_total").get<std::uint64_t>();

    for (const auto& js : m.at("shards")) {
      const std::string file = js.at("file").get<std::string>();
      const fs::path path = fs::path(dir) / file;
      auto digest = util::sha256_file_hex(path);
      if (!digest.ok()) return util::err(digest.error());
      if (*digest != js.at("sha256").get<std::string>()) {
        return util::err("sha256 mismatch in " + file);
      }
      std::ifstream in(path, std::ios::binary);
      if (!in) return util::err("cannot open " + file);
      char magic[8];
      in.read(magic, 8);
      if (!in || std::memcmp(magic, kShardMagic, 8) != 0) {
        return util::err("bad shard magic in " + file);
      }
      if (util::get_u32(in) != static_cast<std::uint32_t>(r.height_) ||
          util::get_u32(in) != static_cast<std::uint32_t>(r.width_) ||
          util::get_u32(in) != static_cast<std::uint32_t>(r.channels_)) {
        return util::err("shard image dims disagree with manifest in " + file);
      }
      const std::uint64_t declared = js.at("trajectories").get<std::uint64_t>();
      r.shard_files_.push_back(file);
      for (std::uint64_t k = 0; k < declared; ++k) {
        if (util::get_u32(in) != kRecordMagic) {
          return util::err("bad record magic in " + file);
        }
        Entry e;
        e.shard = r.shard_files_.size() - 1;
        e.meta.seed = util::get_u64(in);
        const auto kind = util::get_u32(in);
        if (kind > 3) return util::err("bad task kind in " + file);
        e.meta.task = static_cast<world::TaskKind>(kind);
        const auto cab = static_cast<std::int32_t>(util::get_u32(in));
        if (cab >= 0) e.meta.cabinet = cab;
        const bool has_goal = util::get_u32(in) != 0;
        arm::Pose goal;
        goal.p.x() = util::get_f64(in);
        goal.p.y() = util::get_f64(in);
        goal.p.z() = util::get_f64(in);
        double qw = util::get_f64(in), qx = util::get_f64(in),
               qy = util::get_f64(in), qz = util::get_f64(in);
        goal.q = Eigen::Quaterniond(qw, qx, qy, qz);
        if (has_goal) e.meta.goal = goal;
        util::get_f64_block(in, e.meta.morphology);
        if (util::get_u32(in) != 1u) {
          return util::err("stored trajectory without success flag in " + file);
        }
        e.meta.n_steps = util::get_u32(in);
        if (e.meta.n_steps >
            static_cast<std::uint32_t>(world::world_config().episode_cap)) {
          return util::err("stored trajectory exceeds the episode cap in " + file);
        }
        e.offset = static_cast<std::uint64_t>(in.tellg());
        in.seekg(static_cast<std::streamoff>(e.meta.n_steps * r.step_bytes_ +
                                             kPrivDim * 8),
                 std::ios::cur);
        if (!in) return util::err("truncated record in " + file);
        r.step_starts_.push_back(r.total_steps_);
        r.total_steps_ += e.meta.n_steps;
        r.index_.push_back(std::move(e));
      }
      in.peek();
      if (!in.eof()) return util::err("trailing bytes in " + file);
    }
    if (r.index_.size() != expected_n) {
      return util::err(std::string("manifest trajectory count disagrees with shards"));
    }
    if (r.total_steps_ != expected_steps) {
      return util::err(std::string("manifest step count disagrees with shards"));
    }
  } catch (const std::exception& e) {
    return util::err(std::string("manifest structure error: ") + e.what());
  }
  return r;
}

StoredStep BufferReader::step(std::size_t traj, std::size_t t) {
  const Entry& e = index_.at(traj);
  if (t >= e.meta.n_steps) throw std::out_of_range("step index");
  std::ifstream in(fs::path(dir_) / shard_files_[e.shard], std::ios::binary);
  if (!in) throw std::runtime_error("cannot reopen shard");
  in.seekg(static_cast<std::streamoff>(e.offset + t * step_bytes_));
  StoredStep s;
  s.image.resize(static_cast<std::size_t>(height_) * width_ * channels_);
  util::get_f32_block(in, s.image);
  util::get_f32_block(in, s.priv);
  util::get_f32_block(in, s.action);
  return s;
}

StoredTrajectory BufferReader::trajectory(std::size_t traj) {
  const Entry& e = index_.at(traj);
  StoredTrajectory out;
  out.seed = e.meta.seed;
  out.task = e.meta.task;
  out.goal = e.meta.goal;
  out.cabinet = e.meta.cabinet;
  out.morphology = e.meta.morphology;
  out.success = true;
  std::ifstream in(fs::path(dir_) / shard_files_[e.shard], std::ios::binary);
  if (!in) throw std::runtime_error("cannot reopen shard");
  in.seekg(static_cast<std::streamoff>(e.offset));
  out.steps.resize(e.meta.n_steps);
  for (auto& s : out.steps) {
    s.image.resize(static_cast<std::size_t>(height_) * width_ * channels_);
    util::get_f32_block(in, s.image);
    util::get_f32_block(in, s.priv);
    util::get_f32_block(in, s.action);
  }
  std::array<double, kPrivDim> fin{};
  util::get_f64_block(in, fin);
  for (std::size_t i = 0; i < kPrivDim; ++i) {
    out.final_priv[static_cast<Eigen::Index>(i)] = fin[i];
  }
  return out;
}

std::pair<std::size_t, std::size_t> BufferReader::flat_step(
    std::uint64_t idx) const {
  if (idx >= total_steps_) throw std::out_of_range("flat step index");
  // Last trajectory whose first flat index is <= idx.
  std::size_t lo = 0, hi = step_starts_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (step_starts_[mid] <= idx) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return {lo, static_cast<std::size_t>(idx - step_starts_[lo])};
}

util::Expected<std::vector<StoredTrajectory>, std::string> load_trajectories(
    const std::string& dir) {
  auto reader = BufferReader::open(dir);
  if (!reader.ok()) return util::err(reader.error());
  std::vector<StoredTrajectory> out;
  out.reserve(reader->num_trajectories());
  for (std::size_t i = 0; i < reader->num_trajectories(); ++i) {
    out.push_back(reader->trajectory(i));
  }
  return out;
}

}  // namespace morphic::expert
