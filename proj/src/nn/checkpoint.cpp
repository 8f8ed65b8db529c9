#include "morphic/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "morphic/util/binio.hpp"

namespace morphic::nn {

const std::vector<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, data] : blocks) {
    if (n == name) return &data;
  }
  return nullptr;
}

void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const std::vector<CheckpointBlock>& blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string h = header.dump();
  util::put_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  util::put_u32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& [name, data] : blocks) {
    util::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    util::put_u64(out, data.size());
    util::put_f32_block(out, data);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

util::Expected<Checkpoint, std::string> read_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return util::err("cannot open checkpoint: " + path);
  try {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
      return util::err("bad checkpoint magic in " + path);
    }
    const std::uint64_t hlen = util::get_u64(in);
    if (hlen > (1ull << 30)) return util::err(std::string("oversized checkpoint header"));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) return util::err(std::string("truncated checkpoint header"));
    Checkpoint ck;
    try {
      ck.header = nlohmann::json::parse(htext);
    } catch (const std::exception& e) {
      return util::err(std::string("checkpoint header parse error: ") + e.what());
    }
    const std::uint32_t n_blocks = util::get_u32(in);
    if (n_blocks > 4096) return util::err(std::string("implausible checkpoint block count"));
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
      const std::uint32_t name_len = util::get_u32(in);
      if (name_len > 4096) return util::err(std::string("implausible block name length"));
      std::string name(name_len, '\0');
      in.read(name.data(), static_cast<std::streamsize>(name_len));
      if (!in) return util::err(std::string("truncated block name"));
      const std::uint64_t count = util::get_u64(in);
      if (count > (1ull << 32)) return util::err(std::string("implausible block size"));
      std::vector<float> data(count);
      util::get_f32_block(in, data);
      ck.blocks.emplace_back(std::move(name), std::move(data));
    }
    in.peek();
    if (!in.eof()) return util::err("trailing bytes in checkpoint " + path);
    return ck;
  } catch (const std::exception& e) {
    return util::err(std::string("truncated checkpoint: ") + e.what());
  }
}

}  // namespace morphic::nn
