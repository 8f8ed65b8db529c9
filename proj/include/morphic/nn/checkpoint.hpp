#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morphic/util/expected.hpp"

namespace morphic::nn {

// Checkpoint container: 8-byte magic, a JSON header (architecture, step,
// hyperparameters - whatever the caller wants to pin), then named flat
// float32 blocks. Round trips are bit-exact because training state is
// float32-snapped. Layout details live in docs/formats.md.
inline constexpr char kCheckpointMagic[8] = {'M', 'O', 'R', 'P', 'H',
                                             'C', 'K', '1'};

using CheckpointBlock = std::pair<std::string, std::vector<float>>;

struct Checkpoint {
  nlohmann::json header;
  std::vector<CheckpointBlock> blocks;

  // nullptr when the name is absent.
  const std::vector<float>* find(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const nlohmann::json& header,
                      const std::vector<CheckpointBlock>& blocks);

util::Expected<Checkpoint, std::string> read_checkpoint(
    const std::string& path);

}  // namespace morphic::nn
