#pragma once

#include <cstdint>

#include "morphic/sense/camera.hpp"

namespace morphic::sense {

// Training-time patch dropout. With probability 1/2 the image passes through
// unchanged; otherwise one of two styles is applied, all channels zeroed
// inside each patch:
//   - few large patches: 1-3 rectangles, each 5-20% of the image area
//   - many small patches: 20-60 rectangles, each 0.2-1% of the area
// Deterministic in (image, seed).
Image augment(const Image& image, std::uint64_t seed);

}  // namespace morphic::sense
