#include "morphic/sense/augment.hpp"

#include <algorithm>
#include <cmath>

#include "morphic/util/rng.hpp"

namespace morphic::sense {

Image augment(const Image& image, std::uint64_t seed) {
  util::Rng rng(seed);
  if (rng.uniform() < 0.5) return image;

  Image out = image;
  const bool coarse = rng.uniform() < 0.5;
  const int count = coarse ? static_cast<int>(rng.uniform_int(20, 60))
                           : static_cast<int>(rng.uniform_int(1, 3));
  const double area_lo = coarse ? 0.002 : 0.05;
  const double area_hi = coarse ? 0.01 : 0.20;
  const double total =
      static_cast<double>(image.height) * static_cast<double>(image.width);
  for (int i = 0; i < count; ++i) {
    const double area = rng.uniform(area_lo, area_hi) * total;
    const double aspect = rng.uniform(0.5, 2.0);
    const int rw = std::clamp(
        static_cast<int>(std::lround(std::sqrt(area * aspect))), 1,
        image.width);
    const int rh = std::clamp(
        static_cast<int>(std::lround(area / rw)), 1, image.height);
    const int x0 = static_cast<int>(rng.uniform_int(0, image.width - rw));
    const int y0 = static_cast<int>(rng.uniform_int(0, image.height - rh));
    for (int ch = 0; ch < image.channels; ++ch) {
      for (int y = y0; y < y0 + rh; ++y) {
        for (int x = x0; x < x0 + rw; ++x) out.at(ch, y, x) = 0.0;
      }
    }
  }
  return out;
}

}  // namespace morphic::sense
