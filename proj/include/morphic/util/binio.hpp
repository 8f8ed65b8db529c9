#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace morphic::util {

// All binary artifacts are little-endian; bulk float blocks are written with
// memcpy, which is only correct on a little-endian host.
static_assert(std::endian::native == std::endian::little,
              "binary artifact formats assume a little-endian host");

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}

inline void put_f32(std::ostream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

inline void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}

inline void put_f64_block(std::ostream& os, std::span<const double> block) {
  os.write(reinterpret_cast<const char*>(block.data()),
           static_cast<std::streamsize>(block.size() * sizeof(double)));
}

inline void put_f32_block(std::ostream& os, std::span<const float> block) {
  os.write(reinterpret_cast<const char*>(block.data()),
           static_cast<std::streamsize>(block.size() * sizeof(float)));
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("truncated stream (u32)");
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) throw std::runtime_error("truncated stream (u64)");
  return v;
}

inline float get_f32(std::istream& is) {
  float v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("truncated stream (f32)");
  return v;
}

inline void get_f32_block(std::istream& is, std::span<float> block) {
  is.read(reinterpret_cast<char*>(block.data()),
          static_cast<std::streamsize>(block.size() * sizeof(float)));
  if (!is) throw std::runtime_error("truncated stream (f32 block)");
}

inline double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) throw std::runtime_error("truncated stream (f64)");
  return v;
}

inline void get_f64_block(std::istream& is, std::span<double> block) {
  is.read(reinterpret_cast<char*>(block.data()),
          static_cast<std::streamsize>(block.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated stream (f64 block)");
}

}  // namespace morphic::util
