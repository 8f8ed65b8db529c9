#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace morphic::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over one flat parameter vector. Parameters and both
// moment accumulators are rounded through float32 after every update so a
// checkpoint (which stores float32) resumes bit-exactly.
class Adam {
 public:
  explicit Adam(std::size_t n, AdamConfig cfg = {});

  void step(std::span<double> params, std::span<const double> grads);

  std::uint64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  // Checkpoint restore; moment values arrive as the stored float32s.
  void restore(std::span<const float> m, std::span<const float> v,
               std::uint64_t step_count);

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace morphic::nn
