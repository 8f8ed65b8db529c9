#include "morphic/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace morphic::nn {

Adam::Adam(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam_step size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double mh = m_[i] / bc1;
    const double vh = v_[i] / bc2;
    params[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    // Float32 snap: checkpoints store float32, and resumed runs must
    // continue bit-exactly from what was written.
    params[i] = static_cast<double>(static_cast<float>(params[i]));
    m_[i] = static_cast<double>(static_cast<float>(m_[i]));
    v_[i] = static_cast<double>(static_cast<float>(v_[i]));
  }
}

void Adam::restore(std::span<const float> m, std::span<const float> v,
                   std::uint64_t step_count) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw std::invalid_argument("adam restore size mismatch");
  }
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = static_cast<double>(m[i]);
    v_[i] = static_cast<double>(v[i]);
  }
  t_ = step_count;
}

}  // namespace morphic::nn
