#include "morphic/nn/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace morphic::nn {

BcLoss bc_loss(std::span<const double, 8> pred,
               std::span<const double, 8> target) {
  BcLoss out;

  // Displacement and finger channels: mean-squared error over the four.
  const int chans[4] = {0, 1, 2, 7};
  double mse = 0.0;
  for (int i : chans) {
    const auto k = static_cast<std::size_t>(i);
    const double d = pred[k] - target[k];
    mse += d * d;
    out.grad[k] = 2.0 * d / 4.0;
  }
  mse /= 4.0;

  // Unsigned geodesic angle between the quaternions; |dot| folds the double
  // cover so q and -q are the same rotation.
  double dot = 0.0;
  for (std::size_t k = 3; k < 7; ++k) dot += pred[k] * target[k];
  const double c = std::abs(dot);
  const double cmax = 1.0 - 1e-7;
  double quat;
  if (c >= cmax) {
    quat = 2.0 * std::acos(cmax);  // clamp saturates; gradient defined as 0
  } else {
    quat = 2.0 * std::acos(c);
    const double sign = dot > 0.0 ? 1.0 : (dot < 0.0 ? -1.0 : 0.0);
    const double coef = -2.0 * sign / std::sqrt(1.0 - c * c);
    for (std::size_t k = 3; k < 7; ++k) out.grad[k] = coef * target[k];
  }

  out.value = mse + quat;
  return out;
}

HuberLoss huber_loss(std::span<const double> a, std::span<const double> b,
                     double delta) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("huber_loss shape mismatch");
  }
  if (a.empty()) throw std::invalid_argument("huber_loss on empty tensors");
  if (delta <= 0.0) throw std::invalid_argument("huber delta must be positive");

  HuberLoss out;
  out.grad.resize(a.size());
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    if (std::abs(r) <= delta) {
      out.value += 0.5 * r * r;
      out.grad[i] = r / n;
    } else {
      out.value += delta * (std::abs(r) - 0.5 * delta);
      out.grad[i] = delta * (r > 0.0 ? 1.0 : -1.0) / n;
    }
  }
  out.value /= n;
  return out;
}

}  // namespace morphic::nn
