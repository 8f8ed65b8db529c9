#pragma once

#include <array>
#include <span>
#include <vector>

namespace morphic::nn {

// Imitation loss on flattened 8-vector actions [dx, dy, dz, qw, qx, qy, qz,
// dfinger]: mean-squared error over the four displacement/finger channels
// plus twice the unsigned geodesic angle between the quaternions,
// 2*acos(clamp(|q_hat . q|, 0, 1 - 1e-7)). The prediction's quaternion slice
// is assumed unit-normalized by the network head; the gradient is zero where
// the clamp saturates.
struct BcLoss {
  double value = 0.0;
  std::array<double, 8> grad{};  // with respect to the prediction
};
BcLoss bc_loss(std::span<const double, 8> pred, std::span<const double, 8> target);

// Elementwise Huber with threshold delta, mean-reduced over all entries.
// grad is with respect to `a`; the gradient with respect to `b` is its
// negation.
struct HuberLoss {
  double value = 0.0;
  std::vector<double> grad;
};
HuberLoss huber_loss(std::span<const double> a, std::span<const double> b,
                     double delta);

}  // namespace morphic::nn
