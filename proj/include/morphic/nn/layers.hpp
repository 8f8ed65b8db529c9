#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphic/nn/tensor.hpp"
#include "morphic/util/rng.hpp"

namespace morphic::nn {

// A layer owns its parameters, accumulated gradients, and the activation
// record from the most recent forward pass, so forward -> backward on one
// network instance must stay single-threaded. Shape violations throw
// std::invalid_argument.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x) = 0;
  // Consumes the stored activation record; accumulates parameter gradients
  // (+=) and returns the gradient with respect to the layer input.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::size_t param_count() const { return 0; }
  virtual void gather_params(std::span<double> out) const { (void)out; }
  virtual void scatter_params(std::span<const double> in) { (void)in; }
  virtual void gather_grads(std::span<double> out) const { (void)out; }
  virtual void zero_grads() {}
  virtual void init(util::Rng& rng) { (void)rng; }
  virtual nlohmann::json describe() const = 0;
};

// y = Wx + b on 1-D inputs.
class Dense : public Layer {
 public:
  Dense(int in, int out);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::size_t param_count() const override;
  void gather_params(std::span<double> out) const override;
  void scatter_params(std::span<const double> in) override;
  void gather_grads(std::span<double> out) const override;
  void zero_grads() override;
  void init(util::Rng& rng) override;
  nlohmann::json describe() const override;

 private:
  int in_, out_;
  Tensor w_, b_, gw_, gb_, x_;
};

// Valid (no padding) strided cross-correlation on channel-major (C,H,W)
// inputs, lowered to a single matrix product per call.
class Conv2d : public Layer {
 public:
  Conv2d(int in_ch, int out_ch, int kernel, int stride);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::size_t param_count() const override;
  void gather_params(std::span<double> out) const override;
  void scatter_params(std::span<const double> in) override;
  void gather_grads(std::span<double> out) const override;
  void zero_grads() override;
  void init(util::Rng& rng) override;
  nlohmann::json describe() const override;

 private:
  int in_ch_, out_ch_, kernel_, stride_;
  Tensor w_, b_, gw_, gb_, x_;
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::json describe() const override;

 private:
  Tensor x_;
};

class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::json describe() const override;

 private:
  std::vector<int> in_shape_;
};

// Projects a contiguous slice of a 1-D vector onto the unit sphere and
// passes the remaining entries through. len = -1 normalizes the whole
// vector. A slice norm at or below 1e-12 throws std::runtime_error.
class UnitNormalize : public Layer {
 public:
  explicit UnitNormalize(int offset = 0, int len = -1);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::json describe() const override;

 private:
  int offset_, len_;
  std::vector<double> z_;  // normalized slice
  double norm_ = 0.0;
};

// Layers execute in add order; parameter/gradient flattening and init follow
// the same order, which is what makes training bitwise reproducible.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <typename T, typename... Args>
  T& add(Args&&... args) {
    layers_.push_back(std::make_unique<T>(std::forward<Args>(args)...));
    return static_cast<T&>(*layers_.back());
  }

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  std::size_t param_count() const;
  void gather_params(std::span<double> out) const;
  void scatter_params(std::span<const double> in);
  void gather_grads(std::span<double> out) const;
  void zero_grads();
  // Draws weights layer by layer in add order: uniform in
  // +/- sqrt(6 / (fan_in + fan_out)), biases zero.
  void init(util::Rng& rng);
  nlohmann::json describe() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace morphic::nn
