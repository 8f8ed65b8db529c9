#include "morphic/nn/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace morphic::nn {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<RowMat>;
using ConstMapRowMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;

void require_shape(bool ok, const std::string& what,
                   const std::vector<int>& got) {
  if (!ok) throw std::invalid_argument(what + ", got " + shape_string(got));
}

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void draw_uniform(Tensor& t, util::Rng& rng, double limit) {
  for (double& w : t.data) w = rng.uniform(-limit, limit);
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(int in, int out)
    : in_(in), out_(out), w_({out, in}), b_({out}), gw_({out, in}), gb_({out}) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("dense dims must be positive");
}

Tensor Dense::forward(const Tensor& x) {
  require_shape(x.shape == std::vector<int>{in_}, "dense expects 1-D input of " +
                                                      std::to_string(in_),
                x.shape);
  x_ = x;
  Tensor y({out_});
  MapVec(y.data.data(), out_) =
      ConstMapRowMat(w_.data.data(), out_, in_) * ConstMapVec(x.data.data(), in_) +
      ConstMapVec(b_.data.data(), out_);
  return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
  require_shape(grad_out.shape == std::vector<int>{out_},
                "dense gradient shape mismatch", grad_out.shape);
  ConstMapVec g(grad_out.data.data(), out_);
  ConstMapVec x(x_.data.data(), in_);
  MapRowMat(gw_.data.data(), out_, in_) += g * x.transpose();
  MapVec(gb_.data.data(), out_) += g;
  Tensor gx({in_});
  MapVec(gx.data.data(), in_) =
      ConstMapRowMat(w_.data.data(), out_, in_).transpose() * g;
  return gx;
}

std::size_t Dense::param_count() const { return w_.size() + b_.size(); }

void Dense::gather_params(std::span<double> out) const {
  std::copy(w_.data.begin(), w_.data.end(), out.begin());
  std::copy(b_.data.begin(), b_.data.end(), out.begin() + static_cast<std::ptrdiff_t>(w_.size()));
}

void Dense::scatter_params(std::span<const double> in) {
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(w_.size()), w_.data.begin());
  std::copy(in.begin() + static_cast<std::ptrdiff_t>(w_.size()), in.end(), b_.data.begin());
}

void Dense::gather_grads(std::span<double> out) const {
  std::copy(gw_.data.begin(), gw_.data.end(), out.begin());
  std::copy(gb_.data.begin(), gb_.data.end(), out.begin() + static_cast<std::ptrdiff_t>(gw_.size()));
}

void Dense::zero_grads() {
  std::fill(gw_.data.begin(), gw_.data.end(), 0.0);
  std::fill(gb_.data.begin(), gb_.data.end(), 0.0);
}

void Dense::init(util::Rng& rng) {
  draw_uniform(w_, rng, glorot_limit(in_, out_));
  std::fill(b_.data.begin(), b_.data.end(), 0.0);
}

nlohmann::json Dense::describe() const {
  return {{"kind", "dense"}, {"in", in_}, {"out", out_}};
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      w_({out_ch, in_ch, kernel, kernel}),
      b_({out_ch}),
      gw_({out_ch, in_ch, kernel, kernel}),
      gb_({out_ch}) {
  if (in_ch <= 0 || out_ch <= 0 || kernel <= 0 || stride <= 0) {
    throw std::invalid_argument("conv2d dims must be positive");
  }
}

namespace {

// col(kidx, n) = x(ic, oy*stride + ky, ox*stride + kx) with
// kidx = (ic*k + ky)*k + kx and n = oy*ow + ox.
void im2col(const Tensor& x, int in_ch, int h, int w, int kernel, int stride,
            int oh, int ow, Eigen::MatrixXd& col) {
  col.resize(static_cast<Eigen::Index>(in_ch) * kernel * kernel,
             static_cast<Eigen::Index>(oh) * ow);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const Eigen::Index n = static_cast<Eigen::Index>(oy) * ow + ox;
      Eigen::Index kidx = 0;
      for (int ic = 0; ic < in_ch; ++ic) {
        const std::size_t plane = static_cast<std::size_t>(ic) *
                                  static_cast<std::size_t>(h) *
                                  static_cast<std::size_t>(w);
        for (int ky = 0; ky < kernel; ++ky) {
          const std::size_t row =
              plane + static_cast<std::size_t>(oy * stride + ky) *
                          static_cast<std::size_t>(w) +
              static_cast<std::size_t>(ox * stride);
          for (int kx = 0; kx < kernel; ++kx) {
            col(kidx++, n) = x.data[row + static_cast<std::size_t>(kx)];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x) {
  require_shape(x.shape.size() == 3 && x.shape[0] == in_ch_ &&
                    x.shape[1] >= kernel_ && x.shape[2] >= kernel_,
                "conv2d expects (C,H,W) input with C = " + std::to_string(in_ch_),
                x.shape);
  x_ = x;
  const int h = x.shape[1], w = x.shape[2];
  const int oh = (h - kernel_) / stride_ + 1;
  const int ow = (w - kernel_) / stride_ + 1;
  Eigen::MatrixXd col;
  im2col(x, in_ch_, h, w, kernel_, stride_, oh, ow, col);

  Tensor y({out_ch_, oh, ow});
  const Eigen::Index n = static_cast<Eigen::Index>(oh) * ow;
  MapRowMat ym(y.data.data(), out_ch_, n);
  ym = ConstMapRowMat(w_.data.data(), out_ch_, col.rows()) * col;
  ym.colwise() += Eigen::Map<const Eigen::VectorXd>(b_.data.data(), out_ch_);
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const int h = x_.shape[1], w = x_.shape[2];
  const int oh = (h - kernel_) / stride_ + 1;
  const int ow = (w - kernel_) / stride_ + 1;
  require_shape(grad_out.shape == std::vector<int>{out_ch_, oh, ow},
                "conv2d gradient shape mismatch", grad_out.shape);

  Eigen::MatrixXd col;
  im2col(x_, in_ch_, h, w, kernel_, stride_, oh, ow, col);
  const Eigen::Index n = static_cast<Eigen::Index>(oh) * ow;
  ConstMapRowMat g(grad_out.data.data(), out_ch_, n);

  MapRowMat(gw_.data.data(), out_ch_, col.rows()) += g * col.transpose();
  MapVec(gb_.data.data(), out_ch_) += g.rowwise().sum();

  const Eigen::MatrixXd gcol =
      ConstMapRowMat(w_.data.data(), out_ch_, col.rows()).transpose() * g;

  Tensor gx({in_ch_, h, w});
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const Eigen::Index ncol = static_cast<Eigen::Index>(oy) * ow + ox;
      Eigen::Index kidx = 0;
      for (int ic = 0; ic < in_ch_; ++ic) {
        const std::size_t plane = static_cast<std::size_t>(ic) *
                                  static_cast<std::size_t>(h) *
                                  static_cast<std::size_t>(w);
        for (int ky = 0; ky < kernel_; ++ky) {
          const std::size_t row =
              plane + static_cast<std::size_t>(oy * stride_ + ky) *
                          static_cast<std::size_t>(w) +
              static_cast<std::size_t>(ox * stride_);
          for (int kx = 0; kx < kernel_; ++kx) {
            gx.data[row + static_cast<std::size_t>(kx)] += gcol(kidx++, ncol);
          }
        }
      }
    }
  }
  return gx;
}

std::size_t Conv2d::param_count() const { return w_.size() + b_.size(); }

void Conv2d::gather_params(std::span<double> out) const {
  std::copy(w_.data.begin(), w_.data.end(), out.begin());
  std::copy(b_.data.begin(), b_.data.end(), out.begin() + static_cast<std::ptrdiff_t>(w_.size()));
}

void Conv2d::scatter_params(std::span<const double> in) {
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(w_.size()), w_.data.begin());
  std::copy(in.begin() + static_cast<std::ptrdiff_t>(w_.size()), in.end(), b_.data.begin());
}

void Conv2d::gather_grads(std::span<double> out) const {
  std::copy(gw_.data.begin(), gw_.data.end(), out.begin());
  std::copy(gb_.data.begin(), gb_.data.end(), out.begin() + static_cast<std::ptrdiff_t>(gw_.size()));
}

void Conv2d::zero_grads() {
  std::fill(gw_.data.begin(), gw_.data.end(), 0.0);
  std::fill(gb_.data.begin(), gb_.data.end(), 0.0);
}

void Conv2d::init(util::Rng& rng) {
  const int fan = in_ch_ * kernel_ * kernel_;
  draw_uniform(w_, rng, glorot_limit(fan, out_ch_ * kernel_ * kernel_));
  std::fill(b_.data.begin(), b_.data.end(), 0.0);
}

nlohmann::json Conv2d::describe() const {
  return {{"kind", "conv2d"},
          {"in_ch", in_ch_},
          {"out_ch", out_ch_},
          {"kernel", kernel_},
          {"stride", stride_}};
}

// ---------------------------------------------------------------------------
// Relu / Flatten / UnitNormalize

Tensor Relu::forward(const Tensor& x) {
  x_ = x;
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
  require_shape(grad_out.shape == x_.shape, "relu gradient shape mismatch",
                grad_out.shape);
  Tensor gx = grad_out;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    if (x_.data[i] <= 0.0) gx.data[i] = 0.0;
  }
  return gx;
}

nlohmann::json Relu::describe() const { return {{"kind", "relu"}}; }

Tensor Flatten::forward(const Tensor& x) {
  in_shape_ = x.shape;
  Tensor y;
  y.shape = {static_cast<int>(x.size())};
  y.data = x.data;
  return y;
}

Tensor Flatten::backward(const Tensor& grad_out) {
  require_shape(grad_out.size() == Tensor::count(in_shape_),
                "flatten gradient shape mismatch", grad_out.shape);
  Tensor gx;
  gx.shape = in_shape_;
  gx.data = grad_out.data;
  return gx;
}

nlohmann::json Flatten::describe() const { return {{"kind", "flatten"}}; }

UnitNormalize::UnitNormalize(int offset, int len) : offset_(offset), len_(len) {
  if (offset < 0 || (len != -1 && len <= 0)) {
    throw std::invalid_argument("unit_normalize slice out of range");
  }
}

Tensor UnitNormalize::forward(const Tensor& x) {
  require_shape(x.shape.size() == 1, "unit_normalize expects a 1-D input",
                x.shape);
  const int size = x.shape[0];
  const int len = len_ == -1 ? size - offset_ : len_;
  if (offset_ + len > size || len <= 0) {
    throw std::invalid_argument("unit_normalize slice out of range");
  }
  double sq = 0.0;
  for (int i = 0; i < len; ++i) {
    const double v = x.data[static_cast<std::size_t>(offset_ + i)];
    sq += v * v;
  }
  norm_ = std::sqrt(sq);
  if (norm_ <= 1e-12) {
    throw std::runtime_error("unit_normalize: input norm below 1e-12");
  }
  Tensor y = x;
  z_.resize(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    z_[static_cast<std::size_t>(i)] =
        x.data[static_cast<std::size_t>(offset_ + i)] / norm_;
    y.data[static_cast<std::size_t>(offset_ + i)] = z_[static_cast<std::size_t>(i)];
  }
  return y;
}

Tensor UnitNormalize::backward(const Tensor& grad_out) {
  const int len = static_cast<int>(z_.size());
  require_shape(grad_out.shape.size() == 1 &&
                    grad_out.shape[0] >= offset_ + len,
                "unit_normalize gradient shape mismatch", grad_out.shape);
  Tensor gx = grad_out;
  double zg = 0.0;
  for (int i = 0; i < len; ++i) {
    zg += z_[static_cast<std::size_t>(i)] *
          grad_out.data[static_cast<std::size_t>(offset_ + i)];
  }
  // (I - z z^T) / ||x|| applied to the slice.
  for (int i = 0; i < len; ++i) {
    const auto k = static_cast<std::size_t>(offset_ + i);
    gx.data[k] = (grad_out.data[k] - z_[static_cast<std::size_t>(i)] * zg) / norm_;
  }
  return gx;
}

nlohmann::json UnitNormalize::describe() const {
  return {{"kind", "unit_normalize"}, {"offset", offset_}, {"len", len_}};
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->backward(g);
  }
  return g;
}

std::size_t Sequential::param_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer->param_count();
  return n;
}

void Sequential::gather_params(std::span<double> out) const {
  std::size_t at = 0;
  for (const auto& layer : layers_) {
    layer->gather_params(out.subspan(at, layer->param_count()));
    at += layer->param_count();
  }
}

void Sequential::scatter_params(std::span<const double> in) {
  std::size_t at = 0;
  for (auto& layer : layers_) {
    layer->scatter_params(in.subspan(at, layer->param_count()));
    at += layer->param_count();
  }
}

void Sequential::gather_grads(std::span<double> out) const {
  std::size_t at = 0;
  for (const auto& layer : layers_) {
    layer->gather_grads(out.subspan(at, layer->param_count()));
    at += layer->param_count();
  }
}

void Sequential::zero_grads() {
  for (auto& layer : layers_) layer->zero_grads();
}

void Sequential::init(util::Rng& rng) {
  for (auto& layer : layers_) layer->init(rng);
}

nlohmann::json Sequential::describe() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& layer : layers_) out.push_back(layer->describe());
  return out;
}

}  // namespace morphic::nn
