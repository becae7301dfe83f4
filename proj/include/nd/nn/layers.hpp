#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nd/nn/deconv.hpp"
#include "nd/nn/layer.hpp"
#include "nd/patching/patching.hpp"

namespace nd::nn {

// 2-D convolution lowered to GEMM over im2col patches.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t padding, bool bias);

  LayerKind kind() const noexcept override { return LayerKind::Conv; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override;
  std::string describe() const override;

  // Input patches are whitened by `deconv` (which must precede this layer).
  void bind_whitening(const Deconv<T>* deconv);
  const Deconv<T>* whitening() const noexcept { return whitening_; }

  Param<T>& weight() noexcept { return weight_; }  // [out, in, k, k]
  Param<T>* bias() noexcept { return bias_ ? &*bias_ : nullptr; }
  std::size_t in_channels() const noexcept { return in_; }
  std::size_t out_channels() const noexcept { return out_; }
  std::size_t kernel() const noexcept { return kernel_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t padding() const noexcept { return padding_; }

 private:
  std::size_t in_, out_, kernel_, stride_, padding_;
  Param<T> weight_;
  std::optional<Param<T>> bias_;
  const Deconv<T>* whitening_ = nullptr;

  patching::PatchGeometry geometry_;
  Tensor<T> patches_;     // N x d, raw (unwhitened)
  Tensor<T> weight_eff_;  // out x d, weight with whitening folded in
  std::vector<WhiteningBlock<T>> blocks_;  // whitening used by the cached forward
  bool has_forward_ = false;
};

template <typename T>
class Linear final : public Layer<T> {
 public:
  Linear(std::size_t in_features, std::size_t out_features);

  LayerKind kind() const noexcept override { return LayerKind::Fc; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override;
  std::string describe() const override;

  void bind_whitening(const Deconv<T>* deconv);
  const Deconv<T>* whitening() const noexcept { return whitening_; }

  Param<T>& weight() noexcept { return weight_; }  // [out, in]
  Param<T>& bias() noexcept { return bias_; }
  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }

 private:
  std::size_t in_, out_;
  Param<T> weight_;
  Param<T> bias_;
  const Deconv<T>* whitening_ = nullptr;
  Tensor<T> input_;
  Tensor<T> weight_eff_;
  std::vector<WhiteningBlock<T>> blocks_;
  bool has_forward_ = false;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::Relu; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Tensor<T> input_;
  bool has_forward_ = false;
};

// Non-overlapping max pooling with a square window (stride == window).
template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  explicit MaxPool2d(std::size_t window = 2);

  LayerKind kind() const noexcept override { return LayerKind::MaxPool; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::string describe() const override;

 private:
  std::size_t window_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
  bool has_forward_ = false;
};

// Global average pooling: B x C x H x W -> B x C.
template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::AvgPool; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Shape input_shape_;
  bool has_forward_ = false;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  LayerKind kind() const noexcept override { return LayerKind::Flatten; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Shape input_shape_;
  bool has_forward_ = false;
};

// Per-channel (rank 4) or per-feature (rank 2) batch normalization with a
// learnable scale and shift.
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, double epsilon = 1e-5, double momentum = 0.1);

  LayerKind kind() const noexcept override { return LayerKind::BatchNorm; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override;
  std::vector<BufferRef<T>> buffers() override;
  std::string describe() const override;

  Param<T>& gamma() noexcept { return gamma_; }
  Param<T>& beta() noexcept { return beta_; }
  const Tensor<T>& running_mean() const noexcept { return running_mean_; }
  const Tensor<T>& running_var() const noexcept { return running_var_; }
  std::size_t batches_tracked() const noexcept;

 private:
  std::size_t channels_;
  double epsilon_;
  double momentum_;
  Param<T> gamma_;
  Param<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  Tensor<T> tracked_;  // [1]

  Mode mode_ = Mode::Train;
  Shape input_shape_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  bool has_forward_ = false;
};

// y = main(x) + shortcut(x); an empty shortcut is the identity.
template <typename T>
class ResidualBlock final : public Layer<T> {
 public:
  ResidualBlock(std::vector<LayerPtr<T>> main, std::vector<LayerPtr<T>> shortcut);

  LayerKind kind() const noexcept override { return LayerKind::Residual; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override;
  std::vector<BufferRef<T>> buffers() override;
  std::vector<Layer<T>*> children() override;
  std::string describe() const override;

  std::vector<LayerPtr<T>>& main() noexcept { return main_; }
  std::vector<LayerPtr<T>>& shortcut() noexcept { return shortcut_; }

 private:
  std::vector<LayerPtr<T>> main_;
  std::vector<LayerPtr<T>> shortcut_;
};

}  // namespace nd::nn
