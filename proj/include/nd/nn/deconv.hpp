#pragma once

#include <cstddef>
#include <vector>

#include "nd/nn/layer.hpp"
#include "nd/patching/patching.hpp"

namespace nd::nn {

// Per-block whitening state applied to the next layer's patches.
template <typename T>
struct WhiteningBlock {
  std::size_t column_offset = 0;  // first patch column of this block
  std::size_t width = 0;          // real (unpadded) columns
  Tensor<T> mean;                 // [width]
  Tensor<T> d;                    // [width x width]
};

// Network deconvolution placed in front of a conv or fc layer.
//
// In training mode it estimates, per channel block, the covariance of the
// next layer's (subsampled) input patches and an approximate inverse square
// root D; running averages of mean and D serve eval mode. The activation
// itself passes through unchanged: the bound conv/fc consumes (p - mean) * D
// by folding D into its weights, which is algebraically identical to feeding
// it the decorrelated patch matrix. Mean and D carry no gradient.
template <typename T>
class Deconv final : public Layer<T> {
 public:
  // Geometry of the layer this one feeds. For a fully-connected target use
  // kernel 1, stride 1, padding 0 with `channels` = input features.
  Deconv(std::size_t channels, std::size_t kernel, std::size_t stride, std::size_t padding,
         patching::DeconvConfig config, bool fully_connected);

  LayerKind kind() const noexcept override { return LayerKind::Deconv; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<BufferRef<T>> buffers() override;
  void buffers_loaded() override;
  std::string describe() const override;

  // The decorrelated patch matrix (p - mean) * D for input x, built
  // explicitly (reference path; training folds instead). Runs forward(x, mode)
  // first, so train mode updates running statistics.
  Tensor<T> decorrelate(const Tensor<T>& x, Mode mode);

  const std::vector<WhiteningBlock<T>>& current() const noexcept { return current_; }
  const patching::DeconvConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t kernel() const noexcept { return kernel_; }
  std::size_t patch_dim() const noexcept { return channels_ * kernel_ * kernel_; }
  std::size_t block_count() const noexcept { return running_mean_.size(); }
  std::size_t batches_tracked() const noexcept { return tracked_; }
  // Largest Newton residual of the most recent training batch.
  double last_residual() const noexcept { return last_residual_; }
  std::size_t convergence_warnings() const noexcept { return warnings_; }

 private:
  Tensor<T> as_images(const Tensor<T>& x) const;
  void load_running();

  std::size_t channels_;
  std::size_t kernel_;
  std::size_t stride_;
  std::size_t padding_;
  patching::DeconvConfig config_;
  bool fully_connected_;
  std::size_t block_width_;  // channels per block (padded)

  std::vector<Tensor<T>> running_mean_;  // per block [block_dim]
  std::vector<Tensor<T>> running_d_;     // per block [block_dim x block_dim]
  Tensor<T> tracked_buffer_;             // [1], mirrors tracked_ for checkpoints
  std::size_t tracked_ = 0;
  std::vector<WhiteningBlock<T>> current_;
  bool has_forward_ = false;
  double last_residual_ = 0.0;
  std::size_t warnings_ = 0;
};

// W_eff^T = W * blockdiag(D)^T for W [out x d]; bias_eff = bias - W_eff^T * mean.
template <typename T>
void fold_whitening(const std::vector<WhiteningBlock<T>>& blocks, const Tensor<T>& weight_flat,
                    const Tensor<T>* bias, Tensor<T>& weight_eff, Tensor<T>& bias_eff);

// Gradient w.r.t. W given G = dL/dW_eff^T computed on raw (uncentered) patches
// and the per-output sums of dL/dy: dW = (G - rowsum (x) mean) * blockdiag(D).
template <typename T>
Tensor<T> unfold_weight_grad(const std::vector<WhiteningBlock<T>>& blocks, const Tensor<T>& g,
                             const std::vector<T>& out_sums);

}  // namespace nd::nn
