#include "nd/nn/deconv.hpp"

#include <algorithm>
#include <sstream>

#include "nd/core/error.hpp"
#include "nd/core/kernels.hpp"
#include "nd/whitening/whitening.hpp"

namespace nd::nn {

using patching::PatchGeometry;

template <typename T>
Deconv<T>::Deconv(std::size_t channels, std::size_t kernel, std::size_t stride,
                  std::size_t padding, patching::DeconvConfig config, bool fully_connected)
    : channels_(channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      config_(config),
      fully_connected_(fully_connected),
      tracked_buffer_({1}) {
  config_.validate();
  if (channels == 0 || kernel == 0 || stride == 0) {
    throw ConfigError("deconv: channels, kernel and stride must be >= 1");
  }
  if (fully_connected && (kernel != 1 || stride != 1 || padding != 0)) {
    throw ConfigError("deconv: a fully-connected target uses kernel 1, stride 1, padding 0");
  }
  block_width_ = patching::channel_block_width(channels, config_.block_size);
  const std::size_t count = patching::channel_block_count(channels, config_.block_size);
  const std::size_t dim = block_width_ * kernel * kernel;
  for (std::size_t b = 0; b < count; ++b) {
    running_mean_.emplace_back(Shape{dim});
    running_d_.push_back(Tensor<T>::identity(dim));
  }
}

template <typename T>
Tensor<T> Deconv<T>::as_images(const Tensor<T>& x) const {
  if (fully_connected_) {
    if (x.rank() != 2 || x.dim(1) != channels_) {
      throw DimensionError("deconv: expected B x " + std::to_string(channels_) + " input, got " +
                           to_string(x.shape()));
    }
    return x.reshaped({x.dim(0), channels_, 1, 1});
  }
  if (x.rank() != 4 || x.dim(1) != channels_) {
    throw DimensionError("deconv: expected B x " + std::to_string(channels_) +
                         " x H x W input, got " + to_string(x.shape()));
  }
  return x;
}

template <typename T>
void Deconv<T>::load_running() {
  const std::size_t kk = kernel_ * kernel_;
  const std::size_t padded = block_width_ * kk;
  current_.clear();
  for (std::size_t b = 0; b < running_mean_.size(); ++b) {
    const std::size_t real = std::min(block_width_, channels_ - b * block_width_);
    const std::size_t w = real * kk;
    WhiteningBlock<T> blk;
    blk.column_offset = b * padded;
    blk.width = w;
    blk.mean = Tensor<T>({w});
    blk.d = Tensor<T>({w, w});
    std::copy(running_mean_[b].ptr(), running_mean_[b].ptr() + w, blk.mean.ptr());
    for (std::size_t i = 0; i < w; ++i) {
      std::copy(running_d_[b].ptr() + i * padded, running_d_[b].ptr() + i * padded + w,
                blk.d.ptr() + i * w);
    }
    current_.push_back(std::move(blk));
  }
}

template <typename T>
Tensor<T> Deconv<T>::forward(const Tensor<T>& x, Mode mode) {
  const Tensor<T> images = as_images(x);
  if (mode == Mode::Eval) {
    if (tracked_ == 0) throw StateError("deconv: eval before any training step");
    load_running();
    has_forward_ = true;
    return x;
  }

  PatchGeometry g;
  g.batch = images.dim(0);
  g.channels = channels_;
  g.height = images.dim(2);
  g.width = images.dim(3);
  g.kh = g.kw = kernel_;
  g.stride = stride_;
  g.padding = padding_;
  const std::size_t sampling = fully_connected_ ? 1 : config_.sampling_stride;
  const patching::PatchMatrix<T> patches = patching::im2col_sampled(images, g, sampling);

  const std::size_t kk = kernel_ * kernel_;
  const std::size_t padded = block_width_ * kk;
  const std::size_t n = patches.data.rows(), d = patches.data.cols();
  const T m = static_cast<T>(config_.running_momentum);
  std::vector<WhiteningBlock<T>> blocks;
  double worst = 0.0;
  for (std::size_t b = 0; b < running_mean_.size(); ++b) {
    const std::size_t real = std::min(block_width_, channels_ - b * block_width_);
    const std::size_t w = real * kk;
    const std::size_t off = b * block_width_ * kk;
    // Padding channels are identically zero, so their covariance block is
    // exactly eps I and decouples; whitening the real columns alone is the
    // same transform restricted to the columns that carry data.
    Tensor<T> cols({n, w});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(patches.data.ptr() + i * d + off, patches.data.ptr() + i * d + off + w,
                cols.ptr() + i * w);
    }
    const auto stats = whitening::covariance_relative(cols, static_cast<T>(config_.epsilon));
    auto inv = whitening::inverse_sqrt_newton(stats, config_.newton_iterations);
    worst = std::max(worst, static_cast<double>(inv.residual));
    if (inv.warning) ++warnings_;

    Tensor<T>& rm = running_mean_[b];
    Tensor<T>& rd = running_d_[b];
    for (std::size_t i = 0; i < w; ++i) rm[i] = (T(1) - m) * rm[i] + m * stats.mean[i];
    for (std::size_t i = 0; i < w; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        T& r = rd[i * padded + j];
        r = (T(1) - m) * r + m * inv.d(i, j);
      }
    }

    WhiteningBlock<T> blk;
    blk.column_offset = off;
    blk.width = w;
    blk.mean = stats.mean;
    blk.d = std::move(inv.d);
    blocks.push_back(std::move(blk));
  }
  current_ = std::move(blocks);
  last_residual_ = worst;
  ++tracked_;
  tracked_buffer_[0] = static_cast<T>(tracked_);
  has_forward_ = true;
  return x;
}

template <typename T>
Tensor<T> Deconv<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) throw StateError("deconv: backward without forward");
  // The whitening is applied by the bound layer's folded weights, which also
  // carry its gradient; mean and D are constants here.
  return grad_out;
}

template <typename T>
std::vector<BufferRef<T>> Deconv<T>::buffers() {
  std::vector<BufferRef<T>> out;
  for (std::size_t b = 0; b < running_mean_.size(); ++b) {
    out.push_back({"block" + std::to_string(b) + ".running_mean", &running_mean_[b]});
    out.push_back({"block" + std::to_string(b) + ".running_d", &running_d_[b]});
  }
  out.push_back({"batches_tracked", &tracked_buffer_});
  return out;
}

template <typename T>
void Deconv<T>::buffers_loaded() {
  tracked_ = static_cast<std::size_t>(tracked_buffer_[0]);
}

template <typename T>
std::string Deconv<T>::describe() const {
  std::ostringstream os;
  os << "deconv(" << channels_ << "ch, k" << kernel_ << ", s" << stride_ << ", p" << padding_
     << ", blocks " << running_mean_.size() << "x" << block_width_ << ", sample "
     << (fully_connected_ ? 1 : config_.sampling_stride) << ")";
  return os.str();
}

template <typename T>
Tensor<T> Deconv<T>::decorrelate(const Tensor<T>& x, Mode mode) {
  forward(x, mode);
  const Tensor<T> images = as_images(x);
  const auto patches = patching::im2col(images, kernel_, kernel_, stride_, padding_);
  const std::size_t n = patches.data.rows(), d = patches.data.cols();
  // Output columns drop the padding channels: block b starts at real offset.
  Tensor<T> out({n, d});
  std::size_t out_off = 0;
  for (const auto& blk : current_) {
    const std::size_t w = blk.width;
    Tensor<T> cols({n, w});
    for (std::size_t i = 0; i < n; ++i) {
      const T* src = patches.data.ptr() + i * d + out_off;
      std::copy(src, src + w, cols.ptr() + i * w);
    }
    const Tensor<T> white = whitening::apply_decorrelation(cols, blk.mean, blk.d);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(white.ptr() + i * w, white.ptr() + (i + 1) * w, out.ptr() + i * d + out_off);
    }
    out_off += w;
  }
  return out;
}

template <typename T>
void fold_whitening(const std::vector<WhiteningBlock<T>>& blocks, const Tensor<T>& weight_flat,
                    const Tensor<T>* bias, Tensor<T>& weight_eff, Tensor<T>& bias_eff) {
  const std::size_t out = weight_flat.rows(), d = weight_flat.cols();
  weight_eff = weight_flat;
  bias_eff = bias ? *bias : Tensor<T>({out});
  std::size_t real_off = 0;
  for (const auto& blk : blocks) {
    const std::size_t w = blk.width;
    if (real_off + w > d) throw DimensionError("fold_whitening: blocks exceed weight columns");
    // W_eff[:, block] = W[:, block] * D (D symmetric).
    kernels::gemm(kernels::Trans::No, kernels::Trans::No, out, w, w, T(1),
                  weight_flat.ptr() + real_off, d, blk.d.ptr(), w, T(0),
                  weight_eff.ptr() + real_off, d);
    for (std::size_t o = 0; o < out; ++o) {
      bias_eff[o] -= kernels::dot(weight_eff.ptr() + o * d + real_off, blk.mean.ptr(), w);
    }
    real_off += w;
  }
}

template <typename T>
Tensor<T> unfold_weight_grad(const std::vector<WhiteningBlock<T>>& blocks, const Tensor<T>& g,
                             const std::vector<T>& out_sums) {
  const std::size_t out = g.rows(), d = g.cols();
  if (out_sums.size() != out) throw DimensionError("unfold_weight_grad: out_sums length");
  Tensor<T> centered = g;
  Tensor<T> result = g;
  std::size_t real_off = 0;
  for (const auto& blk : blocks) {
    const std::size_t w = blk.width;
    for (std::size_t o = 0; o < out; ++o) {
      kernels::axpy(w, -out_sums[o], blk.mean.ptr(), centered.ptr() + o * d + real_off);
    }
    kernels::gemm(kernels::Trans::No, kernels::Trans::No, out, w, w, T(1),
                  centered.ptr() + real_off, d, blk.d.ptr(), w, T(0), result.ptr() + real_off, d);
    real_off += w;
  }
  return result;
}

template class Deconv<float>;
template class Deconv<double>;
template void fold_whitening(const std::vector<WhiteningBlock<float>>&, const Tensor<float>&,
                             const Tensor<float>*, Tensor<float>&, Tensor<float>&);
template void fold_whitening(const std::vector<WhiteningBlock<double>>&, const Tensor<double>&,
                             const Tensor<double>*, Tensor<double>&, Tensor<double>&);
template Tensor<float> unfold_weight_grad(const std::vector<WhiteningBlock<float>>&,
                                          const Tensor<float>&, const std::vector<float>&);
template Tensor<double> unfold_weight_grad(const std::vector<WhiteningBlock<double>>&,
                                           const Tensor<double>&, const std::vector<double>&);

}  // namespace nd::nn
