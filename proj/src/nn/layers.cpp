#include "nd/nn/layers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nd/core/error.hpp"
#include "nd/core/kernels.hpp"

namespace nd::nn {

using kernels::Trans;

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Fc: return "fc";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Deconv: return "deconv";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Residual: return "residual";
    case LayerKind::SoftmaxXent: return "softmax_xent";
  }
  return "unknown";
}

namespace {

template <typename T>
void accumulate(Tensor<T>& into, const Tensor<T>& add) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += add[i];
}

[[noreturn]] void no_forward(const char* layer) {
  throw StateError(std::string(layer) + ": backward without a recorded forward");
}

}  // namespace

// ---- Conv2d ----

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t padding, bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weight_("weight", Tensor<T>({out_channels, in_channels, kernel, kernel})) {
  if (stride == 0) throw ConfigError("conv: stride must be >= 1");
  if (bias) bias_.emplace("bias", Tensor<T>({out_channels}));
}

template <typename T>
void Conv2d<T>::bind_whitening(const Deconv<T>* deconv) {
  if (deconv && (deconv->channels() != in_ || deconv->kernel() != kernel_)) {
    throw ConfigError("conv: whitening geometry does not match the layer");
  }
  whitening_ = deconv;
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode) {
  if (x.rank() != 4 || x.dim(1) != in_) {
    throw DimensionError("conv: expected B x " + std::to_string(in_) + " x H x W input, got " +
                         to_string(x.shape()));
  }
  auto p = patching::im2col(x, kernel_, kernel_, stride_, padding_);
  geometry_ = p.geometry;
  patches_ = std::move(p.data);
  const std::size_t d = geometry_.cols();
  const Tensor<T> w_flat = weight_.value.reshaped({out_, d});
  Tensor<T> bias_eff;
  if (whitening_) {
    if (whitening_->current().empty()) throw StateError("conv: whitening layer has not run");
    blocks_ = whitening_->current();
    fold_whitening(blocks_, w_flat, bias_ ? &bias_->value : nullptr, weight_eff_, bias_eff);
  } else {
    blocks_.clear();
    weight_eff_ = w_flat;
    bias_eff = bias_ ? bias_->value : Tensor<T>({out_});
  }

  const std::size_t batch = geometry_.batch;
  const std::size_t positions = geometry_.out_h() * geometry_.out_w();
  Tensor<T> y({batch, out_, geometry_.out_h(), geometry_.out_w()});
  for (std::size_t b = 0; b < batch; ++b) {
    T* yb = y.ptr() + b * out_ * positions;
    kernels::gemm(Trans::No, Trans::Yes, out_, positions, d, T(1), weight_eff_.ptr(), d,
                  patches_.ptr() + b * positions * d, d, T(0), yb, positions);
    for (std::size_t o = 0; o < out_; ++o) {
      const T bo = bias_eff[o];
      if (bo == T(0)) continue;
      for (std::size_t i = 0; i < positions; ++i) yb[o * positions + i] += bo;
    }
  }
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("conv");
  const std::size_t batch = geometry_.batch;
  const std::size_t positions = geometry_.out_h() * geometry_.out_w();
  const std::size_t d = geometry_.cols();
  if (grad_out.shape() != Shape{batch, out_, geometry_.out_h(), geometry_.out_w()}) {
    throw DimensionError("conv: gradient shape " + to_string(grad_out.shape()) +
                         " does not match the forward output");
  }
  Tensor<T> g({out_, d});
  std::vector<T> sums(out_, T(0));
  Tensor<T> dp({batch * positions, d});
  for (std::size_t b = 0; b < batch; ++b) {
    const T* dyb = grad_out.ptr() + b * out_ * positions;
    kernels::gemm(Trans::No, Trans::No, out_, d, positions, T(1), dyb, positions,
                  patches_.ptr() + b * positions * d, d, b ? T(1) : T(0), g.ptr(), d);
    kernels::gemm(Trans::Yes, Trans::No, positions, d, out_, T(1), dyb, positions,
                  weight_eff_.ptr(), d, T(0), dp.ptr() + b * positions * d, d);
    for (std::size_t o = 0; o < out_; ++o) {
      T s = T(0);
      for (std::size_t i = 0; i < positions; ++i) s += dyb[o * positions + i];
      sums[o] += s;
    }
  }
  const Tensor<T> dw = whitening_ ? unfold_weight_grad(blocks_, g, sums) : g;
  accumulate(weight_.grad, dw);
  if (bias_) {
    for (std::size_t o = 0; o < out_; ++o) bias_->grad[o] += sums[o];
  }
  return patching::col2im(dp, geometry_);
}

template <typename T>
std::vector<Param<T>*> Conv2d<T>::params() {
  std::vector<Param<T>*> out{&weight_};
  if (bias_) out.push_back(&*bias_);
  return out;
}

template <typename T>
std::string Conv2d<T>::describe() const {
  std::ostringstream os;
  os << "conv(" << in_ << "->" << out_ << ", k" << kernel_ << ", s" << stride_ << ", p"
     << padding_ << (bias_ ? ", bias" : "") << ")";
  return os.str();
}

// ---- Linear ----

template <typename T>
Linear<T>::Linear(std::size_t in_features, std::size_t out_features)
    : in_(in_features),
      out_(out_features),
      weight_("weight", Tensor<T>({out_features, in_features})),
      bias_("bias", Tensor<T>({out_features})) {}

template <typename T>
void Linear<T>::bind_whitening(const Deconv<T>* deconv) {
  if (deconv && (deconv->patch_dim() != in_ || deconv->kernel() != 1)) {
    throw ConfigError("fc: whitening geometry does not match the layer");
  }
  whitening_ = deconv;
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, Mode) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw DimensionError("fc: expected B x " + std::to_string(in_) + " input, got " +
                         to_string(x.shape()));
  }
  input_ = x;
  Tensor<T> bias_eff;
  if (whitening_) {
    if (whitening_->current().empty()) throw StateError("fc: whitening layer has not run");
    blocks_ = whitening_->current();
    fold_whitening(blocks_, weight_.value, &bias_.value, weight_eff_, bias_eff);
  } else {
    blocks_.clear();
    weight_eff_ = weight_.value;
    bias_eff = bias_.value;
  }
  const std::size_t batch = x.dim(0);
  Tensor<T> y({batch, out_});
  kernels::gemm(Trans::No, Trans::Yes, batch, out_, in_, T(1), x.ptr(), in_, weight_eff_.ptr(),
                in_, T(0), y.ptr(), out_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_; ++o) y(b, o) += bias_eff[o];
  }
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("fc");
  const std::size_t batch = input_.dim(0);
  if (grad_out.shape() != Shape{batch, out_}) {
    throw DimensionError("fc: gradient shape " + to_string(grad_out.shape()) +
                         " does not match the forward output");
  }
  Tensor<T> g({out_, in_});
  kernels::gemm(Trans::Yes, Trans::No, out_, in_, batch, T(1), grad_out.ptr(), out_,
                input_.ptr(), in_, T(0), g.ptr(), in_);
  std::vector<T> sums(out_, T(0));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_; ++o) sums[o] += grad_out(b, o);
  }
  const Tensor<T> dw = whitening_ ? unfold_weight_grad(blocks_, g, sums) : g;
  accumulate(weight_.grad, dw);
  for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += sums[o];
  Tensor<T> dx({batch, in_});
  kernels::gemm(Trans::No, Trans::No, batch, in_, out_, T(1), grad_out.ptr(), out_,
                weight_eff_.ptr(), in_, T(0), dx.ptr(), in_);
  return dx;
}

template <typename T>
std::vector<Param<T>*> Linear<T>::params() {
  return {&weight_, &bias_};
}

template <typename T>
std::string Linear<T>::describe() const {
  return "fc(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

// ---- Relu ----

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& x, Mode) {
  if (x.empty()) throw DimensionError("relu: empty input");
  input_ = x;
  Tensor<T> y = x;
  for (T& v : y.storage()) v = v > T(0) ? v : T(0);
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("relu");
  if (grad_out.shape() != input_.shape()) throw DimensionError("relu: gradient shape mismatch");
  Tensor<T> dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(input_[i] > T(0))) dx[i] = T(0);
  }
  return dx;
}

// ---- MaxPool2d ----

template <typename T>
MaxPool2d<T>::MaxPool2d(std::size_t window) : window_(window) {
  if (window == 0) throw ConfigError("maxpool: window must be >= 1");
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, Mode) {
  if (x.rank() != 4) {
    throw DimensionError("maxpool: expected a B x C x H x W input, got " + to_string(x.shape()));
  }
  const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < window_ || w < window_) {
    throw GeometryError("maxpool: window " + std::to_string(window_) + " exceeds input " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t oh = h / window_, ow = w / window_;
  input_shape_ = x.shape();
  Tensor<T> y({b, c, oh, ow});
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (std::size_t n = 0; n < b * c; ++n) {
    const std::size_t base = n * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
        std::size_t best = base + oy * window_ * w + ox * window_;
        for (std::size_t ky = 0; ky < window_; ++ky) {
          for (std::size_t kx = 0; kx < window_; ++kx) {
            const std::size_t idx = base + (oy * window_ + ky) * w + ox * window_ + kx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        argmax_[o] = best;
        y[o] = x[best];
      }
    }
  }
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("maxpool");
  if (grad_out.size() != argmax_.size()) throw DimensionError("maxpool: gradient shape mismatch");
  Tensor<T> dx(input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx[argmax_[i]] += grad_out[i];
  return dx;
}

template <typename T>
std::string MaxPool2d<T>::describe() const {
  return "maxpool(" + std::to_string(window_) + ")";
}

// ---- GlobalAvgPool ----

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x, Mode) {
  if (x.rank() != 4) {
    throw DimensionError("avgpool: expected a B x C x H x W input, got " + to_string(x.shape()));
  }
  input_shape_ = x.shape();
  const std::size_t bc = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> y({x.dim(0), x.dim(1)});
  for (std::size_t i = 0; i < bc; ++i) {
    T s = T(0);
    for (std::size_t j = 0; j < hw; ++j) s += x[i * hw + j];
    y[i] = s / static_cast<T>(hw);
  }
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("avgpool");
  const std::size_t bc = input_shape_[0] * input_shape_[1];
  const std::size_t hw = input_shape_[2] * input_shape_[3];
  if (grad_out.size() != bc) throw DimensionError("avgpool: gradient shape mismatch");
  Tensor<T> dx(input_shape_);
  for (std::size_t i = 0; i < bc; ++i) {
    const T g = grad_out[i] / static_cast<T>(hw);
    for (std::size_t j = 0; j < hw; ++j) dx[i * hw + j] = g;
  }
  return dx;
}

// ---- Flatten ----

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, Mode) {
  if (x.rank() < 2) throw DimensionError("flatten: expected rank >= 2, got " + to_string(x.shape()));
  input_shape_ = x.shape();
  has_forward_ = true;
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("flatten");
  return grad_out.reshaped(input_shape_);
}

// ---- BatchNorm ----

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double epsilon, double momentum)
    : channels_(channels),
      epsilon_(epsilon),
      momentum_(momentum),
      gamma_("gamma", Tensor<T>({channels}, T(1))),
      beta_("beta", Tensor<T>({channels})),
      running_mean_({channels}),
      running_var_({channels}, T(1)),
      tracked_({1}) {
  if (!(epsilon >= 0.0)) throw ConfigError("batchnorm: epsilon must be >= 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("batchnorm: momentum must lie in [0, 1]");
}

template <typename T>
std::size_t BatchNorm<T>::batches_tracked() const noexcept {
  return static_cast<std::size_t>(tracked_[0]);
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode) {
  if ((x.rank() != 2 && x.rank() != 4) || x.dim(1) != channels_) {
    throw DimensionError("batchnorm: expected B x " + std::to_string(channels_) +
                         " (x H x W) input, got " + to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t inner = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  const std::size_t count = batch * inner;
  input_shape_ = x.shape();
  mode_ = mode;
  xhat_ = Tensor<T>(x.shape());
  inv_std_.assign(channels_, T(0));
  Tensor<T> y(x.shape());

  std::vector<T> mean(channels_), var(channels_);
  if (mode == Mode::Train) {
    for (std::size_t c = 0; c < channels_; ++c) {
      T s = T(0);
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = x.ptr() + (b * channels_ + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) s += p[i];
      }
      const T mu = s / static_cast<T>(count);
      T v = T(0);
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = x.ptr() + (b * channels_ + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) v += (p[i] - mu) * (p[i] - mu);
      }
      mean[c] = mu;
      var[c] = v / static_cast<T>(count);
    }
    const T m = static_cast<T>(momentum_);
    const T unbias = count > 1 ? static_cast<T>(count) / static_cast<T>(count - 1) : T(1);
    for (std::size_t c = 0; c < channels_; ++c) {
      running_mean_[c] = (T(1) - m) * running_mean_[c] + m * mean[c];
      running_var_[c] = (T(1) - m) * running_var_[c] + m * var[c] * unbias;
    }
    tracked_[0] += T(1);
  } else {
    if (batches_tracked() == 0) throw StateError("batchnorm: eval before any training step");
    for (std::size_t c = 0; c < channels_; ++c) {
      mean[c] = running_mean_[c];
      var[c] = running_var_[c];
    }
  }

  for (std::size_t c = 0; c < channels_; ++c) {
    inv_std_[c] = T(1) / std::sqrt(var[c] + static_cast<T>(epsilon_));
    if (!std::isfinite(inv_std_[c])) {
      throw NumericalDomainError("batchnorm: zero variance with epsilon 0 in channel " +
                                 std::to_string(c));
    }
  }
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t off = (b * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const T h = (x[off + i] - mean[c]) * inv_std_[c];
        xhat_[off + i] = h;
        y[off + i] = gamma_.value[c] * h + beta_.value[c];
      }
    }
  }
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_out) {
  if (!has_forward_) no_forward("batchnorm");
  if (grad_out.shape() != input_shape_) throw DimensionError("batchnorm: gradient shape mismatch");
  const std::size_t batch = input_shape_[0];
  const std::size_t inner = input_shape_.size() == 4 ? input_shape_[2] * input_shape_[3] : 1;
  const T count = static_cast<T>(batch * inner);
  Tensor<T> dx(input_shape_);
  for (std::size_t c = 0; c < channels_; ++c) {
    T sum_dy = T(0), sum_dy_xhat = T(0);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        sum_dy += grad_out[off + i];
        sum_dy_xhat += grad_out[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[c] += sum_dy_xhat;
    beta_.grad[c] += sum_dy;
    const T gs = gamma_.value[c] * inv_std_[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        if (mode_ == Mode::Train) {
          dx[off + i] =
              gs * (grad_out[off + i] - sum_dy / count - xhat_[off + i] * sum_dy_xhat / count);
        } else {
          dx[off + i] = gs * grad_out[off + i];
        }
      }
    }
  }
  return dx;
}

template <typename T>
std::vector<Param<T>*> BatchNorm<T>::params() {
  return {&gamma_, &beta_};
}

template <typename T>
std::vector<BufferRef<T>> BatchNorm<T>::buffers() {
  return {{"running_mean", &running_mean_},
          {"running_var", &running_var_},
          {"batches_tracked", &tracked_}};
}

template <typename T>
std::string BatchNorm<T>::describe() const {
  return "batchnorm(" + std::to_string(channels_) + ")";
}

#define ND_INSTANTIATE(T)          \
  template class Conv2d<T>;        \
  template class Linear<T>;        \
  template class Relu<T>;          \
  template class MaxPool2d<T>;     \
  template class GlobalAvgPool<T>; \
  template class Flatten<T>;       \
  template class BatchNorm<T>;

ND_INSTANTIATE(float)
ND_INSTANTIATE(double)

#undef ND_INSTANTIATE

}  // namespace nd::nn
