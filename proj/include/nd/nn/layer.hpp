#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nd/core/tensor.hpp"

namespace nd::nn {

enum class Mode { Train, Eval };

enum class LayerKind {
  Conv,
  Fc,
  Relu,
  MaxPool,
  AvgPool,
  BatchNorm,
  Deconv,
  Flatten,
  Residual,
  SoftmaxXent,
};

using nd::to_string;
std::string_view to_string(LayerKind kind) noexcept;

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
};

// Non-learnable state (running statistics). Points into the owning layer.
template <typename T>
struct BufferRef {
  std::string name;
  Tensor<T>* tensor = nullptr;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const noexcept = 0;
  // Validates the input shape, records what backward needs, returns the output.
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  // Accumulates parameter gradients and returns the gradient w.r.t. the input
  // of the most recent forward. Throws StateError without a prior forward.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

  virtual std::vector<Param<T>*> params() { return {}; }
  virtual std::vector<BufferRef<T>> buffers() { return {}; }
  // Called after buffers were overwritten (checkpoint restore).
  virtual void buffers_loaded() {}
  // Nested layers, for composites.
  virtual std::vector<Layer<T>*> children() { return {}; }
  virtual std::string describe() const { return std::string(to_string(kind())); }
};

template <typename T>
using LayerPtr = std::unique_ptr<Layer<T>>;

}  // namespace nd::nn
