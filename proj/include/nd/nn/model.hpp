#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nd/core/rng.hpp"
#include "nd/nn/layer.hpp"
#include "nd/patching/patching.hpp"

namespace nd::nn {

enum class NormMode { BatchNorm, Deconv, None };

std::string_view to_string(NormMode mode) noexcept;
// Accepts "batchnorm", "deconv", "none"; throws ConfigError otherwise.
NormMode parse_norm_mode(std::string_view text);

// One entry of the flattened layer sequence (pre-order through residual blocks).
struct LayerDesc {
  LayerKind kind;
  std::string path;      // e.g. "3" or "5.main.1"
  std::string describe;  // geometry summary
};

struct ModelSpec {
  // "vgg-mini", "resnet-mini", or "mlp" (two fc layers, for smoke tests).
  std::string architecture = "vgg-mini";
  NormMode norm_mode = NormMode::BatchNorm;
  std::size_t class_count = 10;
  std::size_t base_width = 32;  // vgg-mini: w, 2w, 4w, 4w; resnet-mini: w, 2w; mlp: hidden
  std::size_t input_channels = 3;
  std::size_t input_size = 32;  // square H = W
  patching::DeconvConfig deconv;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.1;
};

template <typename T>
struct NamedParam {
  std::string name;
  Param<T>* param;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
class Model {
 public:
  Model(ModelSpec spec, std::vector<LayerPtr<T>> layers);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  // Backpropagates dL/dlogits through every layer, accumulating into grads.
  Tensor<T> backward(const Tensor<T>& grad_logits);

  void zero_grad();
  std::vector<NamedParam<T>> named_params();
  std::vector<NamedBuffer<T>> named_buffers();
  // Lets layers refresh derived state after their buffers were overwritten.
  void buffers_loaded();

  std::vector<LayerDesc> structure();
  std::vector<LayerKind> layer_kinds();
  std::size_t parameter_count();
  std::string summary();

  const ModelSpec& spec() const noexcept { return spec_; }
  std::vector<LayerPtr<T>>& layers() noexcept { return layers_; }

 private:
  ModelSpec spec_;
  std::vector<LayerPtr<T>> layers_;
};

// Builds the architecture with Kaiming-normal weights (gain sqrt(2), fan-in)
// and zero biases drawn from `rng`. Throws ConfigError for unknown names.
template <typename T>
Model<T> build_model(const ModelSpec& spec, Rng& rng);

}  // namespace nd::nn
