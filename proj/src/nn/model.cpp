#include "nd/nn/model.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "nd/core/error.hpp"
#include "nd/nn/deconv.hpp"
#include "nd/nn/layers.hpp"

namespace nd::nn {

std::string_view to_string(NormMode mode) noexcept {
  switch (mode) {
    case NormMode::BatchNorm: return "batchnorm";
    case NormMode::Deconv: return "deconv";
    case NormMode::None: return "none";
  }
  return "unknown";
}

NormMode parse_norm_mode(std::string_view text) {
  if (text == "batchnorm" || text == "bn") return NormMode::BatchNorm;
  if (text == "deconv" || text == "nd") return NormMode::Deconv;
  if (text == "none") return NormMode::None;
  throw ConfigError("unknown norm mode '" + std::string(text) + "'");
}

namespace {

// Depth-first walk; composite layers contribute their children, leaves their
// own params and buffers.
template <typename T>
void walk(Layer<T>& layer, const std::string& path,
          const std::function<void(Layer<T>&, const std::string&)>& leaf) {
  auto kids = layer.children();
  if (kids.empty()) {
    leaf(layer, path);
    return;
  }
  for (std::size_t i = 0; i < kids.size(); ++i) walk(*kids[i], path + "." + std::to_string(i), leaf);
}

}  // namespace

template <typename T>
Model<T>::Model(ModelSpec spec, std::vector<LayerPtr<T>> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("model has no layers");
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> y = x;
  for (auto& l : layers_) y = l->forward(y, mode);
  return y;
}

template <typename T>
Tensor<T> Model<T>::backward(const Tensor<T>& grad_logits) {
  Tensor<T> g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& np : named_params()) np.param->grad.fill(T(0));
}

template <typename T>
std::vector<NamedParam<T>> Model<T>::named_params() {
  std::vector<NamedParam<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    walk<T>(*layers_[i], std::to_string(i), [&](Layer<T>& l, const std::string& path) {
      for (auto* p : l.params()) out.push_back({path + "." + p->name, p});
    });
  }
  return out;
}

template <typename T>
std::vector<NamedBuffer<T>> Model<T>::named_buffers() {
  std::vector<NamedBuffer<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    walk<T>(*layers_[i], std::to_string(i), [&](Layer<T>& l, const std::string& path) {
      for (auto& b : l.buffers()) out.push_back({path + "." + b.name, b.tensor});
    });
  }
  return out;
}

template <typename T>
void Model<T>::buffers_loaded() {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    walk<T>(*layers_[i], std::to_string(i),
            [](Layer<T>& l, const std::string&) { l.buffers_loaded(); });
  }
}

template <typename T>
std::vector<LayerDesc> Model<T>::structure() {
  std::vector<LayerDesc> out;
  std::function<void(Layer<T>&, const std::string&)> visit = [&](Layer<T>& l,
                                                                  const std::string& path) {
    out.push_back({l.kind(), path, l.kind() == LayerKind::Residual ? "residual" : l.describe()});
    auto kids = l.children();
    for (std::size_t i = 0; i < kids.size(); ++i) visit(*kids[i], path + "." + std::to_string(i));
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) visit(*layers_[i], std::to_string(i));
  return out;
}

template <typename T>
std::vector<LayerKind> Model<T>::layer_kinds() {
  std::vector<LayerKind> out;
  for (const auto& d : structure()) out.push_back(d.kind);
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() {
  std::size_t n = 0;
  for (auto& np : named_params()) n += np.param->value.size();
  return n;
}

template <typename T>
std::string Model<T>::summary() {
  std::ostringstream os;
  os << spec_.architecture << " (" << to_string(spec_.norm_mode) << ", " << spec_.class_count
     << " classes, " << parameter_count() << " params)\n";
  for (const auto& d : structure()) os << "  " << d.path << "  " << d.describe << '\n';
  return os.str();
}

namespace {

template <typename T>
class Builder {
 public:
  Builder(const ModelSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  using Seq = std::vector<LayerPtr<T>>;

  // [deconv] conv [bn] ; no relu.
  void conv(Seq& seq, std::size_t in, std::size_t out, std::size_t k, std::size_t stride,
            std::size_t pad) {
    const bool deconv = spec_.norm_mode == NormMode::Deconv;
    Deconv<T>* white = nullptr;
    if (deconv) {
      auto d = std::make_unique<Deconv<T>>(in, k, stride, pad, spec_.deconv, false);
      white = d.get();
      seq.push_back(std::move(d));
    }
    auto c = std::make_unique<Conv2d<T>>(in, out, k, stride, pad,
                                         spec_.norm_mode != NormMode::BatchNorm);
    kaiming(c->weight().value, in * k * k);
    c->bind_whitening(white);
    seq.push_back(std::move(c));
    if (spec_.norm_mode == NormMode::BatchNorm) {
      seq.push_back(std::make_unique<BatchNorm<T>>(out, spec_.bn_epsilon, spec_.bn_momentum));
    }
  }

  // [deconv] fc ; the classifier head keeps its bias in every mode.
  void fc(Seq& seq, std::size_t in, std::size_t out) {
    Deconv<T>* white = nullptr;
    if (spec_.norm_mode == NormMode::Deconv) {
      auto d = std::make_unique<Deconv<T>>(in, 1, 1, 0, spec_.deconv, true);
      white = d.get();
      seq.push_back(std::move(d));
    }
    auto l = std::make_unique<Linear<T>>(in, out);
    kaiming(l->weight().value, in);
    l->bind_whitening(white);
    seq.push_back(std::move(l));
  }

  void relu(Seq& seq) { seq.push_back(std::make_unique<Relu<T>>()); }

  Seq vgg() {
    const std::size_t w = spec_.base_width;
    const std::size_t widths[4] = {w, 2 * w, 4 * w, 4 * w};
    if (spec_.input_size % 4 != 0) {
      throw ConfigError("vgg-mini: input size must be divisible by 4");
    }
    Seq seq;
    std::size_t in = spec_.input_channels;
    for (int b = 0; b < 4; ++b) {
      conv(seq, in, widths[b], 3, 1, 1);
      relu(seq);
      if (b == 1 || b == 3) seq.push_back(std::make_unique<MaxPool2d<T>>(2));
      in = widths[b];
    }
    seq.push_back(std::make_unique<Flatten<T>>());
    const std::size_t side = spec_.input_size / 4;
    fc(seq, in * side * side, spec_.class_count);
    return seq;
  }

  // A downsampling block uses 2x2 stride-2 convs on both branches, since a
  // strided 3x3 conv with padding 1 has no integral output on even inputs.
  LayerPtr<T> block(std::size_t in, std::size_t out, std::size_t stride) {
    Seq main;
    if (stride == 1) {
      conv(main, in, out, 3, 1, 1);
    } else {
      conv(main, in, out, stride, stride, 0);
    }
    relu(main);
    conv(main, out, out, 3, 1, 1);
    Seq shortcut;
    if (stride != 1) {
      conv(shortcut, in, out, stride, stride, 0);
    } else if (in != out) {
      conv(shortcut, in, out, 1, 1, 0);
    }
    return std::make_unique<ResidualBlock<T>>(std::move(main), std::move(shortcut));
  }

  Seq resnet() {
    const std::size_t w = spec_.base_width;
    if (spec_.input_size % 2 != 0) throw ConfigError("resnet-mini: input size must be even");
    Seq seq;
    conv(seq, spec_.input_channels, w, 3, 1, 1);
    relu(seq);
    const std::size_t plan[4][3] = {{w, w, 1}, {w, w, 1}, {w, 2 * w, 2}, {2 * w, 2 * w, 1}};
    for (const auto& p : plan) {
      seq.push_back(block(p[0], p[1], p[2]));
      relu(seq);
    }
    seq.push_back(std::make_unique<GlobalAvgPool<T>>());
    fc(seq, 2 * w, spec_.class_count);
    return seq;
  }

  // flatten, fc(hidden) with normalization, relu, fc(classes).
  Seq mlp() {
    const std::size_t features = spec_.input_channels * spec_.input_size * spec_.input_size;
    const std::size_t hidden = spec_.base_width;
    Seq seq;
    seq.push_back(std::make_unique<Flatten<T>>());
    fc(seq, features, hidden);
    if (spec_.norm_mode == NormMode::BatchNorm) {
      seq.push_back(std::make_unique<BatchNorm<T>>(hidden, spec_.bn_epsilon, spec_.bn_momentum));
    }
    relu(seq);
    fc(seq, hidden, spec_.class_count);
    return seq;
  }

 private:
  void kaiming(Tensor<T>& w, std::size_t fan_in) {
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (T& v : w.storage()) v = static_cast<T>(rng_.normal() * scale);
  }

  const ModelSpec& spec_;
  Rng& rng_;
};

}  // namespace

template <typename T>
Model<T> build_model(const ModelSpec& spec, Rng& rng) {
  if (spec.class_count < 2) throw ConfigError("model needs at least 2 classes");
  if (spec.base_width == 0 || spec.input_channels == 0 || spec.input_size == 0) {
    throw ConfigError("model widths and input geometry must be positive");
  }
  spec.deconv.validate();
  Builder<T> b(spec, rng);
  std::vector<LayerPtr<T>> layers;
  if (spec.architecture == "vgg-mini") {
    layers = b.vgg();
  } else if (spec.architecture == "resnet-mini") {
    layers = b.resnet();
  } else if (spec.architecture == "mlp") {
    layers = b.mlp();
  } else {
    throw ConfigError("unknown architecture '" + spec.architecture +
                      "' (expected vgg-mini, resnet-mini or mlp)");
  }
  return Model<T>(spec, std::move(layers));
}

template class Model<float>;
template class Model<double>;
template Model<float> build_model(const ModelSpec&, Rng&);
template Model<double> build_model(const ModelSpec&, Rng&);

}  // namespace nd::nn
