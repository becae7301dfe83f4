#include "nd/core/error.hpp"
#include "nd/nn/layers.hpp"

namespace nd::nn {

template <typename T>
ResidualBlock<T>::ResidualBlock(std::vector<LayerPtr<T>> main, std::vector<LayerPtr<T>> shortcut)
    : main_(std::move(main)), shortcut_(std::move(shortcut)) {
  if (main_.empty()) throw ConfigError("residual: main branch is empty");
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> y = x;
  for (auto& l : main_) y = l->forward(y, mode);
  Tensor<T> s = x;
  for (auto& l : shortcut_) s = l->forward(s, mode);
  if (y.shape() != s.shape()) {
    throw DimensionError("residual: branch shapes differ, " + to_string(y.shape()) + " vs " +
                         to_string(s.shape()));
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s[i];
  return y;
}

template <typename T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (auto it = main_.rbegin(); it != main_.rend(); ++it) g = (*it)->backward(g);
  Tensor<T> s = grad_out;
  for (auto it = shortcut_.rbegin(); it != shortcut_.rend(); ++it) s = (*it)->backward(s);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
  return g;
}

namespace {

template <typename T, typename F>
void each(std::vector<LayerPtr<T>>& layers, F&& f) {
  for (auto& l : layers) f(*l);
}

}  // namespace

template <typename T>
std::vector<Param<T>*> ResidualBlock<T>::params() {
  std::vector<Param<T>*> out;
  auto add = [&](Layer<T>& l) {
    for (auto* p : l.params()) out.push_back(p);
  };
  each(main_, add);
  each(shortcut_, add);
  return out;
}

template <typename T>
std::vector<BufferRef<T>> ResidualBlock<T>::buffers() {
  std::vector<BufferRef<T>> out;
  auto add = [&](Layer<T>& l) {
    for (auto& b : l.buffers()) out.push_back(b);
  };
  each(main_, add);
  each(shortcut_, add);
  return out;
}

template <typename T>
std::vector<Layer<T>*> ResidualBlock<T>::children() {
  std::vector<Layer<T>*> out;
  for (auto& l : main_) out.push_back(l.get());
  for (auto& l : shortcut_) out.push_back(l.get());
  return out;
}

template <typename T>
std::string ResidualBlock<T>::describe() const {
  std::string s = "residual[";
  for (std::size_t i = 0; i < main_.size(); ++i) {
    if (i) s += ", ";
    s += main_[i]->describe();
  }
  s += " | ";
  if (shortcut_.empty()) s += "identity";
  for (std::size_t i = 0; i < shortcut_.size(); ++i) {
    if (i) s += ", ";
    s += shortcut_[i]->describe();
  }
  return s + "]";
}

template class ResidualBlock<float>;
template class ResidualBlock<double>;

}  // namespace nd::nn
