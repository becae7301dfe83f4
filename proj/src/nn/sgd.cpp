#include "nd/nn/sgd.hpp"

#include <cmath>

#include "nd/core/error.hpp"

namespace nd::nn {

template <typename T>
Sgd<T>::Sgd(SgdConfig config) : config_(config) {
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw ConfigError("sgd: momentum must lie in [0, 1)");
  }
  if (!(config.weight_decay >= 0.0)) throw ConfigError("sgd: weight_decay must be >= 0");
}

template <typename T>
void Sgd<T>::step(const std::vector<NamedParam<T>>& params, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("sgd: learning rate must be finite and >= 0");
  for (const auto& np : params) {
    if (!np.param->grad.all_finite()) {
      throw DivergenceError("non-finite gradient in parameter " + np.name);
    }
  }
  const T mu = static_cast<T>(config_.momentum);
  const T wd = static_cast<T>(config_.weight_decay);
  const T step = static_cast<T>(lr);
  for (const auto& np : params) {
    Param<T>& p = *np.param;
    auto& v = velocity_[&p];
    if (v.size() != p.value.size()) v.assign(p.value.size(), T(0));
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = mu * v[i] + p.grad[i] + wd * p.value[i];
      p.value[i] -= step * v[i];
    }
    if (!p.value.all_finite()) throw DivergenceError("non-finite value in parameter " + np.name);
  }
  ++steps_;
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace nd::nn
