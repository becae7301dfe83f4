#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "nd/nn/model.hpp"

namespace nd::nn {

struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v.
template <typename T>
class Sgd {
 public:
  explicit Sgd(SgdConfig config = {});

  // All gradients are checked before any parameter moves; a non-finite one
  // raises DivergenceError naming the parameter.
  void step(const std::vector<NamedParam<T>>& params, double lr);

  const SgdConfig& config() const noexcept { return config_; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  SgdConfig config_;
  std::unordered_map<const Param<T>*, std::vector<T>> velocity_;
  std::size_t steps_ = 0;
};

}  // namespace nd::nn
