#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nd/core/tensor.hpp"

namespace nd::nn {

template <typename T>
struct LossResult {
  T loss = T(0);         // mean cross-entropy over the batch
  Tensor<T> grad;        // (softmax - onehot) / batch
  std::size_t correct = 0;  // argmax hits
};

// Softmax cross-entropy on B x C logits with log-sum-exp stabilization.
// Throws DataError for labels outside [0, C).
template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels);

// Index of the largest logit in each row (first one on ties).
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits);

}  // namespace nd::nn
