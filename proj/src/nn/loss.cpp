#include "nd/nn/loss.hpp"

#include <cmath>

#include "nd/core/error.hpp"

namespace nd::nn {

template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw DimensionError("softmax_xent: expected B x C logits, got " + to_string(logits.shape()));
  }
  const std::size_t batch = logits.rows(), classes = logits.cols();
  if (labels.size() != batch) {
    throw DimensionError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(batch) + " rows");
  }
  LossResult<T> r;
  r.grad = Tensor<T>(logits.shape());
  double total = 0.0;
  const T inv_b = T(1) / static_cast<T>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("softmax_xent: label " + std::to_string(y) + " outside [0, " +
                      std::to_string(classes) + ") at row " + std::to_string(b));
    }
    const T* z = logits.ptr() + b * classes;
    std::size_t arg = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (z[c] > z[arg]) arg = c;
    }
    const T zmax = z[arg];
    T sum = T(0);
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - zmax);
    const T lse = zmax + std::log(sum);
    total += static_cast<double>(lse - z[y]);
    T* g = r.grad.ptr() + b * classes;
    for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(z[c] - lse) * inv_b;
    g[y] -= inv_b;
    if (arg == static_cast<std::size_t>(y)) ++r.correct;
  }
  r.loss = static_cast<T>(total / static_cast<double>(batch));
  return r;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
  logits.require_rank(2);
  std::vector<int> out(logits.rows());
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(b, c) > logits(b, arg)) arg = c;
    }
    out[b] = static_cast<int>(arg);
  }
  return out;
}

template LossResult<float> softmax_xent(const Tensor<float>&, std::span<const int>);
template LossResult<double> softmax_xent(const Tensor<double>&, std::span<const int>);
template std::vector<int> argmax_rows(const Tensor<float>&);
template std::vector<int> argmax_rows(const Tensor<double>&);

}  // namespace nd::nn
