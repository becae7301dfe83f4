#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "nd/nn/loss.hpp"
#include "nd/nn/model.hpp"
#include "nd/nn/sgd.hpp"

namespace nd::nn {

enum class LrSchedule { Cosine, Constant };

std::string_view to_string(LrSchedule s) noexcept;
LrSchedule parse_lr_schedule(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  LrSchedule lr_schedule = LrSchedule::Cosine;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool augment = true;

  void validate() const;
};

// Learning rate for optimizer step `step` of `total_steps`. Cosine decays
// per step from base at step 0 towards 0 at the end.
double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps);

struct StepResult {
  double loss = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

// One SGD step: zero grads, forward (train mode), loss, backward, update.
// A non-finite loss raises DivergenceError.
template <typename T>
StepResult train_step(Model<T>& model, Sgd<T>& opt, const Tensor<T>& x,
                      std::span<const int> labels, double lr);

// Eval-mode logits.
template <typename T>
Tensor<T> predict(Model<T>& model, const Tensor<T>& x);

}  // namespace nd::nn
