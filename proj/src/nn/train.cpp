#include "nd/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nd/core/error.hpp"

namespace nd::nn {

std::string_view to_string(LrSchedule s) noexcept {
  return s == LrSchedule::Cosine ? "cosine" : "constant";
}

LrSchedule parse_lr_schedule(std::string_view text) {
  if (text == "cosine") return LrSchedule::Cosine;
  if (text == "constant") return LrSchedule::Constant;
  throw ConfigError("unknown lr schedule '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
}

double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
  if (config.lr_schedule == LrSchedule::Constant || total_steps == 0) return config.learning_rate;
  const double t = static_cast<double>(std::min(step, total_steps)) / static_cast<double>(total_steps);
  return 0.5 * config.learning_rate * (1.0 + std::cos(std::numbers::pi * t));
}

template <typename T>
StepResult train_step(Model<T>& model, Sgd<T>& opt, const Tensor<T>& x,
                      std::span<const int> labels, double lr) {
  model.zero_grad();
  const Tensor<T> logits = model.forward(x, Mode::Train);
  const LossResult<T> loss = softmax_xent(logits, labels);
  if (!std::isfinite(static_cast<double>(loss.loss))) {
    throw DivergenceError("non-finite training loss");
  }
  model.backward(loss.grad);
  opt.step(model.named_params(), lr);
  return {static_cast<double>(loss.loss), loss.correct, labels.size()};
}

template <typename T>
Tensor<T> predict(Model<T>& model, const Tensor<T>& x) {
  return model.forward(x, Mode::Eval);
}

template StepResult train_step(Model<float>&, Sgd<float>&, const Tensor<float>&,
                               std::span<const int>, double);
template StepResult train_step(Model<double>&, Sgd<double>&, const Tensor<double>&,
                               std::span<const int>, double);
template Tensor<float> predict(Model<float>&, const Tensor<float>&);
template Tensor<double> predict(Model<double>&, const Tensor<double>&);

}  // namespace nd::nn
