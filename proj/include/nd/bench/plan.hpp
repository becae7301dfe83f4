#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nd/core/execution.hpp"
#include "nd/nn/model.hpp"
#include "nd/nn/train.hpp"
#include "nd/patching/patching.hpp"

// Experiment plans: a flat "key = value" text file, '#' starts a comment.
// Every key is optional and defaults as below; see docs/plan-format.md.

namespace nd::bench {

struct ExperimentPlan {
  std::string name = "plan";
  std::string architecture = "vgg-mini";
  // "cifar10", "cifar100", or "synthetic" (correlated_channels with class
  // templates, a stand-in when the CIFAR files are unavailable).
  std::string dataset = "cifar10";
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 100;
  std::size_t image_size = 32;      // synthetic only
  double synthetic_signal = 0.5;    // synthetic only
  std::vector<nn::NormMode> modes = {nn::NormMode::BatchNorm, nn::NormMode::Deconv};
  std::vector<std::size_t> epochs = {1};
  std::size_t attempts = 3;
  std::uint64_t base_seed = 1;
  std::size_t base_width = 32;
  nn::TrainConfig train;
  patching::DeconvConfig deconv;
  bool timed = false;
  Precision precision = Precision::F32;
  std::size_t threads = 1;
  std::string output_dir = "runs";
  std::string data_dir;

  void validate() const;
};

ExperimentPlan parse_plan(std::string_view text);
ExperimentPlan load_plan(const std::filesystem::path& path);
// Canonical text form; parse_plan(format_plan(p)) reproduces p.
std::string format_plan(const ExperimentPlan& plan);

struct Cell {
  nn::NormMode mode;
  std::size_t epochs;
  std::size_t attempt;  // 1-based

  // "<architecture>/<dataset>/<mode>/e<epochs>/a<attempt>"
  std::string id(const ExperimentPlan& plan) const;
  // base_seed XOR fnv1a64(id).
  std::uint64_t seed(const ExperimentPlan& plan) const;
};

// Mode-major, then epochs, then attempt.
std::vector<Cell> plan_cells(const ExperimentPlan& plan);

// Seed of the data subset shared by every cell of the plan.
std::uint64_t data_seed(const ExperimentPlan& plan);

}  // namespace nd::bench
