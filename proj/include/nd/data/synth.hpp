#pragma once

#include <cstddef>
#include <string_view>

#include "nd/core/rng.hpp"
#include "nd/data/dataset.hpp"

// Synthetic datasets with known structure.
//
// two_gaussians: N x F x 1 x 1, two classes with means -2u and +2u for a unit
//   vector u, identity covariance; samples whose projection on u falls within
//   0.5 of the wrong side are redrawn, so the classes are linearly separable
//   with margin 1.
// correlated_channels: N x 3 x S x S, every pixel's channel vector drawn
//   i.i.d. from N(0, K) with K = kChannelCovariance. Labels cycle through
//   `classes`; with signal > 0 each class adds a fixed sinusoidal template of
//   that amplitude (signal 0 keeps the covariance exactly K).

namespace nd::data {

enum class SynthKind { TwoGaussians, CorrelatedChannels };

SynthKind parse_synth_kind(std::string_view text);

inline constexpr double kChannelCovariance[3][3] = {
    {1.0, 0.8, 0.5},
    {0.8, 1.0, 0.8},
    {0.5, 0.8, 1.0},
};

struct SynthOptions {
  std::size_t features = 8;   // two_gaussians
  std::size_t side = 8;       // correlated_channels
  std::size_t classes = 10;   // correlated_channels
  double signal = 0.0;        // correlated_channels
  Split split = Split::Train;
};

// n >= 2 (ConfigError otherwise).
Dataset synth_dataset(SynthKind kind, std::size_t n, Rng& rng, const SynthOptions& options = {});

}  // namespace nd::data
