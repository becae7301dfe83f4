#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "nd/core/rng.hpp"
#include "nd/core/tensor.hpp"

namespace nd::data {

enum class Split { Train, Test };

std::string_view to_string(Split s) noexcept;

// Images are N x C x H x W floats (CIFAR: pixel / 255, optionally normalized).
struct Dataset {
  Tensor<float> images;
  std::vector<int> labels;
  std::size_t class_count = 0;
  Split split = Split::Train;

  std::size_t size() const noexcept { return labels.size(); }
  // Throws DataError when labels are out of range or counts disagree.
  void validate() const;
  // Examples at `indices`, in that order.
  Dataset select(std::span<const std::size_t> indices) const;
};

std::vector<std::size_t> class_histogram(const Dataset& ds);

// Stratified sample: `per_class` examples of every class, shuffled by rng.
// Throws DataError when a class has fewer examples.
Dataset subset(const Dataset& ds, std::size_t per_class, Rng& rng);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

ChannelStats channel_stats(const Dataset& ds);
// x <- (x - mean) / stddev per channel (stddev 0 leaves the channel centered).
void normalize(Dataset& ds, const ChannelStats& stats);

// In-place helpers on one C x H x W image, exposed for tests.
void flip_horizontal(float* image, std::size_t channels, std::size_t height, std::size_t width);
// Zero-pads by `pad` on every side and crops H x W at offset (dy, dx) of the
// padded image, dy, dx in [0, 2*pad].
void pad_crop(float* image, std::size_t channels, std::size_t height, std::size_t width,
              std::size_t pad, std::size_t dy, std::size_t dx);

template <typename T>
struct Batch {
  Tensor<T> images;
  std::vector<int> labels;
};

// One epoch over a dataset in an rng-shuffled order. The last batch may be
// short. With augment, each image gets a random pad-4 crop and a coin-flip
// mirror, drawn from the same rng after the shuffle.
template <typename T>
class BatchStream {
 public:
  BatchStream(const Dataset& ds, std::size_t batch_size, Rng rng, bool augment);

  bool next(Batch<T>& out);
  std::size_t batch_count() const noexcept;

 private:
  const Dataset& ds_;
  std::size_t batch_size_;
  Rng rng_;
  bool augment_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

inline constexpr std::size_t kAugmentPad = 4;

// Evaluation batches in dataset order, no augmentation.
template <typename T>
Batch<T> slice(const Dataset& ds, std::size_t begin, std::size_t end);

}  // namespace nd::data
