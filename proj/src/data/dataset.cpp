#include "nd/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nd/core/error.hpp"

namespace nd::data {

std::string_view to_string(Split s) noexcept { return s == Split::Train ? "train" : "test"; }

void Dataset::validate() const {
  if (images.rank() != 4) throw DataError("dataset images must be N x C x H x W");
  if (images.dim(0) != labels.size()) {
    throw DataError("dataset has " + std::to_string(images.dim(0)) + " images and " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      throw DataError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                      " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("cannot select an empty dataset");
  const std::size_t per = images.size() / images.dim(0);
  Shape shape = images.shape();
  shape[0] = indices.size();
  Dataset out;
  out.images = Tensor<float>(shape);
  out.labels.resize(indices.size());
  out.class_count = class_count;
  out.split = split;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw DataError("select: index " + std::to_string(src) + " out of range");
    std::copy(images.ptr() + src * per, images.ptr() + (src + 1) * per, out.images.ptr() + i * per);
    out.labels[i] = labels[src];
  }
  return out;
}

std::vector<std::size_t> class_histogram(const Dataset& ds) {
  std::vector<std::size_t> h(ds.class_count, 0);
  for (int y : ds.labels) ++h.at(static_cast<std::size_t>(y));
  return h;
}

Dataset subset(const Dataset& ds, std::size_t per_class, Rng& rng) {
  if (per_class == 0) throw DataError("subset: per_class must be >= 1");
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  std::vector<std::size_t> picked;
  picked.reserve(per_class * ds.class_count);
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    auto& idx = by_class[c];
    if (idx.size() < per_class) {
      throw DataError("subset: class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " examples, " + std::to_string(per_class) + " requested");
    }
    rng.shuffle(idx.begin(), idx.end());
    picked.insert(picked.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  rng.shuffle(picked.begin(), picked.end());
  return ds.select(picked);
}

ChannelStats channel_stats(const Dataset& ds) {
  const std::size_t n = ds.images.dim(0), c = ds.images.dim(1);
  const std::size_t hw = ds.images.dim(2) * ds.images.dim(3);
  ChannelStats s;
  s.mean.assign(c, 0.0);
  s.stddev.assign(c, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* p = ds.images.ptr() + (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) sum += p[j];
    }
    const double mean = sum / static_cast<double>(n * hw);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* p = ds.images.ptr() + (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) var += (p[j] - mean) * (p[j] - mean);
    }
    s.mean[ch] = mean;
    s.stddev[ch] = std::sqrt(var / static_cast<double>(n * hw));
  }
  return s;
}

void normalize(Dataset& ds, const ChannelStats& stats) {
  const std::size_t n = ds.images.dim(0), c = ds.images.dim(1);
  const std::size_t hw = ds.images.dim(2) * ds.images.dim(3);
  if (stats.mean.size() != c || stats.stddev.size() != c) {
    throw DataError("normalize: statistics for " + std::to_string(stats.mean.size()) +
                    " channels, images have " + std::to_string(c));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double inv = stats.stddev[ch] > 0.0 ? 1.0 / stats.stddev[ch] : 1.0;
      float* p = ds.images.ptr() + (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) p[j] = static_cast<float>((p[j] - stats.mean[ch]) * inv);
    }
  }
}

void flip_horizontal(float* image, std::size_t channels, std::size_t height, std::size_t width) {
  for (std::size_t r = 0; r < channels * height; ++r) std::reverse(image + r * width, image + (r + 1) * width);
}

void pad_crop(float* image, std::size_t channels, std::size_t height, std::size_t width,
              std::size_t pad, std::size_t dy, std::size_t dx) {
  if (dy > 2 * pad || dx > 2 * pad) throw ConfigError("pad_crop: offset outside the padded image");
  std::vector<float> src(image, image + channels * height * width);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad);
      for (std::size_t x = 0; x < width; ++x) {
        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pad);
        const bool in = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(height) &&
                        sx < static_cast<std::ptrdiff_t>(width);
        image[(c * height + y) * width + x] =
            in ? src[(c * height + static_cast<std::size_t>(sy)) * width + static_cast<std::size_t>(sx)]
               : 0.0f;
      }
    }
  }
}

template <typename T>
BatchStream<T>::BatchStream(const Dataset& ds, std::size_t batch_size, Rng rng, bool augment)
    : ds_(ds), batch_size_(batch_size), rng_(rng), augment_(augment), order_(ds.size()) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  rng_.shuffle(order_.begin(), order_.end());
}

template <typename T>
std::size_t BatchStream<T>::batch_count() const noexcept {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

template <typename T>
bool BatchStream<T>::next(Batch<T>& out) {
  if (pos_ >= order_.size()) return false;
  const std::size_t end = std::min(order_.size(), pos_ + batch_size_);
  const std::size_t n = end - pos_;
  const std::size_t c = ds_.images.dim(1), h = ds_.images.dim(2), w = ds_.images.dim(3);
  const std::size_t per = c * h * w;
  out.images = Tensor<T>({n, c, h, w});
  out.labels.resize(n);
  std::vector<float> buf(per);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order_[pos_ + i];
    std::copy(ds_.images.ptr() + src * per, ds_.images.ptr() + (src + 1) * per, buf.begin());
    if (augment_) {
      const auto dy = static_cast<std::size_t>(rng_.uniform_int(2 * kAugmentPad + 1));
      const auto dx = static_cast<std::size_t>(rng_.uniform_int(2 * kAugmentPad + 1));
      const bool flip = rng_.uniform_int(2) == 1;
      pad_crop(buf.data(), c, h, w, kAugmentPad, dy, dx);
      if (flip) flip_horizontal(buf.data(), c, h, w);
    }
    std::copy(buf.begin(), buf.end(), out.images.ptr() + i * per);
    out.labels[i] = ds_.labels[src];
  }
  pos_ = end;
  return true;
}

template <typename T>
Batch<T> slice(const Dataset& ds, std::size_t begin, std::size_t end) {
  if (begin >= end || end > ds.size()) throw DataError("slice: bad range");
  const std::size_t per = ds.images.size() / ds.size();
  Shape shape = ds.images.shape();
  shape[0] = end - begin;
  Batch<T> b;
  b.images = Tensor<T>(shape);
  std::copy(ds.images.ptr() + begin * per, ds.images.ptr() + end * per, b.images.ptr());
  b.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                  ds.labels.begin() + static_cast<std::ptrdiff_t>(end));
  return b;
}

template class BatchStream<float>;
template class BatchStream<double>;
template Batch<float> slice(const Dataset&, std::size_t, std::size_t);
template Batch<double> slice(const Dataset&, std::size_t, std::size_t);

}  // namespace nd::data
