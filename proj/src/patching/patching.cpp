#include "nd/patching/patching.hpp"

#include <algorithm>
#include <sstream>

#include "nd/core/error.hpp"

namespace nd::patching {

void PatchGeometry::validate() const {
  auto fail = [&](const char* why) {
    std::ostringstream os;
    os << "invalid patch geometry (" << why << "): input " << height << "x" << width
       << ", kernel " << kh << "x" << kw << ", stride " << stride << ", padding " << padding;
    throw GeometryError(os.str());
  };
  if (batch == 0 || channels == 0 || height == 0 || width == 0) fail("empty input");
  if (kh == 0 || kw == 0) fail("empty kernel");
  if (stride == 0) fail("zero stride");
  if (kh > height + 2 * padding || kw > width + 2 * padding) fail("kernel larger than padded input");
  if ((height + 2 * padding - kh) % stride != 0 || (width + 2 * padding - kw) % stride != 0) {
    fail("non-integral output size");
  }
}

void DeconvConfig::validate() const {
  if (block_size == 0) throw ConfigError("deconv block_size must be >= 1");
  if (sampling_stride == 0) throw ConfigError("deconv sampling_stride must be >= 1");
  if (!(epsilon >= 0.0)) throw ConfigError("deconv epsilon must be >= 0");
  if (newton_iterations < 1) throw ConfigError("deconv newton_iterations must be >= 1");
  if (!(running_momentum >= 0.0 && running_momentum < 1.0)) {
    throw ConfigError("deconv running_momentum must lie in [0, 1)");
  }
}

namespace {

PatchGeometry geometry_for(const Shape& shape, std::size_t kh, std::size_t kw, std::size_t stride,
                           std::size_t padding) {
  if (shape.size() != 4) {
    throw DimensionError("im2col: expected a B x C x H x W tensor, got " + to_string(shape));
  }
  PatchGeometry g;
  g.batch = shape[0];
  g.channels = shape[1];
  g.height = shape[2];
  g.width = shape[3];
  g.kh = kh;
  g.kw = kw;
  g.stride = stride;
  g.padding = padding;
  g.validate();
  return g;
}

// Writes the receptive field of output position `r` into `dst`.
template <typename T>
void fill_row(const T* x, const PatchGeometry& g, std::size_t r, T* dst) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t b = r / (oh * ow);
  const std::size_t oy = (r / ow) % oh;
  const std::size_t ox = r % ow;
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = x + (b * g.channels + c) * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
      const bool row_in = iy >= 0 && iy < static_cast<std::ptrdiff_t>(g.height);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
        const bool in = row_in && ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.width);
        *dst++ = in ? plane[static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix)] : T(0);
      }
    }
  }
}

}  // namespace

template <typename T>
PatchMatrix<T> im2col(const Tensor<T>& x, std::size_t kh, std::size_t kw, std::size_t stride,
                      std::size_t padding) {
  const PatchGeometry g = geometry_for(x.shape(), kh, kw, stride, padding);
  return im2col_sampled(x, g, 1);
}

template <typename T>
PatchMatrix<T> im2col_sampled(const Tensor<T>& x, const PatchGeometry& geometry,
                              std::size_t sampling_stride) {
  if (sampling_stride == 0) throw ConfigError("im2col_sampled: sampling stride must be >= 1");
  PatchGeometry g = geometry_for(x.shape(), geometry.kh, geometry.kw, geometry.stride,
                                 geometry.padding);
  g.block_index = 0;
  const std::size_t n = g.rows();
  const std::size_t rows = (n + sampling_stride - 1) / sampling_stride;
  const std::size_t d = g.cols();
  PatchMatrix<T> out;
  out.geometry = g;
  out.block_channels = g.channels;
  out.real_channels = g.channels;
  out.data = Tensor<T>({rows, d});
  for (std::size_t i = 0; i < rows; ++i) fill_row(x.ptr(), g, i * sampling_stride, out.data.ptr() + i * d);
  return out;
}

template <typename T>
Tensor<T> col2im(const Tensor<T>& patches, const PatchGeometry& g) {
  g.validate();
  if (patches.rank() != 2 || patches.rows() != g.rows() || patches.cols() != g.cols()) {
    throw DimensionError("col2im: patch matrix " + to_string(patches.shape()) +
                         " does not match geometry (" + std::to_string(g.rows()) + " x " +
                         std::to_string(g.cols()) + ")");
  }
  Tensor<T> x({g.batch, g.channels, g.height, g.width});
  const std::size_t oh = g.out_h(), ow = g.out_w(), d = g.cols();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const std::size_t b = r / (oh * ow);
    const std::size_t oy = (r / ow) % oh;
    const std::size_t ox = r % ow;
    const T* src = patches.ptr() + r * d;
    for (std::size_t c = 0; c < g.channels; ++c) {
      T* plane = x.ptr() + (b * g.channels + c) * g.height * g.width;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
        for (std::size_t kx = 0; kx < g.kw; ++kx, ++src) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
          if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.height) ||
              ix >= static_cast<std::ptrdiff_t>(g.width)) {
            continue;
          }
          plane[static_cast<std::size_t>(iy) * g.width + static_cast<std::size_t>(ix)] += *src;
        }
      }
    }
  }
  return x;
}

template <typename T>
Tensor<T> col2im_average(const PatchMatrix<T>& p) {
  Tensor<T> sum = col2im(p.data, p.geometry);
  Tensor<T> ones(p.data.shape(), T(1));
  const Tensor<T> count = col2im(ones, p.geometry);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (count[i] > T(0)) sum[i] /= count[i];
  }
  return sum;
}

template <typename T>
PatchMatrix<T> subsample_rows(const PatchMatrix<T>& p, std::size_t sampling_stride) {
  if (sampling_stride == 0) throw ConfigError("subsample_rows: sampling stride must be >= 1");
  if (sampling_stride == 1) return p;
  const std::size_t n = p.data.rows(), d = p.data.cols();
  const std::size_t rows = (n + sampling_stride - 1) / sampling_stride;
  PatchMatrix<T> out;
  out.geometry = p.geometry;
  out.block_channels = p.block_channels;
  out.real_channels = p.real_channels;
  out.data = Tensor<T>({rows, d});
  for (std::size_t i = 0; i < rows; ++i) {
    const T* src = p.data.ptr() + i * sampling_stride * d;
    std::copy(src, src + d, out.data.ptr() + i * d);
  }
  return out;
}

std::size_t channel_block_width(std::size_t channels, std::size_t block_size) noexcept {
  return block_size >= channels ? channels : block_size;
}

std::size_t channel_block_count(std::size_t channels, std::size_t block_size) noexcept {
  const std::size_t w = channel_block_width(channels, block_size);
  return (channels + w - 1) / w;
}

template <typename T>
std::vector<PatchMatrix<T>> split_channel_blocks(const PatchMatrix<T>& p, std::size_t block_size) {
  if (block_size == 0) throw ConfigError("split_channel_blocks: block_size must be >= 1");
  const std::size_t channels = p.real_channels;
  const std::size_t kk = p.geometry.kh * p.geometry.kw;
  if (p.data.cols() != channels * kk) {
    throw DimensionError("split_channel_blocks: patch matrix " + to_string(p.data.shape()) +
                         " does not hold " + std::to_string(channels) + " channels of " +
                         std::to_string(kk) + " offsets");
  }
  if (block_size >= channels) {
    PatchMatrix<T> single = p;
    single.geometry.block_index = 0;
    return {std::move(single)};
  }
  const std::size_t n = p.data.rows(), d = p.data.cols();
  const std::size_t count = channel_block_count(channels, block_size);
  const std::size_t width = block_size * kk;
  std::vector<PatchMatrix<T>> blocks;
  blocks.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t c0 = b * block_size;
    const std::size_t real = std::min(block_size, channels - c0);
    PatchMatrix<T> blk;
    blk.geometry = p.geometry;
    blk.geometry.block_index = b;
    blk.block_channels = block_size;
    blk.real_channels = real;
    blk.data = Tensor<T>({n, width});
    for (std::size_t i = 0; i < n; ++i) {
      const T* src = p.data.ptr() + i * d + c0 * kk;
      std::copy(src, src + real * kk, blk.data.ptr() + i * width);
    }
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

template <typename T>
PatchMatrix<T> merge_channel_blocks(const std::vector<PatchMatrix<T>>& blocks) {
  if (blocks.empty()) throw DimensionError("merge_channel_blocks: no blocks");
  const PatchGeometry& g = blocks.front().geometry;
  const std::size_t kk = g.kh * g.kw;
  const std::size_t n = blocks.front().data.rows();
  std::size_t channels = 0;
  for (const auto& b : blocks) {
    if (b.data.rows() != n) throw DimensionError("merge_channel_blocks: row counts differ");
    channels += b.real_channels;
  }
  const std::size_t d = channels * kk;
  PatchMatrix<T> out;
  out.geometry = g;
  out.geometry.block_index = 0;
  out.block_channels = channels;
  out.real_channels = channels;
  out.data = Tensor<T>({n, d});
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    const std::size_t w = b.data.cols();
    const std::size_t take = b.real_channels * kk;
    for (std::size_t i = 0; i < n; ++i) {
      const T* src = b.data.ptr() + i * w;
      std::copy(src, src + take, out.data.ptr() + i * d + offset);
    }
    offset += take;
  }
  return out;
}

#define ND_INSTANTIATE(T)                                                                      \
  template PatchMatrix<T> im2col(const Tensor<T>&, std::size_t, std::size_t, std::size_t,     \
                                 std::size_t);                                                \
  template PatchMatrix<T> im2col_sampled(const Tensor<T>&, const PatchGeometry&, std::size_t); \
  template Tensor<T> col2im(const Tensor<T>&, const PatchGeometry&);                          \
  template Tensor<T> col2im_average(const PatchMatrix<T>&);                                   \
  template PatchMatrix<T> subsample_rows(const PatchMatrix<T>&, std::size_t);                 \
  template std::vector<PatchMatrix<T>> split_channel_blocks(const PatchMatrix<T>&,            \
                                                            std::size_t);                     \
  template PatchMatrix<T> merge_channel_blocks(const std::vector<PatchMatrix<T>>&);

ND_INSTANTIATE(float)
ND_INSTANTIATE(double)

#undef ND_INSTANTIATE

}  // namespace nd::patching
