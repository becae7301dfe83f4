#pragma once

#include <cstddef>
#include <vector>

#include "nd/core/tensor.hpp"

// im2col lowering of B x C x H x W activations into patch matrices, plus the
// row subsampling and channel grouping used when estimating patch covariance.

namespace nd::patching {

struct PatchGeometry {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t kh = 1;
  std::size_t kw = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // Channel block this matrix holds (0 when unsplit).
  std::size_t block_index = 0;

  std::size_t out_h() const noexcept { return (height + 2 * padding - kh) / stride + 1; }
  std::size_t out_w() const noexcept { return (width + 2 * padding - kw) / stride + 1; }
  std::size_t rows() const noexcept { return batch * out_h() * out_w(); }
  std::size_t cols() const noexcept { return channels * kh * kw; }

  // Throws GeometryError when the kernel does not fit or the output size is
  // not integral.
  void validate() const;
};

// Rows are receptive fields ordered batch-major, then output row, then output
// column. Columns are ordered channel-major, then kernel row, kernel column,
// so each channel owns a contiguous run of kh*kw columns.
template <typename T>
struct PatchMatrix {
  Tensor<T> data;
  PatchGeometry geometry;
  // Channels represented in `data`, including zero padding channels.
  std::size_t block_channels = 0;
  // Real (unpadded) channels in this block.
  std::size_t real_channels = 0;
};

// Knobs of the deconvolution operation.
struct DeconvConfig {
  std::size_t block_size = 64;       // channels per covariance group
  std::size_t sampling_stride = 3;   // covariance uses every k-th patch row
  double epsilon = 1e-5;             // regularizer, relative to trace(cov)/d
  int newton_iterations = 5;
  double running_momentum = 0.1;     // weight of the newest batch in running stats

  void validate() const;
};

template <typename T>
PatchMatrix<T> im2col(const Tensor<T>& x, std::size_t kh, std::size_t kw, std::size_t stride,
                      std::size_t padding);

// im2col restricted to rows 0, s, 2s, ... (equals subsample_rows(im2col(...), s)).
template <typename T>
PatchMatrix<T> im2col_sampled(const Tensor<T>& x, const PatchGeometry& geometry,
                              std::size_t sampling_stride);

// Scatter-adds patch rows back into a B x C x H x W tensor (the adjoint of
// im2col, used for input gradients).
template <typename T>
Tensor<T> col2im(const Tensor<T>& patches, const PatchGeometry& geometry);

// col2im followed by division by each pixel's patch-overlap count, which
// inverts im2col on every pixel covered by at least one patch.
template <typename T>
Tensor<T> col2im_average(const PatchMatrix<T>& p);

// Keeps rows 0, s, 2s, ...; N' = ceil(N / s).
template <typename T>
PatchMatrix<T> subsample_rows(const PatchMatrix<T>& p, std::size_t sampling_stride);

// Number of blocks `split_channel_blocks` produces for `channels`.
std::size_t channel_block_count(std::size_t channels, std::size_t block_size) noexcept;
// Channels per block (block_size, or all channels when block_size >= channels).
std::size_t channel_block_width(std::size_t channels, std::size_t block_size) noexcept;

// Splits columns into groups of block channels (times kh*kw offsets). When
// block_size >= C the input is returned as a single block; otherwise the
// channel count is zero-padded up to a multiple of block_size.
template <typename T>
std::vector<PatchMatrix<T>> split_channel_blocks(const PatchMatrix<T>& p, std::size_t block_size);

// Concatenates blocks and drops padding channels; inverse of the split.
template <typename T>
PatchMatrix<T> merge_channel_blocks(const std::vector<PatchMatrix<T>>& blocks);

}  // namespace nd::patching
