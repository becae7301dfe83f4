#pragma once

// Independent reference implementations used as test oracles.

#include <cmath>
#include <cstddef>
#include <vector>

#include "nd/core/tensor.hpp"
#include "nd/nn/deconv.hpp"
#include "nd/patching/patching.hpp"
#include "nd/whitening/whitening.hpp"

namespace nd::testing {

// Direct seven-loop convolution. x: B x C x H x W, w: O x C x k x k.
inline Tensor<double> direct_conv(const Tensor<double>& x, const Tensor<double>& w,
                                  const Tensor<double>* bias, std::size_t stride,
                                  std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), k = w.dim(2);
  const std::size_t oh = (H + 2 * pad - k) / stride + 1, ow = (W + 2 * pad - k) / stride + 1;
  Tensor<double> y({B, O, oh, ow});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double s = bias ? (*bias)[o] : 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t u = 0; u < k; ++u)
              for (std::size_t v = 0; v < k; ++v) {
                const long r = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                const long q = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                if (r < 0 || q < 0 || r >= static_cast<long>(H) || q >= static_cast<long>(W)) continue;
                s += x(b, c, static_cast<std::size_t>(r), static_cast<std::size_t>(q)) *
                     w(o, c, u, v);
              }
          y(b, o, i, j) = s;
        }
  return y;
}

// Conv applied to the explicitly decorrelated patch matrix: for each block,
// (p - mean) * D, then patches * W^T + b, reshaped to B x O x oh x ow.
inline Tensor<double> whitened_conv(const Tensor<double>& x,
                                    const std::vector<nn::WhiteningBlock<double>>& blocks,
                                    const Tensor<double>& w, const Tensor<double>* bias,
                                    std::size_t stride, std::size_t pad) {
  const std::size_t k = w.dim(2), O = w.dim(0);
  const auto pm = patching::im2col(x, k, k, stride, pad);
  Tensor<double> p = pm.data;
  const std::size_t n = p.rows(), d = p.cols();
  std::size_t off = 0;
  for (const auto& blk : blocks) {
    Tensor<double> cols({n, blk.width});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < blk.width; ++c) cols(r, c) = p(r, off + c);
    const auto white = whitening::apply_decorrelation(cols, blk.mean, blk.d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < blk.width; ++c) p(r, off + c) = white(r, c);
    off += blk.width;
  }
  const Tensor<double> wf = w.reshaped({O, d});
  const std::size_t B = x.dim(0), oh = pm.geometry.out_h(), ow = pm.geometry.out_w();
  Tensor<double> y({B, O, oh, ow});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < oh * ow; ++i) {
      const std::size_t row = b * oh * ow + i;
      for (std::size_t o = 0; o < O; ++o) {
        double s = bias ? (*bias)[o] : 0.0;
        for (std::size_t c = 0; c < d; ++c) s += p(row, c) * wf(o, c);
        y[(b * O + o) * oh * ow + i] = s;
      }
    }
  return y;
}

// Sample covariance (divide by N) of the rows of x.
inline Tensor<double> sample_covariance(const Tensor<double>& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c);
  for (auto& m : mean) m /= static_cast<double>(n);
  Tensor<double> cov({d, d});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) += (x(r, i) - mean[i]) * (x(r, j) - mean[j]);
  for (auto& v : cov.storage()) v /= static_cast<double>(n);
  return cov;
}

inline double distance_from_identity(const Tensor<double>& a) {
  double s = 0.0;
  const std::size_t d = a.rows();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double e = a(i, j) - (i == j ? 1.0 : 0.0);
      s += e * e;
    }
  return std::sqrt(s);
}

// Random SPD matrix Q diag(lambda) Q^T with log-uniform eigenvalues in
// [1, condition], Q from Gram-Schmidt on a Gaussian matrix.
template <typename RngT>
Tensor<double> random_spd(std::size_t d, double condition, RngT& rng) {
  Tensor<double> q({d, d});
  for (auto& v : q.storage()) v = rng.normal();
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += q(i, j) * q(i, p);
      for (std::size_t i = 0; i < d; ++i) q(i, j) -= dot * q(i, p);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < d; ++i) q(i, j) /= norm;
  }
  std::vector<double> lambda(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double t = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    lambda[i] = std::pow(condition, t);
  }
  Tensor<double> a({d, d});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += q(i, k) * lambda[k] * q(j, k);
      a(i, j) = s;
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  return a;
}

}  // namespace nd::testing
