#include "nd/data/synth.hpp"

#include <cmath>
#include <numbers>

#include "nd/core/error.hpp"

namespace nd::data {

SynthKind parse_synth_kind(std::string_view text) {
  if (text == "two_gaussians") return SynthKind::TwoGaussians;
  if (text == "correlated_channels") return SynthKind::CorrelatedChannels;
  throw ConfigError("unknown synthetic dataset '" + std::string(text) + "'");
}

namespace {

Dataset two_gaussians(std::size_t n, Rng& rng, const SynthOptions& o) {
  const std::size_t f = o.features;
  if (f == 0) throw ConfigError("two_gaussians: features must be >= 1");
  std::vector<double> u(f);
  double norm = 0.0;
  for (auto& v : u) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;

  Dataset ds;
  ds.class_count = 2;
  ds.split = o.split;
  ds.images = Tensor<float>({n, f, 1, 1});
  ds.labels.resize(n);
  std::vector<double> x(f);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double sign = y == 1 ? 1.0 : -1.0;
    for (;;) {
      double proj = 0.0;
      for (std::size_t j = 0; j < f; ++j) {
        x[j] = 2.0 * sign * u[j] + rng.normal();
        proj += x[j] * u[j];
      }
      if (sign * proj >= 0.5) break;
    }
    for (std::size_t j = 0; j < f; ++j) ds.images[i * f + j] = static_cast<float>(x[j]);
    ds.labels[i] = y;
  }
  return ds;
}

Dataset correlated_channels(std::size_t n, Rng& rng, const SynthOptions& o) {
  const std::size_t s = o.side;
  if (s == 0 || o.classes < 1) throw ConfigError("correlated_channels: side and classes must be >= 1");
  // Cholesky factor of K.
  double l[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = kChannelCovariance[i][j];
      for (int k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
      l[i][j] = i == j ? std::sqrt(sum) : sum / l[j][j];
    }
  }
  Dataset ds;
  ds.class_count = o.classes;
  ds.split = o.split;
  ds.images = Tensor<float>({n, 3, s, s});
  ds.labels.resize(n);
  const std::size_t hw = s * s;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % o.classes);
    ds.labels[i] = y;
    float* img = ds.images.ptr() + i * 3 * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      const double z[3] = {rng.normal(), rng.normal(), rng.normal()};
      for (int c = 0; c < 3; ++c) {
        double v = 0.0;
        for (int k = 0; k <= c; ++k) v += l[c][k] * z[k];
        if (o.signal != 0.0) {
          // Class template: a plane wave whose frequency and orientation
          // depend on the class, with a per-channel phase.
          const double fy = static_cast<double>(y % 3 + 1), fx = static_cast<double>(y / 3 + 1);
          const double py = static_cast<double>(p / s), px = static_cast<double>(p % s);
          v += o.signal * std::sin(2.0 * std::numbers::pi * (fy * py + fx * px) / static_cast<double>(s) +
                                   static_cast<double>(c));
        }
        img[static_cast<std::size_t>(c) * hw + p] = static_cast<float>(v);
      }
    }
  }
  return ds;
}

}  // namespace

Dataset synth_dataset(SynthKind kind, std::size_t n, Rng& rng, const SynthOptions& options) {
  if (n < 2) throw ConfigError("synthetic dataset needs n >= 2");
  Dataset ds = kind == SynthKind::TwoGaussians ? two_gaussians(n, rng, options)
                                               : correlated_channels(n, rng, options);
  ds.validate();
  return ds;
}

}  // namespace nd::data
