#pragma once

#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <span>
#include <string_view>

namespace nd {

// Counter-based generator: draw k of stream `key` is splitmix64(key + k * golden).
// All state is integral, so a seed reproduces the same sequence on any platform
// with IEEE doubles. `split` derives independent child streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  // Uniform in [0, 1).
  double uniform() noexcept;
  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  // Standard normal (Box-Muller, one draw per call).
  double normal() noexcept;
  // Fills `out` with standard normals, consuming two uniforms per pair.
  void normal_fill(std::span<double> out) noexcept;

  Rng split(std::uint64_t stream) const noexcept;

  template <typename It>
  void shuffle(It first, It last) noexcept {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = uniform_int(i);
      std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                     first + static_cast<std::ptrdiff_t>(j));
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
// FNV-1a, used to derive seeds from textual identities.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace nd
