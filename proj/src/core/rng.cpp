#include "nd/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace nd {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) noexcept : seed_(seed), key_(splitmix64(seed)) {}

std::uint64_t Rng::next_u64() noexcept { return splitmix64(key_ + (counter_++) * kGolden); }

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv; }

std::uint64_t Rng::uniform_int(std::uint64_t n) noexcept {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() noexcept {
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * kTwoPow53Inv;  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void Rng::normal_fill(std::span<double> out) noexcept {
  std::size_t i = 0;
  for (; i + 1 < out.size(); i += 2) {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * kTwoPow53Inv;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    out[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  if (i < out.size()) out[i] = normal();
}

Rng Rng::split(std::uint64_t stream) const noexcept {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0xD1B54A32D192ED03ULL)));
}

}  // namespace nd
