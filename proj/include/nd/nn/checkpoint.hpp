#pragma once

#include <cstdint>
#include <filesystem>

#include "nd/nn/model.hpp"

// Binary checkpoint of every parameter and buffer of a model. Layout (all
// integers little-endian):
//   "NDCK" | u32 version | u8 value bytes (4 or 8) | u32 entry count
//   per entry: u32 top-level layer index | u8 kind (0 param, 1 buffer)
//              | u32 name length | name bytes | u32 rank | u64 dims[rank]
//              | raw values
// See docs/checkpoint-format.md.

namespace nd::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(Model<T>& model, const std::filesystem::path& path);

// Restores into a model of the same architecture. Entry names, shapes and
// value width must match exactly (FormatError otherwise).
template <typename T>
void load_checkpoint(Model<T>& model, const std::filesystem::path& path);

}  // namespace nd::nn
