#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nd/data/dataset.hpp"

// CIFAR binary format. CIFAR-10 records are 1 label byte + 3072 pixel bytes;
// CIFAR-100 records are a coarse and a fine label byte + 3072 pixel bytes.
// Pixels are 1024 R, then 1024 G, then 1024 B, each plane row-major 32 x 32.

namespace nd::data {

enum class CifarKind { Cifar10, Cifar100 };

std::string_view to_string(CifarKind kind) noexcept;
CifarKind parse_cifar_kind(std::string_view text);

inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifarSide = 32;

std::size_t record_bytes(CifarKind kind) noexcept;
std::size_t class_count(CifarKind kind) noexcept;

// Decodes a whole buffer of records. `expected_records` of 0 accepts any whole
// number of records. Errors: FormatError on size mismatch (expected and actual
// byte counts), CorruptRecordError on a label out of range (record index).
Dataset decode_cifar(std::span<const std::uint8_t> bytes, CifarKind kind, Split split,
                     std::size_t expected_records, const std::string& source);

Dataset read_cifar_file(const std::filesystem::path& path, CifarKind kind, Split split,
                        std::size_t expected_records);

struct CifarSplits {
  Dataset train;
  Dataset test;
};

// data_batch_{1..5}.bin + test_batch.bin, 10000 records each.
CifarSplits load_cifar10(const std::filesystem::path& dir);
// train.bin (50000 records) + test.bin (10000 records).
CifarSplits load_cifar100(const std::filesystem::path& dir);
CifarSplits load_cifar(CifarKind kind, const std::filesystem::path& dir);

struct FileCheck {
  std::string name;
  std::uintmax_t expected_bytes = 0;
  std::uintmax_t actual_bytes = 0;  // 0 when missing
  bool present = false;
  std::uint64_t fnv1a = 0;  // content digest, computed when the size matches
  bool ok() const noexcept { return present && expected_bytes == actual_bytes; }
};

// Size check (and digest) of every expected file; never throws for missing
// files, reports them instead.
std::vector<FileCheck> verify_cifar(CifarKind kind, const std::filesystem::path& dir);

}  // namespace nd::data
