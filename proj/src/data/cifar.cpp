#include "nd/data/cifar.hpp"

#include <fstream>
#include <iterator>

#include "nd/core/error.hpp"
#include "nd/core/rng.hpp"

namespace nd::data {

namespace fs = std::filesystem;

std::string_view to_string(CifarKind kind) noexcept {
  return kind == CifarKind::Cifar10 ? "cifar10" : "cifar100";
}

CifarKind parse_cifar_kind(std::string_view text) {
  if (text == "cifar10") return CifarKind::Cifar10;
  if (text == "cifar100") return CifarKind::Cifar100;
  throw ConfigError("unknown dataset '" + std::string(text) + "' (expected cifar10 or cifar100)");
}

std::size_t record_bytes(CifarKind kind) noexcept {
  return (kind == CifarKind::Cifar10 ? 1 : 2) + kCifarPixels;
}

std::size_t class_count(CifarKind kind) noexcept { return kind == CifarKind::Cifar10 ? 10 : 100; }

Dataset decode_cifar(std::span<const std::uint8_t> bytes, CifarKind kind, Split split,
                     std::size_t expected_records, const std::string& source) {
  const std::size_t rec = record_bytes(kind);
  if (expected_records > 0 && bytes.size() != expected_records * rec) {
    throw FormatError(source + ": expected " + std::to_string(expected_records * rec) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  if (bytes.empty() || bytes.size() % rec != 0) {
    throw FormatError(source + ": " + std::to_string(bytes.size()) +
                      " bytes is not a whole number of " + std::to_string(rec) + "-byte records");
  }
  const std::size_t n = bytes.size() / rec;
  const std::size_t label_at = kind == CifarKind::Cifar10 ? 0 : 1;  // fine label for CIFAR-100
  const std::size_t classes = class_count(kind);
  Dataset ds;
  ds.class_count = classes;
  ds.split = split;
  ds.images = Tensor<float>({n, 3, kCifarSide, kCifarSide});
  ds.labels.resize(n);
  const std::size_t head = rec - kCifarPixels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* r = bytes.data() + i * rec;
    if (r[label_at] >= classes) {
      throw CorruptRecordError(source + ": record " + std::to_string(i) + " has label " +
                               std::to_string(r[label_at]) + " (max " +
                               std::to_string(classes - 1) + ")");
    }
    ds.labels[i] = r[label_at];
    float* dst = ds.images.ptr() + i * kCifarPixels;
    for (std::size_t p = 0; p < kCifarPixels; ++p) dst[p] = static_cast<float>(r[head + p]) / 255.0f;
  }
  return ds;
}

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("missing file " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Dataset concat(std::vector<Dataset> parts) {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.size();
  Dataset out;
  out.class_count = parts.front().class_count;
  out.split = parts.front().split;
  out.images = Tensor<float>({n, 3, kCifarSide, kCifarSide});
  out.labels.reserve(n);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.images.ptr(), p.images.ptr() + p.images.size(), out.images.ptr() + off);
    off += p.images.size();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  return out;
}

struct Expected {
  std::string name;
  std::size_t records;
  Split split;
};

std::vector<Expected> expected_files(CifarKind kind) {
  if (kind == CifarKind::Cifar10) {
    std::vector<Expected> v;
    for (int i = 1; i <= 5; ++i) v.push_back({"data_batch_" + std::to_string(i) + ".bin", 10000, Split::Train});
    v.push_back({"test_batch.bin", 10000, Split::Test});
    return v;
  }
  return {{"train.bin", 50000, Split::Train}, {"test.bin", 10000, Split::Test}};
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingFileError("dataset directory " + dir.string() + " not found");
}

}  // namespace

Dataset read_cifar_file(const fs::path& path, CifarKind kind, Split split,
                        std::size_t expected_records) {
  const auto bytes = slurp(path);
  return decode_cifar(bytes, kind, split, expected_records, path.string());
}

CifarSplits load_cifar(CifarKind kind, const fs::path& dir) {
  require_dir(dir);
  std::vector<Dataset> train, test;
  for (const auto& e : expected_files(kind)) {
    auto ds = read_cifar_file(dir / e.name, kind, e.split, e.records);
    (e.split == Split::Train ? train : test).push_back(std::move(ds));
  }
  return {concat(std::move(train)), concat(std::move(test))};
}

CifarSplits load_cifar10(const fs::path& dir) { return load_cifar(CifarKind::Cifar10, dir); }
CifarSplits load_cifar100(const fs::path& dir) { return load_cifar(CifarKind::Cifar100, dir); }

std::vector<FileCheck> verify_cifar(CifarKind kind, const fs::path& dir) {
  std::vector<FileCheck> out;
  for (const auto& e : expected_files(kind)) {
    FileCheck c;
    c.name = e.name;
    c.expected_bytes = e.records * record_bytes(kind);
    const fs::path p = dir / e.name;
    std::error_code ec;
    if (fs::is_regular_file(p, ec)) {
      c.present = true;
      c.actual_bytes = fs::file_size(p, ec);
      if (c.ok()) {
        const auto bytes = slurp(p);
        c.fnv1a = fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace nd::data
