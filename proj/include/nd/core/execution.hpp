#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace nd {

// "test" mode: 64-bit values, scalar reference kernels, one thread; runs are
// bit-reproducible. "benchmark" mode: 32-bit values, fastest kernel path,
// configurable thread count.
enum class Precision { F32, F64 };

std::string_view to_string(Precision p) noexcept;
Precision parse_precision(std::string_view text);

struct ExecutionManifest {
  Precision precision = Precision::F64;
  std::size_t threads = 1;
  std::string kernel_path;
  std::string build_info;
};

// Installs the kernel path and thread count matching the precision mode and
// returns a description of the resulting environment.
ExecutionManifest configure_execution(Precision precision, std::size_t threads);

}  // namespace nd
