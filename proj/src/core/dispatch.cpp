#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "nd/core/execution.hpp"
#include "nd/core/error.hpp"
#include "nd/core/kernels.hpp"

namespace nd::kernels {
namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(ND_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Path initial_path() noexcept {
  const bool have = cpu_has_avx2_fma();
  if (const char* env = std::getenv("ND_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Path::Scalar;
    if (v == "avx2" && have) return Path::Avx2;
  }
  return have ? Path::Avx2 : Path::Scalar;
}

std::atomic<Path>& path_slot() noexcept {
  static std::atomic<Path> slot{initial_path()};
  return slot;
}

std::atomic<std::size_t> g_threads{1};

// Below this many multiply-adds a GEMM is not worth splitting across threads.
constexpr std::size_t kParallelWork = std::size_t{1} << 22;

template <typename T>
void gemm_path(Path path, Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
               T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
               std::size_t ldc) {
#if defined(ND_HAVE_AVX2)
  if (path == Path::Avx2) {
    avx2::gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
#else
  (void)path;
#endif
  scalar::gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// Splits the rows of C across threads. Each element is still produced by the
// same single-threaded kernel, so results do not depend on the thread count.
template <typename T>
void gemm_dispatch(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                   const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                   std::size_t ldc) {
  const Path path = active_path();
  const std::size_t nt = std::min(g_threads.load(), std::max<std::size_t>(1, m / 48));
  if (nt <= 1 || m * n * k < kParallelWork) {
    gemm_path(path, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nt);
  const std::size_t chunk = (m + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t i0 = t * chunk;
    if (i0 >= m) break;
    const std::size_t rows = std::min(chunk, m - i0);
    const T* a0 = ta == Trans::No ? a + i0 * lda : a + i0;
    workers.emplace_back([=] {
      gemm_path(path, ta, tb, rows, n, k, alpha, a0, lda, b, ldb, beta, c + i0 * ldc, ldc);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace

std::string_view to_string(Path path) noexcept {
  return path == Path::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() noexcept {
  static const bool have = cpu_has_avx2_fma();
  return have;
}

Path active_path() noexcept { return path_slot().load(std::memory_order_relaxed); }

Path set_path(Path path) noexcept {
  if (path == Path::Avx2 && !avx2_available()) path = Path::Scalar;
  path_slot().store(path, std::memory_order_relaxed);
  return path;
}

void set_threads(std::size_t n) noexcept { g_threads.store(std::max<std::size_t>(1, n)); }
std::size_t threads() noexcept { return g_threads.load(); }

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc) {
  gemm_dispatch(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
  gemm_dispatch(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

#if defined(ND_HAVE_AVX2)
#define ND_DISPATCH(fn, ...) \
  (active_path() == Path::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define ND_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

float dot(const float* x, const float* y, std::size_t n) noexcept { return ND_DISPATCH(dot, x, y, n); }
double dot(const double* x, const double* y, std::size_t n) noexcept {
  return ND_DISPATCH(dot, x, y, n);
}
void axpy(std::size_t n, float alpha, const float* x, float* y) noexcept {
  ND_DISPATCH(axpy, n, alpha, x, y);
}
void axpy(std::size_t n, double alpha, const double* x, double* y) noexcept {
  ND_DISPATCH(axpy, n, alpha, x, y);
}

#undef ND_DISPATCH

}  // namespace nd::kernels

namespace nd {

std::string_view to_string(Precision p) noexcept { return p == Precision::F32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view text) {
  if (text == "f32") return Precision::F32;
  if (text == "f64") return Precision::F64;
  throw ConfigError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

ExecutionManifest configure_execution(Precision precision, std::size_t threads) {
  ExecutionManifest m;
  m.precision = precision;
  if (precision == Precision::F64) {
    kernels::set_path(kernels::Path::Scalar);
    kernels::set_threads(1);
    m.threads = 1;
  } else {
    kernels::set_path(kernels::Path::Avx2);
    kernels::set_threads(threads);
    m.threads = kernels::threads();
  }
  m.kernel_path = std::string(kernels::to_string(kernels::active_path()));
#if defined(__clang__)
  m.build_info = "clang " __clang_version__;
#elif defined(__GNUC__)
  m.build_info = "gcc " __VERSION__;
#else
  m.build_info = "unknown compiler";
#endif
  m.build_info += ", C++" + std::to_string(__cplusplus);
  return m;
}

}  // namespace nd
