#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop kernels with a scalar reference implementation and an AVX2/FMA
// variant. The variant is chosen at runtime from CPU features; callers can pin
// a path (tests compare the two, test mode pins the scalar one).

namespace nd::kernels {

enum class Path { Scalar, Avx2 };

std::string_view to_string(Path path) noexcept;

// True when the binary carries the AVX2 variant and the CPU supports AVX2+FMA.
bool avx2_available() noexcept;

// Currently selected path. Defaults to the best available one, overridable
// by the ND_KERNELS environment variable ("scalar" or "avx2").
Path active_path() noexcept;

// Pins the path. Requesting Avx2 on a machine without it falls back to Scalar;
// the path actually installed is returned.
Path set_path(Path path) noexcept;

// Threads used by large GEMMs. 1 keeps execution single-threaded.
void set_threads(std::size_t n) noexcept;
std::size_t threads() noexcept;

enum class Trans { No, Yes };

// C = alpha * op(A) * op(B) + beta * C, row-major with leading dimensions.
// op(A) is m x k, op(B) is k x n. beta == 0 overwrites C (NaNs in C are not
// propagated).
//
// The scalar path accumulates each C element over k sequentially; the AVX2
// path uses a fixed blocking, so both are deterministic run to run.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc);
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);

float dot(const float* x, const float* y, std::size_t n) noexcept;
double dot(const double* x, const double* y, std::size_t n) noexcept;

// y += alpha * x
void axpy(std::size_t n, float alpha, const float* x, float* y) noexcept;
void axpy(std::size_t n, double alpha, const double* x, double* y) noexcept;

// Direct access to each implementation, for equivalence tests.
namespace scalar {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc);
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);
float dot(const float* x, const float* y, std::size_t n) noexcept;
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(std::size_t n, float alpha, const float* x, float* y) noexcept;
void axpy(std::size_t n, double alpha, const double* x, double* y) noexcept;
}  // namespace scalar

#if defined(ND_HAVE_AVX2)
namespace avx2 {
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc);
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);
float dot(const float* x, const float* y, std::size_t n) noexcept;
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(std::size_t n, float alpha, const float* x, float* y) noexcept;
void axpy(std::size_t n, double alpha, const double* x, double* y) noexcept;
}  // namespace avx2
#endif

}  // namespace nd::kernels
