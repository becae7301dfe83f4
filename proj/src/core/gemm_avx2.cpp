// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime CPU check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <cstddef>
#include <vector>

#include "nd/core/kernels.hpp"

namespace nd::kernels::avx2 {
namespace {

template <typename T>
struct Simd;

template <>
struct Simd<float> {
  using Vec = __m256;
  static constexpr std::size_t kWidth = 8;
  static Vec zero() noexcept { return _mm256_setzero_ps(); }
  static Vec load(const float* p) noexcept { return _mm256_loadu_ps(p); }
  static void store(float* p, Vec v) noexcept { _mm256_storeu_ps(p, v); }
  static Vec broadcast(float x) noexcept { return _mm256_set1_ps(x); }
  static Vec fmadd(Vec a, Vec b, Vec c) noexcept { return _mm256_fmadd_ps(a, b, c); }
  static Vec add(Vec a, Vec b) noexcept { return _mm256_add_ps(a, b); }
  static float hsum(Vec v) noexcept {
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, v);
    return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
           ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  }
};

template <>
struct Simd<double> {
  using Vec = __m256d;
  static constexpr std::size_t kWidth = 4;
  static Vec zero() noexcept { return _mm256_setzero_pd(); }
  static Vec load(const double* p) noexcept { return _mm256_loadu_pd(p); }
  static void store(double* p, Vec v) noexcept { _mm256_storeu_pd(p, v); }
  static Vec broadcast(double x) noexcept { return _mm256_set1_pd(x); }
  static Vec fmadd(Vec a, Vec b, Vec c) noexcept { return _mm256_fmadd_pd(a, b, c); }
  static Vec add(Vec a, Vec b) noexcept { return _mm256_add_pd(a, b); }
  static double hsum(Vec v) noexcept {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  }
};

// Register tile: kMr rows x (2 vectors) columns.
constexpr std::size_t kMr = 6;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 3072;

template <typename T>
constexpr std::size_t kNr = 2 * Simd<T>::kWidth;

template <typename T>
inline T elem(Trans t, const T* x, std::size_t ld, std::size_t i, std::size_t j) noexcept {
  return t == Trans::No ? x[i * ld + j] : x[j * ld + i];
}

// Packs op(A)[i0:i0+mc, p0:p0+kc] into kMr-row panels, zero-padded.
template <typename T>
void pack_a(Trans ta, const T* a, std::size_t lda, std::size_t i0, std::size_t p0, std::size_t mc,
            std::size_t kc, T* out) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t rows = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      std::size_t r = 0;
      for (; r < rows; ++r) out[r] = elem(ta, a, lda, i0 + ir + r, p0 + p);
      for (; r < kMr; ++r) out[r] = T(0);
      out += kMr;
    }
  }
}

// Packs op(B)[p0:p0+kc, j0:j0+nc] into kNr-column panels, zero-padded.
template <typename T>
void pack_b(Trans tb, const T* b, std::size_t ldb, std::size_t p0, std::size_t j0, std::size_t kc,
            std::size_t nc, T* out) {
  constexpr std::size_t nr = kNr<T>;
  for (std::size_t jr = 0; jr < nc; jr += nr) {
    const std::size_t cols = std::min(nr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      if (tb == Trans::No && cols == nr) {
        const T* src = b + (p0 + p) * ldb + j0 + jr;
        std::copy(src, src + nr, out);
      } else {
        std::size_t c = 0;
        for (; c < cols; ++c) out[c] = elem(tb, b, ldb, p0 + p, j0 + jr + c);
        for (; c < nr; ++c) out[c] = T(0);
      }
      out += nr;
    }
  }
}

template <typename T>
void micro_kernel(std::size_t kc, const T* pa, const T* pb, T* c, std::size_t ldc, T alpha,
                  std::size_t rows, std::size_t cols) {
  using S = Simd<T>;
  using V = typename S::Vec;
  constexpr std::size_t w = S::kWidth;
  V acc[kMr][2];
  for (std::size_t r = 0; r < kMr; ++r) acc[r][0] = acc[r][1] = S::zero();

  for (std::size_t p = 0; p < kc; ++p) {
    const V b0 = S::load(pb);
    const V b1 = S::load(pb + w);
    for (std::size_t r = 0; r < kMr; ++r) {
      const V av = S::broadcast(pa[r]);
      acc[r][0] = S::fmadd(av, b0, acc[r][0]);
      acc[r][1] = S::fmadd(av, b1, acc[r][1]);
    }
    pa += kMr;
    pb += 2 * w;
  }

  const V va = S::broadcast(alpha);
  if (rows == kMr && cols == 2 * w) {
    for (std::size_t r = 0; r < kMr; ++r) {
      T* cr = c + r * ldc;
      S::store(cr, S::fmadd(va, acc[r][0], S::load(cr)));
      S::store(cr + w, S::fmadd(va, acc[r][1], S::load(cr + w)));
    }
    return;
  }
  alignas(32) T tile[kMr][2 * w];
  for (std::size_t r = 0; r < kMr; ++r) {
    S::store(tile[r], acc[r][0]);
    S::store(tile[r] + w, acc[r][1]);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    T* cr = c + r * ldc;
    for (std::size_t j = 0; j < cols; ++j) cr[j] += alpha * tile[r][j];
  }
}

template <typename T>
void gemm_blocked(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                  const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                  std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      std::fill(crow, crow + n, T(0));
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (k == 0 || alpha == T(0) || m == 0 || n == 0) return;

  constexpr std::size_t nr = kNr<T>;
  thread_local std::vector<T> abuf;
  thread_local std::vector<T> bbuf;
  abuf.resize(kMc * kKc);
  bbuf.resize(kKc * ((kNc + nr - 1) / nr) * nr);

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      pack_b(tb, b, ldb, pc, jc, kc, nc, bbuf.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(ta, a, lda, ic, pc, mc, kc, abuf.data());
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const std::size_t cols = std::min(nr, nc - jr);
          const T* pb = bbuf.data() + (jr / nr) * kc * nr;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t rows = std::min(kMr, mc - ir);
            const T* pa = abuf.data() + (ir / kMr) * kc * kMr;
            micro_kernel(kc, pa, pb, c + (ic + ir) * ldc + jc + jr, ldc, alpha, rows, cols);
          }
        }
      }
    }
  }
}

template <typename T>
T dot_impl(const T* x, const T* y, std::size_t n) noexcept {
  using S = Simd<T>;
  constexpr std::size_t w = S::kWidth;
  typename S::Vec s0 = S::zero(), s1 = S::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    s0 = S::fmadd(S::load(x + i), S::load(y + i), s0);
    s1 = S::fmadd(S::load(x + i + w), S::load(y + i + w), s1);
  }
  T total = S::hsum(S::add(s0, s1));
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

template <typename T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) noexcept {
  using S = Simd<T>;
  constexpr std::size_t w = S::kWidth;
  const auto va = S::broadcast(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) S::store(y + i, S::fmadd(va, S::load(x + i), S::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc) {
  gemm_blocked(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
  gemm_blocked(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
float dot(const float* x, const float* y, std::size_t n) noexcept { return dot_impl(x, y, n); }
double dot(const double* x, const double* y, std::size_t n) noexcept { return dot_impl(x, y, n); }
void axpy(std::size_t n, float alpha, const float* x, float* y) noexcept {
  axpy_impl(n, alpha, x, y);
}
void axpy(std::size_t n, double alpha, const double* x, double* y) noexcept {
  axpy_impl(n, alpha, x, y);
}

}  // namespace nd::kernels::avx2
