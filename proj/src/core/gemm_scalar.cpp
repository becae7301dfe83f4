#include <cstddef>
#include <vector>

#include "nd/core/kernels.hpp"

namespace nd::kernels::scalar {
namespace {

// Copies op(X) into a dense row-major rows x cols buffer.
template <typename T>
void pack(Trans t, std::size_t rows, std::size_t cols, const T* x, std::size_t ld,
          std::vector<T>& out) {
  out.resize(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = t == Trans::No ? x[i * ld + j] : x[j * ld + i];
    }
  }
}

template <typename T>
void gemm_ref(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
              std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (k == 0 || alpha == T(0)) return;

  std::vector<T> abuf;
  std::vector<T> bbuf;
  const T* ap = a;
  std::size_t lda_eff = lda;
  if (ta == Trans::Yes) {
    pack(ta, m, k, a, lda, abuf);
    ap = abuf.data();
    lda_eff = k;
  }
  const T* bp = b;
  std::size_t ldb_eff = ldb;
  if (tb == Trans::Yes) {
    pack(tb, k, n, b, ldb, bbuf);
    bp = bbuf.data();
    ldb_eff = n;
  }

  // i-p-j order: every C(i, j) accumulates its k terms in increasing p.
  std::vector<T> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) acc[j] = T(0);
    const T* arow = ap + i * lda_eff;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = arow[p];
      const T* brow = bp + p * ldb_eff;
      for (std::size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
    }
    T* crow = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) crow[j] += alpha * acc[j];
  }
}

template <typename T>
T dot_ref(const T* x, const T* y, std::size_t n) noexcept {
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc) {
  gemm_ref(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
  gemm_ref(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
float dot(const float* x, const float* y, std::size_t n) noexcept { return dot_ref(x, y, n); }
double dot(const double* x, const double* y, std::size_t n) noexcept { return dot_ref(x, y, n); }
void axpy(std::size_t n, float alpha, const float* x, float* y) noexcept {
  axpy_ref(n, alpha, x, y);
}
void axpy(std::size_t n, double alpha, const double* x, double* y) noexcept {
  axpy_ref(n, alpha, x, y);
}

}  // namespace nd::kernels::scalar
