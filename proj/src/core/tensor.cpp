#include "nd/core/tensor.hpp"

#include <cmath>
#include <sstream>

#include "nd/core/kernels.hpp"
#include "nd/core/rng.hpp"

namespace nd {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace {

template <typename T>
void require_matrix(const Tensor<T>& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + ": expected a matrix, got shape " +
                         to_string(t.shape()));
  }
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": inner dimensions disagree for shapes " +
                       to_string(a) + " and " + to_string(b));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch("matmul", a.shape(), b.shape());
  Tensor<T> c({m, n});
  kernels::gemm(kernels::Trans::No, kernels::Trans::No, m, n, k, T(1), a.ptr(), k, b.ptr(), n,
                T(0), c.ptr(), n);
  return c;
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch("matmul_tn", a.shape(), b.shape());
  Tensor<T> c({m, n});
  kernels::gemm(kernels::Trans::Yes, kernels::Trans::No, m, n, k, T(1), a.ptr(), m, b.ptr(), n,
                T(0), c.ptr(), n);
  return c;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) mismatch("matmul_nt", a.shape(), b.shape());
  Tensor<T> c({m, n});
  kernels::gemm(kernels::Trans::No, kernels::Trans::Yes, m, n, k, T(1), a.ptr(), k, b.ptr(), k,
                T(0), c.ptr(), n);
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor<T> t({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t(j, i) = a(i, j);
  }
  return t;
}

template <typename T>
Tensor<T> randn(const Shape& shape, Rng& rng) {
  if (shape.empty()) throw EmptyShapeError("randn: shape must be nonempty");
  for (std::size_t d : shape) {
    if (d == 0) throw EmptyShapeError("randn: zero-size dimension in shape " + to_string(shape));
  }
  std::vector<double> draws(shape_size(shape));
  rng.normal_fill(draws);
  return Tensor<T>(shape, std::vector<T>(draws.begin(), draws.end()));
}

template <typename T>
T frobenius_norm(const Tensor<T>& a) {
  long double s = 0;
  for (T v : a.data()) s += static_cast<long double>(v) * v;
  return static_cast<T>(std::sqrt(s));
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff: shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()) + " differ");
  }
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

#define ND_INSTANTIATE(T)                                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> transpose(const Tensor<T>&);                      \
  template Tensor<T> randn(const Shape&, Rng&);                        \
  template T frobenius_norm(const Tensor<T>&);                         \
  template T max_abs_diff(const Tensor<T>&, const Tensor<T>&);

ND_INSTANTIATE(float)
ND_INSTANTIATE(double)

#undef ND_INSTANTIATE

}  // namespace nd
