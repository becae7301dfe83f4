#include <algorithm>
#include <cmath>
#include <numeric>

#include "nd/core/error.hpp"
#include "nd/whitening/whitening.hpp"

namespace nd::whitening {

template <typename T>
SymmetricEigen<T> symmetric_eigen(const Tensor<T>& input, double tol) {
  if (input.rank() != 2 || input.rows() != input.cols()) {
    throw DimensionError("symmetric_eigen: expected a square matrix, got " +
                         to_string(input.shape()));
  }
  const std::size_t n = input.rows();
  std::vector<double> a(input.data().begin(), input.data().end());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double total = 0.0;
  for (double x : a) total += x * x;
  const double threshold = tol * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) s += a[i * n + j] * a[i * n + j];
      }
    }
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  int sweeps = 0;
  while (sweeps < kMaxSweeps && off_norm() > threshold) {
    ++sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with the rotation acting on columns/rows p and q.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm() > threshold) {
    throw NumericalDomainError("symmetric_eigen: Jacobi sweeps did not converge");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });

  SymmetricEigen<T> out;
  out.sweeps = sweeps;
  out.values.resize(n);
  out.vectors = Tensor<T>({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = static_cast<T>(a[src * n + src]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = static_cast<T>(v[i * n + src]);
  }
  return out;
}

template SymmetricEigen<float> symmetric_eigen(const Tensor<float>&, double);
template SymmetricEigen<double> symmetric_eigen(const Tensor<double>&, double);

}  // namespace nd::whitening
