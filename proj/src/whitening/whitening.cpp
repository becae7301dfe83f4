#include "nd/whitening/whitening.hpp"

#include <cmath>
#include <sstream>

#include "nd/core/error.hpp"
#include "nd/core/kernels.hpp"

namespace nd::whitening {
namespace {

using kernels::Trans;

template <typename T>
void require_square(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2 || a.rows() != a.cols()) {
    throw DimensionError(std::string(op) + ": expected a square matrix, got " +
                         to_string(a.shape()));
  }
}

template <typename T>
Tensor<T> centered(const Tensor<T>& x, const Tensor<T>& mean) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor<T> xc({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const T* src = x.ptr() + i * d;
    T* dst = xc.ptr() + i * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] - mean[j];
  }
  return xc;
}

template <typename T>
T trace(const Tensor<T>& a) {
  T t = T(0);
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

// Rayleigh quotient after a fixed number of power steps; a lower bound on
// lambda_max for symmetric A.
template <typename T>
double power_estimate(const Tensor<T>& a) {
  const std::size_t d = a.rows();
  std::vector<double> v(d), w(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.5 * static_cast<double>(i) / static_cast<double>(d);
  double lambda = 0.0;
  for (int it = 0; it < 40; ++it) {
    double vv = 0.0;
    for (double x : v) vv += x * x;
    const double inv = 1.0 / std::sqrt(vv);
    for (double& x : v) x *= inv;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      const T* row = a.ptr() + i * d;
      for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(row[j]) * v[j];
      w[i] = s;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      num += v[i] * w[i];
      den += v[i] * v[i];
    }
    const double next = num / den;
    v.swap(w);
    if (it > 4 && std::abs(next - lambda) <= 1e-6 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

template <typename T>
Tensor<T> newton_schulz(const Tensor<T>& a, double scale, int iterations) {
  const std::size_t d = a.rows();
  Tensor<T> y({d, d});
  const T inv_s = static_cast<T>(1.0 / scale);
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] * inv_s;
  Tensor<T> z = Tensor<T>::identity(d);
  Tensor<T> t({d, d});
  Tensor<T> tmp({d, d});
  for (int k = 0; k < iterations; ++k) {
    // t = 3I - Z Y
    kernels::gemm(Trans::No, Trans::No, d, d, d, T(-1), z.ptr(), d, y.ptr(), d, T(0), t.ptr(), d);
    for (std::size_t i = 0; i < d; ++i) t(i, i) += T(3);
    kernels::gemm(Trans::No, Trans::No, d, d, d, T(0.5), y.ptr(), d, t.ptr(), d, T(0), tmp.ptr(), d);
    std::swap(y, tmp);
    kernels::gemm(Trans::No, Trans::No, d, d, d, T(0.5), t.ptr(), d, z.ptr(), d, T(0), tmp.ptr(), d);
    std::swap(z, tmp);
  }
  const T inv_sqrt_s = static_cast<T>(1.0 / std::sqrt(scale));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const T v = (z(i, j) + z(j, i)) * T(0.5) * inv_sqrt_s;
      z(i, j) = v;
      z(j, i) = v;
    }
  }
  return z;
}

template <typename T>
double start_residual(const Tensor<T>& a, double scale) {
  const std::size_t d = a.rows();
  long double s = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const long double e = a(i, j) / scale - (i == j ? 1.0L : 0.0L);
      s += e * e;
    }
  }
  return static_cast<double>(std::sqrt(s));
}

template <typename T>
void attach_warning(DeconvMatrix<T>& out) {
  if (!(out.residual <= static_cast<T>(kConvergenceWarning))) {
    std::ostringstream os;
    os << "inverse square root did not converge: residual " << out.residual << " after "
       << out.iterations_used << " iterations";
    out.warning = os.str();
  }
}

}  // namespace

template <typename T>
CovarianceStats<T> covariance(const Tensor<T>& x, T epsilon) {
  if (x.rank() != 2) {
    throw DimensionError("covariance: expected an N x d matrix, got " + to_string(x.shape()));
  }
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) {
    throw InsufficientSamplesError("covariance: need at least 2 samples, got " + std::to_string(n));
  }
  if (!(epsilon >= T(0))) throw ConfigError("covariance: epsilon must be >= 0");
  if (!x.all_finite()) throw DataError("covariance: input contains non-finite values");

  CovarianceStats<T> stats;
  stats.sample_count = n;
  stats.epsilon = epsilon;
  stats.mean = Tensor<T>({d});
  std::vector<double> acc(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = x.ptr() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
  }
  for (std::size_t j = 0; j < d; ++j) stats.mean[j] = static_cast<T>(acc[j] / static_cast<double>(n));

  const Tensor<T> xc = centered(x, stats.mean);
  stats.cov = Tensor<T>({d, d});
  kernels::gemm(Trans::Yes, Trans::No, d, d, n, T(1) / static_cast<T>(n), xc.ptr(), d, xc.ptr(), d,
                T(0), stats.cov.ptr(), d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) stats.cov(j, i) = stats.cov(i, j);
    stats.cov(i, i) += epsilon;
  }
  return stats;
}

template <typename T>
CovarianceStats<T> covariance_relative(const Tensor<T>& x, T factor) {
  if (!(factor >= T(0))) throw ConfigError("covariance_relative: factor must be >= 0");
  CovarianceStats<T> stats = covariance(x, T(0));
  const std::size_t d = stats.dim();
  const T eps = factor * trace(stats.cov) / static_cast<T>(d);
  for (std::size_t i = 0; i < d; ++i) stats.cov(i, i) += eps;
  stats.epsilon = eps;
  return stats;
}

template <typename T>
void require_positive_definite(const Tensor<T>& a) {
  require_square(a, "require_positive_definite");
  const std::size_t d = a.rows();
  std::vector<double> l(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l[j * d + k] * l[j * d + k];
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericalDomainError("matrix is not positive definite (pivot " + std::to_string(j) +
                                 " = " + std::to_string(diag) + ")");
    }
    const double ljj = std::sqrt(diag);
    l[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = s / ljj;
    }
  }
}

template <typename T>
DeconvMatrix<T> inverse_sqrt_newton(const Tensor<T>& a, int iterations) {
  require_square(a, "inverse_sqrt_newton");
  if (iterations < 1) throw ConfigError("inverse_sqrt_newton: iterations must be >= 1");
  if (!a.all_finite()) throw DataError("inverse_sqrt_newton: non-finite matrix");
  require_positive_definite(a);

  const double lambda = power_estimate(a);
  double scale = std::exp2(std::round(std::log2(lambda)));
  const double tr = static_cast<double>(trace(a));
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = tr;

  DeconvMatrix<T> out;
  out.iterations_used = iterations;
  out.d = newton_schulz(a, scale, iterations);
  out.residual = whitening_residual(a, out.d);
  const double r0 = start_residual(a, scale);
  if (!std::isfinite(static_cast<double>(out.residual)) || static_cast<double>(out.residual) > r0) {
    out.d = newton_schulz(a, tr, iterations);
    out.residual = whitening_residual(a, out.d);
  }
  attach_warning(out);
  return out;
}

template <typename T>
DeconvMatrix<T> inverse_sqrt_newton(const CovarianceStats<T>& stats, int iterations) {
  return inverse_sqrt_newton(stats.cov, iterations);
}

template <typename T>
DeconvMatrix<T> inverse_sqrt_eigen_oracle(const Tensor<T>& a) {
  require_square(a, "inverse_sqrt_eigen_oracle");
  const std::size_t d = a.rows();
  if (d > kOracleMaxDim) {
    throw DimensionError("inverse_sqrt_eigen_oracle: dimension " + std::to_string(d) +
                         " exceeds oracle limit " + std::to_string(kOracleMaxDim));
  }
  const SymmetricEigen<T> eig = symmetric_eigen(a);
  for (T v : eig.values) {
    if (!(v > T(0))) {
      throw NumericalDomainError("inverse_sqrt_eigen_oracle: eigenvalue " + std::to_string(v) +
                                 " <= 0");
    }
  }
  // D = V diag(lambda^-1/2) V^T
  Tensor<T> scaled = eig.vectors;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) scaled(i, j) /= std::sqrt(eig.values[j]);
  }
  DeconvMatrix<T> out;
  out.d = matmul_nt(scaled, eig.vectors);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const T v = (out.d(i, j) + out.d(j, i)) * T(0.5);
      out.d(i, j) = v;
      out.d(j, i) = v;
    }
  }
  out.iterations_used = eig.sweeps;
  out.residual = whitening_residual(a, out.d);
  attach_warning(out);
  return out;
}

template <typename T>
DeconvMatrix<T> inverse_sqrt_eigen_oracle(const CovarianceStats<T>& stats) {
  return inverse_sqrt_eigen_oracle(stats.cov);
}

template <typename T>
Tensor<T> apply_decorrelation(const Tensor<T>& x, const Tensor<T>& mean, const Tensor<T>& d) {
  if (x.rank() != 2) {
    throw DimensionError("apply_decorrelation: expected an N x d matrix, got " +
                         to_string(x.shape()));
  }
  require_square(d, "apply_decorrelation");
  if (x.cols() != d.rows() || mean.size() != d.rows()) {
    throw DimensionError("apply_decorrelation: data " + to_string(x.shape()) + ", mean " +
                         to_string(mean.shape()) + " and D " + to_string(d.shape()) +
                         " disagree");
  }
  const Tensor<T> xc = centered(x, mean);
  return matmul(xc, d);
}

template <typename T>
Tensor<T> apply_decorrelation(const Tensor<T>& x, const CovarianceStats<T>& stats,
                              const DeconvMatrix<T>& d) {
  return apply_decorrelation(x, stats.mean, d.d);
}

template <typename T>
T whitening_residual(const Tensor<T>& a, const Tensor<T>& d) {
  const Tensor<T> dad = matmul(matmul(d, a), d);
  long double s = 0;
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const long double e = static_cast<long double>(dad(i, j)) - (i == j ? 1.0L : 0.0L);
      s += e * e;
    }
  }
  return static_cast<T>(std::sqrt(s));
}

#define ND_INSTANTIATE(T)                                                                  \
  template CovarianceStats<T> covariance(const Tensor<T>&, T);                            \
  template CovarianceStats<T> covariance_relative(const Tensor<T>&, T);                   \
  template void require_positive_definite(const Tensor<T>&);                              \
  template DeconvMatrix<T> inverse_sqrt_newton(const Tensor<T>&, int);                    \
  template DeconvMatrix<T> inverse_sqrt_newton(const CovarianceStats<T>&, int);           \
  template DeconvMatrix<T> inverse_sqrt_eigen_oracle(const Tensor<T>&);                   \
  template DeconvMatrix<T> inverse_sqrt_eigen_oracle(const CovarianceStats<T>&);          \
  template Tensor<T> apply_decorrelation(const Tensor<T>&, const Tensor<T>&,              \
                                         const Tensor<T>&);                               \
  template Tensor<T> apply_decorrelation(const Tensor<T>&, const CovarianceStats<T>&,     \
                                         const DeconvMatrix<T>&);                         \
  template T whitening_residual(const Tensor<T>&, const Tensor<T>&);

ND_INSTANTIATE(float)
ND_INSTANTIATE(double)

#undef ND_INSTANTIATE

}  // namespace nd::whitening
