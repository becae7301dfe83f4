#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nd/core/tensor.hpp"

// Covariance estimation and inverse-square-root whitening of N x d sample
// matrices (rows are samples).

namespace nd::whitening {

template <typename T>
struct CovarianceStats {
  Tensor<T> cov;   // d x d, symmetric, epsilon already on the diagonal
  Tensor<T> mean;  // [d]
  std::size_t sample_count = 0;
  T epsilon = T(0);

  std::size_t dim() const noexcept { return mean.size(); }
};

// D ~= (cov + eps I)^(-1/2).
template <typename T>
struct DeconvMatrix {
  Tensor<T> d;
  int iterations_used = 0;
  // ||D * A * D - I||_F, recomputed from the returned D.
  T residual = T(0);
  // Set when the residual stays above kConvergenceWarning.
  std::optional<std::string> warning;
};

inline constexpr double kConvergenceWarning = 0.1;

// mean = column means; cov = Xc^T Xc / N + epsilon I.
template <typename T>
CovarianceStats<T> covariance(const Tensor<T>& x, T epsilon);

// As `covariance`, with epsilon = factor * trace(Xc^T Xc / N) / d.
template <typename T>
CovarianceStats<T> covariance_relative(const Tensor<T>& x, T factor);

// Coupled Newton-Schulz iteration on A = stats.cov:
//   Y0 = A/s, Z0 = I, T = 3I - Z Y, Y <- Y T / 2, Z <- T Z / 2, D = Z / sqrt(s).
// s is the power of two nearest a power-iteration estimate of lambda_max(A),
// which keeps the spectrum of A/s inside the convergence region. If that
// estimate turns out too low (residual grows), the run is repeated with
// s = trace(A).
template <typename T>
DeconvMatrix<T> inverse_sqrt_newton(const CovarianceStats<T>& stats, int iterations);

template <typename T>
DeconvMatrix<T> inverse_sqrt_newton(const Tensor<T>& a, int iterations);

// Exact inverse square root through a Jacobi eigendecomposition. Test oracle;
// limited to d <= kOracleMaxDim.
template <typename T>
DeconvMatrix<T> inverse_sqrt_eigen_oracle(const CovarianceStats<T>& stats);

template <typename T>
DeconvMatrix<T> inverse_sqrt_eigen_oracle(const Tensor<T>& a);

inline constexpr std::size_t kOracleMaxDim = 512;

// (x - mean) * D, mean broadcast over rows.
template <typename T>
Tensor<T> apply_decorrelation(const Tensor<T>& x, const CovarianceStats<T>& stats,
                              const DeconvMatrix<T>& d);

template <typename T>
Tensor<T> apply_decorrelation(const Tensor<T>& x, const Tensor<T>& mean, const Tensor<T>& d);

// ||D A D - I||_F
template <typename T>
T whitening_residual(const Tensor<T>& a, const Tensor<T>& d);

template <typename T>
struct SymmetricEigen {
  std::vector<T> values;  // ascending
  Tensor<T> vectors;      // columns are eigenvectors, ordered like `values`
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal mass falls below
// tol * ||A||_F.
template <typename T>
SymmetricEigen<T> symmetric_eigen(const Tensor<T>& a, double tol = 1e-12);

// Throws NumericalDomainError unless `a` admits a Cholesky factorization.
template <typename T>
void require_positive_definite(const Tensor<T>& a);

}  // namespace nd::whitening
