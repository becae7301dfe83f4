#include <doctest.h>

#include <cmath>
#include <limits>

#include "nd/core/error.hpp"
#include "nd/core/rng.hpp"
#include "nd/whitening/whitening.hpp"
#include "oracles.hpp"

using namespace nd;
using namespace nd::whitening;

namespace {

double rel_err(const Tensor<double>& a, const Tensor<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ref[i]) * (a[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

double asymmetry(const Tensor<double>& a) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  return worst;
}

Tensor<double> diag(std::initializer_list<double> v) {
  Tensor<double> t({v.size(), v.size()});
  std::size_t i = 0;
  for (double x : v) {
    t(i, i) = x;
    ++i;
  }
  return t;
}

}  // namespace

TEST_CASE("covariance examples") {
  const auto s = covariance(Tensor<double>::matrix({{1, 0}, {0, 1}}), 0.0);
  CHECK(s.mean == Tensor<double>({2}, std::vector<double>{0.5, 0.5}));
  CHECK(s.cov == Tensor<double>::matrix({{0.25, -0.25}, {-0.25, 0.25}}));
  CHECK(s.sample_count == 2);

  const auto same = covariance(Tensor<double>::matrix({{3, -1, 2}, {3, -1, 2}, {3, -1, 2}}), 0.1);
  CHECK(max_abs_diff(same.cov, diag({0.1, 0.1, 0.1})) <= 1e-15);

  Rng rng(1);
  const auto x = randn<double>({1000, 8}, rng);
  const auto c = covariance(x, 0.0);
  // Two-pass loop oracle.
  CHECK(max_abs_diff(c.cov, nd::testing::sample_covariance(x)) <= 1e-10);
  CHECK(asymmetry(c.cov) <= 1e-12);
}

TEST_CASE("covariance errors") {
  CHECK_THROWS_AS(covariance(Tensor<double>({1, 3}), 0.0), InsufficientSamplesError);
  auto x = Tensor<double>({3, 2}, 1.0);
  x[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(covariance(x, 0.0), DataError);
  CHECK_THROWS(covariance(Tensor<double>({3, 2}), -1.0));
}

TEST_CASE("relative epsilon is a fraction of the mean eigenvalue") {
  Rng rng(2);
  auto x = randn<double>({500, 4}, rng);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= 3.0;
  const auto plain = covariance(x, 0.0);
  const auto rel = covariance_relative(x, 1e-2);
  double trace = 0.0;
  for (std::size_t i = 0; i < 4; ++i) trace += plain.cov(i, i);
  CHECK(rel.epsilon == doctest::Approx(1e-2 * trace / 4));
  CHECK(rel.cov(1, 1) - plain.cov(1, 1) == doctest::Approx(rel.epsilon));
}

TEST_CASE("newton inverse square root examples") {
  const auto id = inverse_sqrt_newton(Tensor<double>::identity(5), 3);
  CHECK(id.d == Tensor<double>::identity(5));
  const auto dg = inverse_sqrt_newton(diag({4.0, 0.25}), 15);
  CHECK(max_abs_diff(dg.d, diag({0.5, 2.0})) <= 1e-6);

  Rng rng(3);
  const auto x = randn<double>({60, 27}, rng);
  auto a = matmul_tn(x, x);
  for (std::size_t i = 0; i < 27; ++i) a(i, i) += 1e-3;
  const auto newton = inverse_sqrt_newton(a, 15);
  const auto oracle = inverse_sqrt_eigen_oracle(a);
  CHECK(rel_err(newton.d, oracle.d) <= 1e-4);
  CHECK(asymmetry(newton.d) <= 1e-9);
  CHECK(newton.residual == doctest::Approx(whitening_residual(a, newton.d)));
  CHECK_FALSE(newton.warning.has_value());
}

TEST_CASE("newton rejects non positive definite input and flags slow convergence") {
  CHECK_THROWS_AS(inverse_sqrt_newton(diag({1.0, -1.0}), 5), NumericalDomainError);
  CHECK_THROWS_AS(inverse_sqrt_newton(Tensor<double>::identity(2), 0), ConfigError);
  // One iteration on a badly conditioned matrix cannot converge.
  const auto r = inverse_sqrt_newton(diag({1.0, 1e-4}), 1);
  CHECK(r.residual > kConvergenceWarning);
  CHECK(r.warning.has_value());
}

TEST_CASE("eigen oracle") {
  CHECK(max_abs_diff(inverse_sqrt_eigen_oracle(Tensor<double>::identity(4)).d, Tensor<double>::identity(4)) <= 1e-14);
  CHECK(max_abs_diff(inverse_sqrt_eigen_oracle(diag({9.0, 9.0, 9.0})).d, diag({1 / 3.0, 1 / 3.0, 1 / 3.0})) <= 1e-14);
  CHECK_THROWS_AS(inverse_sqrt_eigen_oracle(diag({1.0, 0.0})), NumericalDomainError);
  Rng rng(4);
  const auto a = nd::testing::random_spd(12, 100.0, rng);
  const auto e = symmetric_eigen(a);
  CHECK(e.values.front() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.values.back() == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("apply_decorrelation") {
  Rng rng(5);
  const auto x = randn<double>({6, 3}, rng);
  CHECK(apply_decorrelation(x, Tensor<double>({3}), Tensor<double>::identity(3)) == x);
  CHECK_THROWS_AS(apply_decorrelation(x, Tensor<double>({2}), Tensor<double>::identity(2)), DimensionError);

  // Whitening with its own stats.
  auto big = randn<double>({1000, 8}, rng);
  for (std::size_t r = 0; r < 1000; ++r)
    for (std::size_t c = 1; c < 8; ++c) big(r, c) += 0.9 * big(r, c - 1);
  const auto stats = covariance_relative(big, 1e-5);
  const auto white = apply_decorrelation(big, stats, inverse_sqrt_eigen_oracle(stats));
  CHECK(nd::testing::distance_from_identity(covariance(white, 0.0).cov) <= 0.05);

  // Rank-one centered data maps both rows onto one direction, with opposite signs.
  const auto two = Tensor<double>::matrix({{1, 0}, {0, 1}});
  const auto s2 = covariance_relative(two, 1e-5);
  const auto w2 = apply_decorrelation(two, s2, inverse_sqrt_eigen_oracle(s2));
  CHECK(w2(0, 0) == doctest::Approx(-w2(1, 0)));
  CHECK(w2(0, 1) == doctest::Approx(-w2(1, 1)));
  CHECK(w2(0, 0) == doctest::Approx(-w2(0, 1)));
}

TEST_CASE("whitening properties over random SPD matrices") {
  Rng rng(6);
  for (std::size_t d : {4, 16, 27}) {
    for (double cond : {10.0, 1e3, 1e4}) {
      const auto a = nd::testing::random_spd(d, cond, rng);
      // Monotone residual.
      double prev = std::numeric_limits<double>::infinity();
      for (int k = 1; k <= 20; ++k) {
        const double r = inverse_sqrt_newton(a, k).residual;
        CHECK(r <= prev + 1e-12);
        prev = r;
      }
      // Scale covariance.
      const auto base = inverse_sqrt_newton(a, 30).d;
      for (double c : {0.1, 0.37, 2.0, 10.0}) {
        Tensor<double> ca = a;
        for (auto& v : ca.storage()) v *= c;
        const auto dc = inverse_sqrt_newton(ca, 30).d;
        Tensor<double> expect = base;
        for (auto& v : expect.storage()) v /= std::sqrt(c);
        CHECK(max_abs_diff(dc, expect) <= 1e-8);
      }
    }
  }
}
