#include <algorithm>
#include <cmath>
#include <vector>
#include <set>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "thermoai/core/linalg.hpp"
#include "thermoai/core/rng.hpp"

using namespace thermoai;

TEST(Expm, ZeroIsIdentity) {
  const Matrix z = Matrix::Zero(3, 3);
  EXPECT_TRUE(expm(z).isApprox(Matrix::Identity(3, 3), 1e-15));
}

TEST(Expm, ScalarMultipleOfIdentity) {
  const Matrix a = 0.7 * Matrix::Identity(4, 4);
  EXPECT_NEAR((expm(a) - std::exp(0.7) * Matrix::Identity(4, 4)).norm(), 0.0, 1e-13);
}

TEST(Expm, NilpotentClosedForm) {
  // exp([[0,1],[0,0]] * s) = [[1,s],[0,1]]
  const Matrix a = matrix_from_rows({{0.0, 3.5}, {0.0, 0.0}});
  const Matrix e = expm(a);
  EXPECT_NEAR(e(0, 1), 3.5, 1e-14);
  EXPECT_NEAR(e(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(e(1, 0), 0.0, 1e-14);
}

TEST(Expm, MatchesEigenReferenceOnRandomMatrices) {
  // Eigen's unsupported MatrixFunctions module is an independent implementation.
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 6;
    const double scale = 0.1 * (1 + trial);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = scale * rng.normal();
    const Matrix ref = a.exp();
    const Matrix got = expm(a);
    EXPECT_LE((got - ref).norm() / ref.norm(), 1e-10) << "trial " << trial;
  }
}

TEST(Expm, RejectsNonSquare) {
  EXPECT_THROW(expm(Matrix::Zero(2, 3)), ContractError);
}

TEST(Rng, SameSeedAndStreamReproduce) {
  Rng a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer) {
  Rng a(42, 0), b(42, 1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 100; ++i) {
    seen.insert(a());
    seen.insert(b());
  }
  EXPECT_EQ(seen.size(), 200u);
}

TEST(Rng, NormalMoments) {
  Rng rng(1);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

// Kolmogorov-Smirnov against the normal CDF, plus the mass beyond the base layer.
TEST(Rng, NormalMatchesCdf) {
  Rng rng(5, 1);
  const int n = 400000;
  std::vector<double> xs(n);
  int tail = 0;
  for (auto& x : xs) {
    x = rng.normal();
    tail += std::abs(x) > 3.0;
  }
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 1.95 / std::sqrt(n));  // 0.1% level
  const double p3 = std::erfc(3.0 / std::sqrt(2.0));
  EXPECT_NEAR(static_cast<double>(tail) / n, p3, 4.0 * std::sqrt(p3 / n));
}

TEST(Rng, UniformOpenInterval) {
  Rng rng(9);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Linalg, VecUnvecColumnMajor) {
  const Matrix m = matrix_from_rows({{1, 2, 3}, {4, 5, 6}});
  const Vector v = vec(m);
  EXPECT_EQ(v(1), 4.0);  // (1,0)
  EXPECT_EQ(v(2), 2.0);  // (0,1)
  EXPECT_EQ(unvec(v, 2, 3), m);
}

TEST(Linalg, SpdChecks) {
  EXPECT_TRUE(is_spd(Matrix::Identity(3, 3)));
  EXPECT_FALSE(is_spd(matrix_from_rows({{1, 2}, {2, 1}})));
  EXPECT_THROW(cholesky_factor(matrix_from_rows({{0, 0}, {0, 1}}), "B"), ContractError);
  const Matrix f = psd_factor(matrix_from_rows({{0, 0}, {0, 4}}), "S");
  EXPECT_NEAR((f * f.transpose() - matrix_from_rows({{0, 0}, {0, 4}})).norm(), 0.0, 1e-12);
}
