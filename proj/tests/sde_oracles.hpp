#pragma once
// Test-only reference computations, independent of the library integrators.

#include <cmath>
#include <vector>

#include "thermoai/core/linalg.hpp"
#include "thermoai/core/rng.hpp"

namespace thermoai::testing {

/// Stationary covariance: solves A S + S A^T + Q = 0 through the Kronecker form.
inline Matrix lyapunov_stationary(const Matrix& a, const Matrix& q) {
  const auto n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix k = Matrix::Zero(n * n, n * n);
  // vec(A S) = (I (x) A) vec(S); vec(S A^T) = (A (x) I) vec(S)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += id(i, j) * a;
      k.block(i * n, j * n, n, n) += a(i, j) * id;
    }
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  const Vector s = k.fullPivLu().solve(rhs);
  Matrix out = Eigen::Map<const Matrix>(s.data(), n, n);
  return 0.5 * (out + out.transpose());
}

/// Random stable matrix: -(S S^T + shift I) + small antisymmetric part.
inline Matrix random_stable_matrix(Rng& rng, Eigen::Index n, double shift = 0.5) {
  Matrix s(n, n), w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      s(i, j) = 0.5 * rng.normal();
      w(i, j) = 0.3 * rng.normal();
    }
  return -(s * s.transpose() + shift * Matrix::Identity(n, n)) + (w - w.transpose());
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline double rel_frobenius(const Matrix& got, const Matrix& ref) { return (got - ref).norm() / ref.norm(); }

/// Least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace thermoai::testing
