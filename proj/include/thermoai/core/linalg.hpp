#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "thermoai/core/errors.hpp"

namespace thermoai {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Column-stacking vectorization, vec(A)[i + j*rows] = A(i, j).
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  require(v.size() == rows * cols, "unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline double symmetry_defect(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline double min_symmetric_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_spd(const Matrix& m, double tol = 1e-12) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (symmetry_defect(m) > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success && min_symmetric_eigenvalue(m) > 0.0;
}

/// Lower Cholesky factor L with L L^T = m; throws if m is not SPD.
inline Matrix cholesky_factor(const Matrix& m, const std::string& what) {
  require(is_spd(m), what + " must be symmetric positive definite");
  return Eigen::LLT<Matrix>(m).matrixL();
}

/// Factor L with L L^T = m for symmetric positive semidefinite m (zero blocks allowed).
inline Matrix psd_factor(const Matrix& m, const std::string& what) {
  require(m.rows() == m.cols(), what + " must be square");
  require(symmetry_defect(m) <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()), what + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  require(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()),
          what + " must be positive semidefinite");
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
inline Matrix expm(const Matrix& a) {
  require(a.rows() == a.cols(), "expm: matrix must be square");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  require(a.allFinite(), "expm: non-finite entries");

  static constexpr std::array<double, 14> b{64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                            1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                            670442572800.0,      33522128640.0,       1323241920.0,
                                            40840800.0,          960960.0,            16380.0,
                                            182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix s = a / std::ldexp(1.0, squarings);

  const Matrix id = Matrix::Identity(n, n);
  const Matrix s2 = s * s;
  const Matrix s4 = s2 * s2;
  const Matrix s6 = s4 * s2;
  const Matrix u_inner = s6 * (b[13] * s6 + b[11] * s4 + b[9] * s2) + b[7] * s6 + b[5] * s4 + b[3] * s2 + b[1] * id;
  const Matrix u = s * u_inner;
  const Matrix v = s6 * (b[12] * s6 + b[10] * s4 + b[8] * s2) + b[6] * s6 + b[4] * s4 + b[2] * s2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

inline Matrix matrix_from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto nrows = static_cast<Eigen::Index>(rows.size());
  const auto ncols = nrows == 0 ? 0 : static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(nrows, ncols);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    require(static_cast<Eigen::Index>(row.size()) == ncols, "matrix_from_rows: ragged rows");
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline Vector vector_of(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace thermoai
