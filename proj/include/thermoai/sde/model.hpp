#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/linalg.hpp"

namespace thermoai::sde {

/// Linear-plus-demon s-mode device: dv = (A0 v + b0 + D0 d) dt + C0 dw.
class SDEModel {
 public:
  SDEModel() = default;

  SDEModel(Matrix a0, Vector b0, Matrix c0, Matrix d0)
      : a0_(std::move(a0)), b0_(std::move(b0)), c0_(std::move(c0)), d0_(std::move(d0)) {
    validate();
  }

  /// Model without a demon port (M = 0).
  SDEModel(Matrix a0, Vector b0, Matrix c0)
      : SDEModel(a0, std::move(b0), c0, Matrix::Zero(a0.rows(), 0)) {}

  Eigen::Index dim() const { return a0_.rows(); }
  Eigen::Index demon_dim() const { return d0_.cols(); }

  const Matrix& A0() const { return a0_; }
  const Vector& b0() const { return b0_; }
  const Matrix& C0() const { return c0_; }
  const Matrix& D0() const { return d0_; }

 private:
  void validate() const {
    const auto n = a0_.rows();
    require(n > 0, "SDEModel: dimension must be positive");
    require(a0_.cols() == n, "SDEModel: A0 must be N x N");
    require(b0_.size() == n, "SDEModel: b0 must have N entries");
    require(c0_.rows() == n && c0_.cols() == n, "SDEModel: C0 must be N x N");
    require(d0_.rows() == n, "SDEModel: D0 must have N rows");
    require(a0_.allFinite() && b0_.allFinite() && c0_.allFinite() && d0_.allFinite(),
            "SDEModel: entries must be finite");
  }

  Matrix a0_;
  Vector b0_;
  Matrix c0_;
  Matrix d0_;
};

/// Programmed coefficients (A(t), b(t), C(t), D(t)) at one instant.
struct Coefficients {
  Matrix A;
  Vector b;
  Matrix C;
  Matrix D;

  static Coefficients of(const SDEModel& m) { return {m.A0(), m.b0(), m.C0(), m.D0()}; }
};

struct StateVector {
  double t = 0.0;
  Vector v;
};

/// Sampled path; timestamps strictly increasing.
class Trajectory {
 public:
  void push_back(StateVector s) {
    require(s.v.allFinite(), "Trajectory: non-finite state");
    require(samples_.empty() || s.t > samples_.back().t, "Trajectory: timestamps must increase");
    samples_.push_back(std::move(s));
  }
  void reserve(std::size_t n) { samples_.reserve(n); }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const StateVector& operator[](std::size_t i) const { return samples_[i]; }
  const StateVector& front() const { return samples_.front(); }
  const StateVector& back() const { return samples_.back(); }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

 private:
  std::vector<StateVector> samples_;
};

struct GaussianMoments {
  double t = 0.0;
  Vector mean;
  Matrix cov;
};

inline void check_moments(const GaussianMoments& g) {
  require(g.cov.rows() == g.mean.size() && g.cov.cols() == g.mean.size(), "GaussianMoments: shape mismatch");
  require(symmetry_defect(g.cov) <= 1e-10, "GaussianMoments: covariance not symmetric");
  require(min_symmetric_eigenvalue(g.cov) >= -1e-9, "GaussianMoments: covariance not PSD");
}

/// Empirical moments of an ensemble on a time grid.
struct EnsembleSummary {
  std::size_t n_traj = 0;
  std::vector<double> times;
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
};

}  // namespace thermoai::sde
