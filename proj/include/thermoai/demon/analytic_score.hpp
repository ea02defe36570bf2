#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "thermoai/core/linalg.hpp"
#include "thermoai/core/rng.hpp"

namespace thermoai::demon {

class Gaussian {
 public:
  Gaussian(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    require(cov_.rows() == mean_.size() && cov_.cols() == mean_.size(), "Gaussian: covariance shape mismatch");
    require(is_spd(cov_), "Gaussian: covariance must be symmetric positive definite");
    llt_.compute(cov_);
    log_det_ = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  static Gaussian isotropic(Vector mean, double variance) {
    const auto n = mean.size();
    return Gaussian(std::move(mean), variance * Matrix::Identity(n, n));
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  /// -Sigma^{-1} (x - mu)
  Vector score(const Vector& x) const {
    require(x.size() == dim(), "Gaussian::score: dimension mismatch");
    return -llt_.solve(x - mean_);
  }

  double log_density(const Vector& x) const {
    require(x.size() == dim(), "Gaussian::log_density: dimension mismatch");
    const Vector r = x - mean_;
    return -0.5 * (r.dot(llt_.solve(r)) + log_det_ + static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi));
  }

  Vector sample(Rng& rng) const {
    Vector z(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) z(i) = rng.normal();
    return mean_ + llt_.matrixL() * z;
  }

 private:
  Vector mean_;
  Matrix cov_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
};

class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components)
      : weights_(std::move(weights)), components_(std::move(components)) {
    require(!components_.empty() && weights_.size() == components_.size(), "GaussianMixture: weights and components differ");
    double total = 0.0;
    for (double w : weights_) {
      require(std::isfinite(w) && w > 0.0, "GaussianMixture: weights must be positive");
      total += w;
    }
    for (double& w : weights_) w /= total;
    for (const auto& c : components_) require(c.dim() == components_.front().dim(), "GaussianMixture: component dimensions differ");
  }

  Eigen::Index dim() const { return components_.front().dim(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Gaussian>& components() const { return components_; }

  /// Posterior component probabilities at x.
  std::vector<double> responsibilities(const Vector& x) const {
    std::vector<double> lw(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) lw[k] = std::log(weights_[k]) + components_[k].log_density(x);
    const double mx = *std::max_element(lw.begin(), lw.end());
    double s = 0.0;
    for (double& l : lw) s += (l = std::exp(l - mx));
    for (double& l : lw) l /= s;
    return lw;
  }

  double log_density(const Vector& x) const {
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> lw(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
      lw[k] = std::log(weights_[k]) + components_[k].log_density(x);
      mx = std::max(mx, lw[k]);
    }
    double s = 0.0;
    for (double l : lw) s += std::exp(l - mx);
    return mx + std::log(s);
  }

  Vector score(const Vector& x) const {
    const auto r = responsibilities(x);
    Vector s = Vector::Zero(dim());
    for (std::size_t k = 0; k < components_.size(); ++k) s += r[k] * components_[k].score(x);
    return s;
  }

  Vector sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
      acc += weights_[k];
      if (u <= acc || k + 1 == components_.size()) return components_[k].sample(rng);
    }
    return components_.back().sample(rng);
  }

 private:
  std::vector<double> weights_;
  std::vector<Gaussian> components_;
};

inline Vector analytic_score(const Gaussian& g, const Vector& x) { return g.score(x); }
inline Vector analytic_score(const GaussianMixture& m, const Vector& x) { return m.score(x); }

}  // namespace thermoai::demon
