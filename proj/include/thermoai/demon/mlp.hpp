#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/linalg.hpp"
#include "thermoai/core/rng.hpp"

namespace thermoai::demon {

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters live in one flat vector: per layer, W (column-major) then b.
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<Eigen::Index> sizes) : sizes_(std::move(sizes)) {
    require(sizes_.size() >= 2, "Mlp: need at least input and output sizes");
    for (auto s : sizes_) require(s > 0, "Mlp: layer sizes must be positive");
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(total);
      total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_ = Vector::Zero(total);
  }

  /// Glorot-normal weights, zero biases.
  Mlp(std::vector<Eigen::Index> sizes, std::uint64_t seed, bool zero_last_layer = false) : Mlp(std::move(sizes)) {
    Rng rng(seed);
    for (std::size_t l = 0; l < n_layers(); ++l) {
      const double scale = std::sqrt(2.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
      auto w = weight(l);
      const bool zero = zero_last_layer && l + 1 == n_layers();
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = zero ? 0.0 : scale * rng.normal();
    }
  }

  std::size_t n_layers() const { return sizes_.size() - 1; }
  const std::vector<Eigen::Index>& sizes() const { return sizes_; }
  Eigen::Index input_dim() const { return sizes_.front(); }
  Eigen::Index output_dim() const { return sizes_.back(); }
  Eigen::Index n_params() const { return params_.size(); }

  const Vector& params() const { return params_; }
  void set_params(const Vector& p) {
    require(p.size() == params_.size(), "Mlp: parameter vector has the wrong length");
    require(p.allFinite(), "Mlp: non-finite parameters");
    params_ = p;
  }
  Vector& mutable_params() { return params_; }

  Eigen::Map<Matrix> weight(std::size_t l) {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const Matrix> weight(std::size_t l) const {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<Vector> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }
  Eigen::Map<const Vector> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }

  /// Activations of every layer for a batch (one column per sample).
  struct Cache {
    std::vector<Matrix> h;
  };

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    require(x.rows() == input_dim(), "Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                                         std::to_string(input_dim()));
    Matrix h = x;
    if (cache) {
      cache->h.clear();
      cache->h.push_back(h);
    }
    for (std::size_t l = 0; l < n_layers(); ++l) {
      Matrix z = weight(l) * h;
      z.colwise() += bias(l);
      if (l + 1 < n_layers()) z = z.array().tanh().matrix();
      h = std::move(z);
      if (cache && l + 1 < n_layers()) cache->h.push_back(h);
    }
    return h;
  }

  Vector operator()(const Vector& x) const { return forward(x); }

  /// Backpropagates dL/dy (columns per sample) through a cached forward pass.
  /// Accumulates parameter gradients into grad (resized if empty) and
  /// returns dL/dx.
  Matrix backward(const Cache& cache, const Matrix& dy, Vector& grad) const {
    require(cache.h.size() == n_layers(), "Mlp::backward: cache does not match the network");
    if (grad.size() == 0) grad = Vector::Zero(n_params());
    require(grad.size() == n_params(), "Mlp::backward: gradient buffer has the wrong length");
    Matrix g = dy;
    for (std::size_t k = n_layers(); k-- > 0;) {
      const Matrix& h = cache.h[k];
      Eigen::Map<Matrix>(grad.data() + offsets_[k], sizes_[k + 1], sizes_[k]).noalias() += g * h.transpose();
      Eigen::Map<Vector>(grad.data() + offsets_[k] + sizes_[k + 1] * sizes_[k], sizes_[k + 1]) += g.rowwise().sum();
      Matrix dh = weight(k).transpose() * g;
      if (k > 0) dh.array() *= 1.0 - h.array().square();
      g = std::move(dh);
    }
    return g;
  }

  bool zero_output_layer() const { return weight(n_layers() - 1).isZero(0.0) && bias(n_layers() - 1).isZero(0.0); }

 private:
  std::vector<Eigen::Index> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

}  // namespace thermoai::demon
