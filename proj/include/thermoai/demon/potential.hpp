#pragma once

#include <functional>
#include <memory>
#include <string>

#include "thermoai/demon/analytic_score.hpp"
#include "thermoai/demon/mlp.hpp"
#include "thermoai/gates/operator.hpp"

namespace thermoai::demon {

/// Potential energy U(t, x).
class Potential {
 public:
  virtual ~Potential() = default;
  virtual Eigen::Index dim() const = 0;
  virtual double value(double t, const Vector& x) const = 0;
  virtual bool has_analytic_gradient() const { return true; }
  virtual Vector gradient(double t, const Vector& x) const = 0;
  virtual std::string name() const = 0;
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// Central differences with step h in every coordinate.
inline Vector finite_difference_gradient(const Potential& u, double t, const Vector& x, double h = 1e-4) {
  require(h > 0.0, "finite_difference_gradient: step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    xp(i) = xi + h;
    const double up = u.value(t, xp);
    xp(i) = xi - h;
    const double um = u.value(t, xp);
    xp(i) = xi;
    g(i) = (up - um) / (2.0 * h);
  }
  return g;
}

/// U = 1/2 (x - c)^T K (x - c), K symmetric.
class QuadraticPotential : public Potential {
 public:
  explicit QuadraticPotential(Matrix k, Vector center = {}) : k_(std::move(k)), c_(std::move(center)) {
    require(k_.rows() == k_.cols() && k_.rows() > 0, "QuadraticPotential: K must be square");
    require(symmetry_defect(k_) <= 1e-12 * std::max(1.0, k_.norm()), "QuadraticPotential: K must be symmetric");
    if (c_.size() == 0) c_ = Vector::Zero(k_.rows());
    require(c_.size() == k_.rows(), "QuadraticPotential: center dimension mismatch");
  }
  static std::shared_ptr<QuadraticPotential> isotropic(Eigen::Index n, double k = 1.0) {
    return std::make_shared<QuadraticPotential>(k * Matrix::Identity(n, n));
  }
  Eigen::Index dim() const override { return k_.rows(); }
  double value(double, const Vector& x) const override {
    const Vector r = x - c_;
    return 0.5 * r.dot(k_ * r);
  }
  Vector gradient(double, const Vector& x) const override { return k_ * (x - c_); }
  std::string name() const override { return "quadratic"; }

 private:
  Matrix k_;
  Vector c_;
};

/// U = a * sum_i (x_i^2 - b)^2
class DoubleWellPotential : public Potential {
 public:
  DoubleWellPotential(Eigen::Index n, double a = 1.0, double b = 1.0) : n_(n), a_(a), b_(b) {
    require(n > 0 && a > 0.0 && b > 0.0, "DoubleWellPotential: need n > 0, a > 0, b > 0");
  }
  Eigen::Index dim() const override { return n_; }
  double value(double, const Vector& x) const override { return a_ * (x.array().square() - b_).square().sum(); }
  Vector gradient(double, const Vector& x) const override {
    return (4.0 * a_ * x.array() * (x.array().square() - b_)).matrix();
  }
  std::string name() const override { return "double_well"; }

 private:
  Eigen::Index n_;
  double a_, b_;
};

/// U = -log p(x) for a Gaussian mixture.
class GaussianMixtureNll : public Potential {
 public:
  explicit GaussianMixtureNll(GaussianMixture m) : m_(std::move(m)) {}
  Eigen::Index dim() const override { return m_.dim(); }
  double value(double, const Vector& x) const override { return -m_.log_density(x); }
  Vector gradient(double, const Vector& x) const override { return -m_.score(x); }
  std::string name() const override { return "gaussian_mixture_nll"; }
  const GaussianMixture& mixture() const { return m_; }

 private:
  GaussianMixture m_;
};

/// Scalar network U_theta(t, x) = net([x; t]).
class NetworkPotential : public Potential {
 public:
  explicit NetworkPotential(Mlp net) : net_(std::move(net)) {
    require(net_.output_dim() == 1 && net_.input_dim() >= 2, "NetworkPotential: need input n+1 and scalar output");
  }
  Eigen::Index dim() const override { return net_.input_dim() - 1; }
  double value(double t, const Vector& x) const override { return net_(input(t, x))(0); }
  Vector gradient(double t, const Vector& x) const override {
    Mlp::Cache cache;
    net_.forward(input(t, x), &cache);
    Vector scratch;
    const Matrix dx = net_.backward(cache, Matrix::Ones(1, 1), scratch);
    return dx.col(0).head(dim());
  }
  std::string name() const override { return "network"; }
  const Mlp& network() const { return net_; }

 private:
  Vector input(double t, const Vector& x) const {
    require(x.size() == dim(), "NetworkPotential: dimension mismatch");
    Vector in(x.size() + 1);
    in.head(x.size()) = x;
    in(x.size()) = t;
    return in;
  }
  Mlp net_;
};

/// lambda(t) * U(t, x); temperature enters through lambda.
class ScaledPotential : public Potential {
 public:
  ScaledPotential(gates::ScalarFunction lambda, PotentialPtr base) : lambda_(std::move(lambda)), base_(std::move(base)) {
    require(base_ != nullptr, "ScaledPotential: base potential required");
  }
  Eigen::Index dim() const override { return base_->dim(); }
  double value(double t, const Vector& x) const override { return lambda_(t) * base_->value(t, x); }
  bool has_analytic_gradient() const override { return base_->has_analytic_gradient(); }
  Vector gradient(double t, const Vector& x) const override { return lambda_(t) * base_->gradient(t, x); }
  std::string name() const override { return "scaled_" + base_->name(); }

 private:
  gates::ScalarFunction lambda_;
  PotentialPtr base_;
};

/// User-supplied U and optional gradient; without a gradient only FD mode works.
class FunctionPotential : public Potential {
 public:
  using ValueFn = std::function<double(double, const Vector&)>;
  using GradFn = std::function<Vector(double, const Vector&)>;

  FunctionPotential(Eigen::Index n, ValueFn value, GradFn grad = {}, std::string name = "function")
      : n_(n), value_(std::move(value)), grad_(std::move(grad)), name_(std::move(name)) {
    require(n > 0 && static_cast<bool>(value_), "FunctionPotential: need a dimension and a value function");
  }
  Eigen::Index dim() const override { return n_; }
  double value(double t, const Vector& x) const override { return value_(t, x); }
  bool has_analytic_gradient() const override { return static_cast<bool>(grad_); }
  Vector gradient(double t, const Vector& x) const override {
    if (!grad_) throw ContractError("FunctionPotential '" + name_ + "': no analytic gradient");
    return grad_(t, x);
  }
  std::string name() const override { return name_; }

 private:
  Eigen::Index n_;
  ValueFn value_;
  GradFn grad_;
  std::string name_;
};

}  // namespace thermoai::demon
