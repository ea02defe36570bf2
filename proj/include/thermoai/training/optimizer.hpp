#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/linalg.hpp"

namespace thermoai::training {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(Vector& params, const Vector& grad) = 0;
  virtual void set_learning_rate(double lr) = 0;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) { require(lr >= 0.0, "Sgd: learning rate must be nonnegative"); }
  void step(Vector& params, const Vector& grad) override {
    if (lr_ != 0.0) params -= lr_ * grad;
  }
  void set_learning_rate(double lr) override { lr_ = lr; }

 private:
  double lr_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    require(lr >= 0.0, "Adam: learning rate must be nonnegative");
  }
  void step(Vector& params, const Vector& grad) override {
    if (m_.size() != grad.size()) {
      m_ = Vector::Zero(grad.size());
      v_ = Vector::Zero(grad.size());
    }
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    if (lr_ == 0.0) return;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }
  void set_learning_rate(double lr) override { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Vector m_, v_;
  long t_ = 0;
};

enum class OptimizerKind { Sgd, Adam };

inline std::unique_ptr<Optimizer> make_optimizer(OptimizerKind k, double lr) {
  if (k == OptimizerKind::Sgd) return std::make_unique<Sgd>(lr);
  return std::make_unique<Adam>(lr);
}

}  // namespace thermoai::training
