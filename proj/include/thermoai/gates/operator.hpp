#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/linalg.hpp"

namespace thermoai::gates {

/// Real function of time used by directly-specified (pulse-shape) gates.
class ScalarFunction {
 public:
  enum class Kind { Constant, Affine, SqrtAffine, ExpAffine, PiecewiseLinear };

  static ScalarFunction constant(double c) { return ScalarFunction(Kind::Constant, c, 0.0); }
  /// a + b t
  static ScalarFunction affine(double a, double b) { return ScalarFunction(Kind::Affine, a, b); }
  /// sqrt(a + b t); the argument must stay nonnegative where evaluated.
  static ScalarFunction sqrt_affine(double a, double b) { return ScalarFunction(Kind::SqrtAffine, a, b); }
  /// exp(a + b t)
  static ScalarFunction exp_affine(double a, double b) { return ScalarFunction(Kind::ExpAffine, a, b); }
  /// Linear interpolation through (knots, values); constant outside the knot range.
  static ScalarFunction piecewise_linear(std::vector<double> knots, std::vector<double> values) {
    require(!knots.empty() && knots.size() == values.size(), "piecewise_linear: knots/values mismatch");
    require(std::is_sorted(knots.begin(), knots.end()) &&
                std::adjacent_find(knots.begin(), knots.end()) == knots.end(),
            "piecewise_linear: knots must be strictly increasing");
    ScalarFunction f(Kind::PiecewiseLinear, 0.0, 0.0);
    f.knots_ = std::move(knots);
    f.values_ = std::move(values);
    return f;
  }

  double operator()(double t) const {
    switch (kind_) {
      case Kind::Constant: return a_;
      case Kind::Affine: return a_ + b_ * t;
      case Kind::SqrtAffine: {
        const double arg = a_ + b_ * t;
        require(arg >= -1e-12, "sqrt_affine: negative argument at t=" + std::to_string(t));
        return std::sqrt(std::max(arg, 0.0));
      }
      case Kind::ExpAffine: return std::exp(a_ + b_ * t);
      case Kind::PiecewiseLinear: {
        if (t <= knots_.front()) return values_.front();
        if (t >= knots_.back()) return values_.back();
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        const auto k = static_cast<std::size_t>(it - knots_.begin());
        const double w = (t - knots_[k - 1]) / (knots_[k] - knots_[k - 1]);
        return values_[k - 1] + w * (values_[k] - values_[k - 1]);
      }
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  ScalarFunction(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Linear map stored in structured form: s * I, diagonal, or dense.
/// Superoperators act on column-stacked vec(X).
class Operator {
 public:
  enum class Form { Scalar, Diagonal, Dense };

  static Operator identity(Eigen::Index n) { return scalar(n, 1.0); }

  static Operator scalar(Eigen::Index n, double s) {
    require(n > 0, "Operator: dimension must be positive");
    require(std::isfinite(s), "Operator: non-finite scalar");
    Operator op;
    op.form_ = Form::Scalar;
    op.dim_ = n;
    op.scalar_ = s;
    return op;
  }

  static Operator diagonal(Vector d) {
    require(d.size() > 0, "Operator: dimension must be positive");
    require(d.allFinite(), "Operator: non-finite diagonal");
    Operator op;
    op.form_ = Form::Diagonal;
    op.dim_ = d.size();
    op.diag_ = std::move(d);
    return op;
  }

  static Operator dense(Matrix m) {
    require(m.rows() == m.cols() && m.rows() > 0, "Operator: dense form must be square");
    require(m.allFinite(), "Operator: non-finite dense entries");
    Operator op;
    op.form_ = Form::Dense;
    op.dim_ = m.rows();
    op.dense_ = std::move(m);
    return op;
  }

  Form form() const { return form_; }
  Eigen::Index dim() const { return dim_; }
  double scalar_value() const { return scalar_; }
  const Vector& diagonal_values() const { return diag_; }
  const Matrix& dense_values() const { return dense_; }

  Vector apply(const Vector& x) const {
    require(x.size() == dim_, "Operator::apply: dimension mismatch");
    switch (form_) {
      case Form::Scalar: return scalar_ * x;
      case Form::Diagonal: return diag_.cwiseProduct(x);
      case Form::Dense: return dense_ * x;
    }
    return x;
  }

  /// Applies the operator to vec(m) and reshapes back to m's shape.
  Matrix apply_to_operator(const Matrix& m) const {
    require(m.size() == dim_, "Operator: superoperator size does not match operand");
    if (form_ == Form::Scalar) return scalar_ * m;
    return unvec(apply(vec(m)), m.rows(), m.cols());
  }

  /// (*this) o right
  Operator compose(const Operator& right) const {
    require(right.dim_ == dim_, "Operator::compose: dimension mismatch");
    if (form_ == Form::Scalar && right.form_ == Form::Scalar) return scalar(dim_, scalar_ * right.scalar_);
    if (form_ != Form::Dense && right.form_ != Form::Dense) return diagonal(diag_or_expand().cwiseProduct(right.diag_or_expand()));
    return dense(to_dense() * right.to_dense());
  }

  Matrix to_dense() const {
    switch (form_) {
      case Form::Scalar: return scalar_ * Matrix::Identity(dim_, dim_);
      case Form::Diagonal: return diag_.asDiagonal();
      case Form::Dense: return dense_;
    }
    return {};
  }

  /// exp(K * dt) with this operator taken as the generator K.
  Operator exponential(double dt) const {
    if (dt == 0.0 || is_zero()) return identity(dim_);
    switch (form_) {
      case Form::Scalar: return scalar(dim_, std::exp(scalar_ * dt));
      case Form::Diagonal: return diagonal((diag_ * dt).array().exp().matrix());
      case Form::Dense: return dense(expm(dense_ * dt));
    }
    return *this;
  }

  bool is_zero() const {
    switch (form_) {
      case Form::Scalar: return scalar_ == 0.0;
      case Form::Diagonal: return diag_.isZero(0.0);
      case Form::Dense: return dense_.isZero(0.0);
    }
    return false;
  }

 private:
  Vector diag_or_expand() const { return form_ == Form::Scalar ? Vector::Constant(dim_, scalar_) : diag_; }

  Form form_ = Form::Scalar;
  Eigen::Index dim_ = 0;
  double scalar_ = 1.0;
  Vector diag_;
  Matrix dense_;
};

}  // namespace thermoai::gates
