#pragma once

#include <functional>
#include <memory>

#include "thermoai/demon/demon.hpp"
#include "thermoai/demon/mlp.hpp"

namespace thermoai::demon {

/// Demon whose output d evolves by d' = q(t, v) + r(t, v) dv/dt, with r an
/// M x N matrix. The host must supply dv/dt on every query.
class TotalDerivativeDemon : public Demon {
 public:
  using QFn = std::function<Vector(double, const Vector&)>;
  using RFn = std::function<Matrix(double, const Vector&)>;

  TotalDerivativeDemon(Eigen::Index n, Vector d0, QFn q, RFn r)
      : n_(n), d0_(std::move(d0)), d_(d0_), q_(std::move(q)), r_(std::move(r)) {
    require(n > 0 && d0_.size() > 0, "TotalDerivativeDemon: dimensions must be positive");
    require(d0_.allFinite(), "TotalDerivativeDemon: non-finite initial output");
    require(static_cast<bool>(q_) && static_cast<bool>(r_), "TotalDerivativeDemon: q and r are required");
  }

  /// q and r as networks on [v; t]; r's output is reshaped column-major to M x N.
  static TotalDerivativeDemon from_networks(Eigen::Index n, Vector d0, Mlp q, Mlp r) {
    const auto m = d0.size();
    require(q.input_dim() == n + 1 && q.output_dim() == m, "TotalDerivativeDemon: q network shape mismatch");
    require(r.input_dim() == n + 1 && r.output_dim() == m * n, "TotalDerivativeDemon: r network shape mismatch");
    auto in = [](double t, const Vector& v) {
      Vector x(v.size() + 1);
      x.head(v.size()) = v;
      x(v.size()) = t;
      return x;
    };
    QFn qf = [q = std::move(q), in](double t, const Vector& v) { return Vector(q(in(t, v))); };
    RFn rf = [r = std::move(r), in, m, n](double t, const Vector& v) {
      const Vector flat = r(in(t, v));
      return Matrix(Eigen::Map<const Matrix>(flat.data(), m, n));
    };
    return TotalDerivativeDemon(n, std::move(d0), std::move(qf), std::move(rf));
  }

  Eigen::Index input_dim() const override { return n_; }
  Eigen::Index output_dim() const override { return d0_.size(); }
  bool needs_derivative() const override { return true; }
  bool stateful() const override { return true; }

  Vector output(double, const Vector& v, const Vector* dv_dt) override {
    if (dv_dt == nullptr) throw ContractError("TotalDerivativeDemon: dv/dt is required");
    require(v.size() == n_ && dv_dt->size() == n_, "TotalDerivativeDemon: state dimension mismatch");
    return d_;
  }

  void advance(double t, const Vector& v, const Vector& dv_dt, double dt) override { step(t, v, dv_dt, dt); }

  /// d <- d + (q + r dv/dt) dt
  const Vector& step(double t, const Vector& v, const Vector& dv_dt, double dt) {
    require(dt > 0.0, "TotalDerivativeDemon: dt must be positive");
    require(v.size() == n_ && dv_dt.size() == n_, "TotalDerivativeDemon: state dimension mismatch");
    const Vector q = q_(t, v);
    const Matrix r = r_(t, v);
    require(q.size() == d_.size() && r.rows() == d_.size() && r.cols() == n_,
            "TotalDerivativeDemon: q or r has the wrong shape");
    d_ += (q + r * dv_dt) * dt;
    return d_;
  }

  const Vector& state() const { return d_; }
  void reset() override { d_ = d0_; }
  std::unique_ptr<Demon> clone() const override { return std::make_unique<TotalDerivativeDemon>(*this); }

 private:
  Eigen::Index n_;
  Vector d0_;
  Vector d_;
  QFn q_;
  RFn r_;
};

inline const Vector& total_derivative_step(TotalDerivativeDemon& demon, double t, const Vector& v, const Vector& dv_dt,
                                           double dt) {
  return demon.step(t, v, dv_dt, dt);
}

}  // namespace thermoai::demon
