#pragma once

#include <memory>
#include <optional>

#include "thermoai/core/rng.hpp"
#include "thermoai/demon/demon.hpp"
#include "thermoai/demon/potential.hpp"

namespace thermoai::demon {

enum class GradientMode { Analytic, FiniteDifference };

/// Force-based demon: carries a latent position x driven by the host state
/// p through dx = M^{-1} p dt, and outputs the force -grad U(t, x).
/// Optional Gaussian noise with covariance V perturbs the gradient.
class ForceDemon : public Demon {
 public:
  struct Options {
    GradientMode mode = GradientMode::Analytic;
    double fd_step = 1e-4;
    std::optional<Matrix> gradient_noise_cov;
    std::uint64_t noise_seed = 0;
  };

  ForceDemon(PotentialPtr potential, Matrix mass, Vector x0) : ForceDemon(std::move(potential), std::move(mass), std::move(x0), Options{}) {}

  ForceDemon(PotentialPtr potential, Matrix mass, Vector x0, Options opts)
      : potential_(std::move(potential)), mass_(std::move(mass)), x0_(std::move(x0)), x_(x0_), opts_(std::move(opts)),
        rng_(opts_.noise_seed) {
    require(potential_ != nullptr, "ForceDemon: potential required");
    const auto n = potential_->dim();
    require(x0_.size() == n, "ForceDemon: latent dimension does not match the potential");
    require(x0_.allFinite(), "ForceDemon: non-finite initial latent");
    require(mass_.rows() == n && mass_.cols() == n, "ForceDemon: mass matrix shape mismatch");
    if (!is_spd(mass_)) throw ContractError("ForceDemon: mass matrix must be symmetric positive definite");
    mass_llt_.compute(mass_);
    identity_mass_ = mass_.isIdentity(0.0);
    require(opts_.fd_step > 0.0, "ForceDemon: fd_step must be positive");
    if (opts_.mode == GradientMode::Analytic)
      require(potential_->has_analytic_gradient(), "ForceDemon: potential has no analytic gradient");
    if (opts_.gradient_noise_cov) {
      require(opts_.gradient_noise_cov->rows() == n && opts_.gradient_noise_cov->cols() == n,
              "ForceDemon: gradient noise covariance shape mismatch");
      noise_factor_ = psd_factor(*opts_.gradient_noise_cov, "ForceDemon: gradient noise covariance");
    }
  }

  Eigen::Index input_dim() const override { return x0_.size(); }
  Eigen::Index output_dim() const override { return x0_.size(); }
  bool stateful() const override { return true; }

  Vector output(double t, const Vector& p, const Vector*) override {
    require(p.size() == x_.size(), "ForceDemon: state dimension mismatch");
    return force(t);
  }

  /// Symplectic ordering: the latent moves with the momentum at the end of the step.
  void advance(double, const Vector& p, const Vector& dv_dt, double dt) override {
    move_latent(Vector(p + dv_dt * dt), dt);
  }

  /// x <- x + M^{-1} p dt
  void move_latent(const Vector& p, double dt) {
    require(dt > 0.0, "ForceDemon: dt must be positive");
    require(p.size() == x_.size(), "ForceDemon: momentum dimension mismatch");
    if (identity_mass_) x_ += p * dt;
    else x_ += mass_llt_.solve(p) * dt;
  }

  /// -grad U at the current latent, plus gradient noise if configured.
  Vector force(double t) {
    Vector g = gradient(t, x_);
    if (noise_factor_.size() > 0) {
      Vector z(g.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng_.normal();
      g += noise_factor_ * z;
    }
    return -g;
  }

  Vector gradient(double t, const Vector& x) const {
    return opts_.mode == GradientMode::Analytic ? potential_->gradient(t, x)
                                                : finite_difference_gradient(*potential_, t, x, opts_.fd_step);
  }

  const Vector& latent() const { return x_; }
  void set_latent(const Vector& x) {
    require(x.size() == x_.size() && x.allFinite(), "ForceDemon: bad latent");
    x_ = x;
  }
  const Matrix& mass() const { return mass_; }
  const Potential& potential() const { return *potential_; }

  void reset() override { x_ = x0_; }
  void set_stream(std::uint64_t stream) override { rng_ = Rng(opts_.noise_seed, stream); }
  std::unique_ptr<Demon> clone() const override { return std::make_unique<ForceDemon>(*this); }

 private:
  PotentialPtr potential_;
  Matrix mass_;
  Eigen::LLT<Matrix> mass_llt_;
  bool identity_mass_ = false;
  Vector x0_;
  Vector x_;
  Options opts_;
  Matrix noise_factor_;
  Rng rng_;
};

/// Moves the latent by M^{-1} p dt and returns the force at the new position.
inline Vector force_demon_step(ForceDemon& demon, double t, const Vector& p, double dt) {
  demon.move_latent(p, dt);
  return demon.force(t);
}

}  // namespace thermoai::demon
