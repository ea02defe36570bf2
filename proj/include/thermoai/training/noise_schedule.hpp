#pragma once

#include <cmath>
#include <string>

#include "thermoai/core/errors.hpp"
#include "thermoai/gates/program.hpp"

namespace thermoai::training {

/// Forward noising SDE dx = f(t) x dt + g(t) dW on [0, T].
/// VP: f = -beta(t)/2, g = sqrt(beta(t)), beta linear from beta_min to beta_max.
/// VE: f = 0, g = c0.
struct NoiseSchedule {
  enum class Kind { VP, VE };
  Kind kind = Kind::VP;
  double beta_min = 0.1;
  double beta_max = 20.0;
  double c0 = 1.0;
  double horizon = 1.0;

  static NoiseSchedule vp(double beta_min, double beta_max, double horizon = 1.0) {
    require(beta_min > 0.0 && beta_max > 0.0 && horizon > 0.0, "NoiseSchedule: VP needs beta > 0 and T > 0");
    return {Kind::VP, beta_min, beta_max, 0.0, horizon};
  }
  static NoiseSchedule vp_constant(double beta, double horizon = 1.0) { return vp(beta, beta, horizon); }
  static NoiseSchedule ve(double c0, double horizon = 1.0) {
    require(c0 > 0.0 && horizon > 0.0, "NoiseSchedule: VE needs c0 > 0 and T > 0");
    return {Kind::VE, 0.0, 0.0, c0, horizon};
  }

  double beta(double t) const { return beta_min + (beta_max - beta_min) * t / horizon; }
  double integrated_beta(double t) const { return beta_min * t + 0.5 * (beta_max - beta_min) * t * t / horizon; }

  double f(double t) const { return kind == Kind::VP ? -0.5 * beta(t) : 0.0; }
  double g2(double t) const { return kind == Kind::VP ? beta(t) : c0 * c0; }
  double g(double t) const { return std::sqrt(g2(t)); }

  /// Perturbation kernel x_t | x_0 ~ N(mean_scale(t) x_0, kernel_var(t) I).
  double mean_scale(double t) const { return kind == Kind::VP ? std::exp(-0.5 * integrated_beta(t)) : 1.0; }
  double kernel_var(double t) const {
    return kind == Kind::VP ? -std::expm1(-integrated_beta(t)) : c0 * c0 * t;
  }

  /// Variance of the noise prior the reverse process starts from.
  double prior_var() const { return kind == Kind::VP ? 1.0 : c0 * c0 * horizon; }
};

inline std::string to_string(NoiseSchedule::Kind k) { return k == NoiseSchedule::Kind::VP ? "vp" : "ve"; }

/// Programmable s-mode device that runs the reverse SDE in tau = T - t:
/// dx = [-f(T-tau) x + g(T-tau)^2 d] dtau + g(T-tau) dW, with d supplied by a
/// score demon. Base coefficients are identities; gates carry the schedule.
struct ReverseDevice {
  sde::SDEModel model;
  gates::GateProgram program;
  double horizon;
};

inline ReverseDevice reverse_device(const NoiseSchedule& s, Eigen::Index dim) {
  require(dim > 0, "reverse_device: dimension must be positive");
  using gates::GateSegment;
  using gates::ScalarFunction;
  using gates::Schedule;
  using gates::Target;
  const Matrix id = Matrix::Identity(dim, dim);
  sde::SDEModel model(id, Vector::Zero(dim), id, id);
  ScalarFunction drift = ScalarFunction::constant(0.0);
  ScalarFunction diffusion = ScalarFunction::constant(s.c0);
  ScalarFunction coupling = ScalarFunction::constant(s.c0 * s.c0);
  if (s.kind == NoiseSchedule::Kind::VP) {
    // beta(T - tau) = beta_max - (beta_max - beta_min) tau / T
    const double slope = -(s.beta_max - s.beta_min) / s.horizon;
    drift = ScalarFunction::affine(0.5 * s.beta_max, 0.5 * slope);
    diffusion = ScalarFunction::sqrt_affine(s.beta_max, slope);
    coupling = ScalarFunction::affine(s.beta_max, slope);
  }
  const auto n2 = dim * dim;
  gates::GateProgram p;
  p.set(Schedule(Target::DriftSuper, {GateSegment::function_scalar(n2, drift, 0.0, s.horizon)}));
  p.set(Schedule(Target::DiffusionSuper, {GateSegment::function_scalar(n2, diffusion, 0.0, s.horizon)}));
  p.set(Schedule(Target::DemonCouplingSuper, {GateSegment::function_scalar(n2, coupling, 0.0, s.horizon)}));
  return {std::move(model), std::move(p), s.horizon};
}

}  // namespace thermoai::training
