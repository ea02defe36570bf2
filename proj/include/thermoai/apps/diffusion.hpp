#pragma once

#include <memory>
#include <vector>

#include "thermoai/apps/common.hpp"
#include "thermoai/demon/analytic_score.hpp"
#include "thermoai/demon/score_network.hpp"
#include "thermoai/sde/batch.hpp"
#include "thermoai/training/noise_schedule.hpp"

namespace thermoai::apps {

using training::NoiseSchedule;

struct DiffusionSpec {
  NoiseSchedule schedule = NoiseSchedule::vp(0.1, 20.0);
  Eigen::Index dim = 1;
  /// Multiplies g(t) in the forward process; 0 gives the deterministic flow.
  double diffusion_scale = 1.0;
};

/// Forward noising device dx = f(t) x dt + g(t) dW: identity base
/// coefficients, time dependence carried by scalar gates.
inline training::ReverseDevice forward_device(const DiffusionSpec& spec) {
  require(spec.dim > 0, "forward_device: dimension must be positive");
  require(spec.diffusion_scale >= 0.0, "forward_device: diffusion scale must be nonnegative");
  using gates::GateSegment;
  using gates::ScalarFunction;
  using gates::Schedule;
  using gates::Target;
  const auto& s = spec.schedule;
  const Matrix id = Matrix::Identity(spec.dim, spec.dim);
  sde::SDEModel model(id, Vector::Zero(spec.dim), id);
  const double k2 = spec.diffusion_scale * spec.diffusion_scale;
  ScalarFunction drift = ScalarFunction::constant(0.0);
  ScalarFunction diffusion = ScalarFunction::constant(spec.diffusion_scale * s.c0);
  if (s.kind == NoiseSchedule::Kind::VP) {
    const double slope = (s.beta_max - s.beta_min) / s.horizon;
    drift = ScalarFunction::affine(-0.5 * s.beta_min, -0.5 * slope);
    diffusion = ScalarFunction::sqrt_affine(k2 * s.beta_min, k2 * slope);
  }
  const auto n2 = spec.dim * spec.dim;
  gates::GateProgram p;
  p.set(Schedule(Target::DriftSuper, {GateSegment::function_scalar(n2, drift, 0.0, s.horizon)}));
  p.set(Schedule(Target::DiffusionSuper, {GateSegment::function_scalar(n2, diffusion, 0.0, s.horizon)}));
  return {std::move(model), std::move(p), s.horizon};
}

/// States of every sample at the recorded times.
struct DiffusionPaths {
  std::vector<double> times;
  std::vector<Matrix> states;
};

/// Runs the forward SDE from the columns of x0 over [0, T]; column i uses
/// stream i of `seed`. Every `record_stride`-th grid time is kept (plus T).
inline DiffusionPaths diffusion_forward(const DiffusionSpec& spec, const Matrix& x0, double dt, std::uint64_t seed,
                                        std::size_t record_stride = 1) {
  require(x0.rows() == spec.dim && x0.cols() >= 1, "diffusion_forward: x0 must be dim x n");
  require(x0.allFinite(), "diffusion_forward: x0 must be finite");
  require(record_stride >= 1, "diffusion_forward: record_stride must be at least 1");
  const auto dev = forward_device(spec);
  const auto grid = sde::uniform_grid(0.0, dev.horizon, dt);
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(x0.cols()));
  for (Eigen::Index i = 0; i < x0.cols(); ++i) rngs.emplace_back(seed, static_cast<std::uint64_t>(i));
  DiffusionPaths out;
  out.times.push_back(0.0);
  out.states.push_back(x0);
  const std::size_t last = grid.size() - 1;
  sde::integrate_batch(dev.model, dev.program, {}, x0, grid, rngs, [&](std::size_t k, double t, const Matrix& x) {
    if (k % record_stride == 0 || k == last) {
      out.times.push_back(t);
      out.states.push_back(x);
    }
  });
  return out;
}

/// Exact score of the VP/VE marginal p_t when the data law is a Gaussian
/// mixture: component k becomes N(a(t) mu_k, a(t)^2 S_k + sigma(t)^2 I).
class MarginalScoreDemon : public demon::Demon {
 public:
  MarginalScoreDemon(NoiseSchedule schedule, demon::GaussianMixture data)
      : schedule_(schedule), data_(std::move(data)) {}
  MarginalScoreDemon(NoiseSchedule schedule, const demon::Gaussian& data)
      : MarginalScoreDemon(schedule, demon::GaussianMixture({1.0}, {data})) {}

  Eigen::Index input_dim() const override { return data_.dim(); }
  Eigen::Index output_dim() const override { return data_.dim(); }

  demon::GaussianMixture marginal(double t) const {
    const double a = schedule_.mean_scale(t);
    const double v = schedule_.kernel_var(t);
    std::vector<demon::Gaussian> comps;
    comps.reserve(data_.components().size());
    for (const auto& c : data_.components()) {
      const auto n = c.dim();
      comps.emplace_back(a * c.mean(), a * a * c.cov() + v * Matrix::Identity(n, n));
    }
    return demon::GaussianMixture(data_.weights(), std::move(comps));
  }

  Vector output(double t, const Vector& x, const Vector*) override { return marginal(t).score(x); }

  Matrix batch(double t, const Matrix& x) const {
    const auto m = marginal(t);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = m.score(x.col(c));
    return out;
  }

  std::unique_ptr<demon::Demon> clone() const override { return std::make_unique<MarginalScoreDemon>(*this); }

 private:
  NoiseSchedule schedule_;
  demon::GaussianMixture data_;
};

/// Batched form of a score demon in forward time t.
inline sde::BatchDemon batch_score(const demon::Demon& score) {
  if (const auto* net = dynamic_cast<const demon::ScoreNetworkDemon*>(&score)) {
    auto shared = std::make_shared<demon::ScoreNetworkDemon>(*net);
    return [shared](double t, const Matrix& x) {
      return shared->batch_score(Vector::Constant(x.cols(), t), x, nullptr);
    };
  }
  if (const auto* ms = dynamic_cast<const MarginalScoreDemon*>(&score)) {
    auto shared = std::make_shared<MarginalScoreDemon>(*ms);
    return [shared](double t, const Matrix& x) { return shared->batch(t, x); };
  }
  return sde::batch_demon(score);
}

/// Reverse sampler on an explicit device (possibly perturbed), started from
/// the columns of x_start at tau = 0. Column i draws its noise from stream i
/// of `seed`. Returns the samples at tau = T.
inline Matrix diffusion_reverse_from(const training::ReverseDevice& device, const demon::Demon& score, Matrix x_start,
                                     double dt, std::uint64_t seed, std::uint64_t first_stream = 0) {
  const auto dim = device.model.dim();
  require(score.input_dim() == dim && score.output_dim() == dim,
          "diffusion_reverse: score dimension must equal data dimension");
  require(x_start.rows() == dim && x_start.cols() >= 1, "diffusion_reverse: start states must be dim x n");
  const auto grid = sde::uniform_grid(0.0, device.horizon, dt);
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(x_start.cols()));
  for (Eigen::Index i = 0; i < x_start.cols(); ++i) rngs.emplace_back(seed, first_stream + static_cast<std::uint64_t>(i));
  const auto forward_time = batch_score(score);
  const double horizon = device.horizon;
  const sde::BatchDemon reversed = [&](double tau, const Matrix& v) { return forward_time(horizon - tau, v); };
  return sde::integrate_batch(device.model, device.program, reversed, std::move(x_start), grid, rngs);
}

/// Reverse sampler from the noise prior N(0, prior_var I). The prior draws
/// use stream 0 of derive_seed(seed, 1); the paths use streams 0..n-1 of seed.
inline Matrix diffusion_reverse(const training::ReverseDevice& device, const NoiseSchedule& schedule,
                                const demon::Demon& score, std::size_t n_samples, double dt, std::uint64_t seed) {
  require(n_samples >= 1, "diffusion_reverse: need at least one sample");
  const auto dim = device.model.dim();
  Rng prior(derive_seed(seed, 1), 0);
  const double sd = std::sqrt(schedule.prior_var());
  Matrix x(dim, static_cast<Eigen::Index>(n_samples));
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < dim; ++r) x(r, c) = sd * prior.normal();
  return diffusion_reverse_from(device, score, std::move(x), dt, seed);
}

inline Matrix diffusion_reverse(const DiffusionSpec& spec, const demon::Demon& score, std::size_t n_samples, double dt,
                                std::uint64_t seed) {
  return diffusion_reverse(training::reverse_device(spec.schedule, spec.dim), spec.schedule, score, n_samples, dt, seed);
}

}  // namespace thermoai::apps
