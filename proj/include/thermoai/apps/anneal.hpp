#pragma once

#include <limits>

#include "thermoai/apps/common.hpp"
#include "thermoai/apps/targets.hpp"
#include "thermoai/demon/force.hpp"
#include "thermoai/sde/integrator.hpp"

namespace thermoai::apps {

struct AnnealOptions {
  Vector x0;
  Vector p0;
  /// Inverse temperature: the dynamics see lambda(t) * L.
  gates::ScalarFunction lambda = gates::ScalarFunction::constant(1.0);
  std::size_t record_stride = 1;
};

struct AnnealResult {
  Vector best_x;
  double best_value = std::numeric_limits<double>::infinity();
  Chain chain;
};

/// Auxiliary momentum device: dp = (-1/2 S S^T p - lambda grad L(x)) dt + S dW,
/// with x the ForceDemon latent (dx = p dt, unit mass).
inline sde::SDEModel anneal_device(const Matrix& s) {
  const auto n = s.rows();
  require(s.cols() == n && n > 0, "anneal: S must be square");
  require(s.allFinite(), "anneal: S must be finite");
  if (!s.isLowerTriangular(0.0)) throw ContractError("anneal: S must be lower-triangular");
  return sde::SDEModel(-0.5 * s * s.transpose(), Vector::Zero(n), s, Matrix::Identity(n, n));
}

/// Runs n_steps of the annealing SDE and tracks the lowest L seen (unscaled).
inline AnnealResult anneal(const Target& loss, const Matrix& s, std::size_t n_steps, double dt, std::uint64_t seed,
                           const AnnealOptions& opts = {}) {
  require(loss != nullptr, "anneal: loss required");
  require(n_steps >= 1 && dt > 0.0 && opts.record_stride >= 1, "anneal: need n_steps >= 1, dt > 0, stride >= 1");
  const auto n = loss->dim();
  const auto model = anneal_device(s);
  require(model.dim() == n, "anneal: S dimension does not match the loss");
  const Vector x0 = opts.x0.size() ? opts.x0 : Vector::Zero(n);
  const Vector p0 = opts.p0.size() ? opts.p0 : Vector::Zero(n);
  auto scaled = std::make_shared<demon::ScaledPotential>(opts.lambda, loss);
  demon::ForceDemon force(scaled, Matrix::Identity(n, n), x0);

  AnnealResult out;
  out.best_x = x0;
  out.best_value = loss->value(0.0, x0);
  out.chain.samples.resize(n, static_cast<Eigen::Index>(n_steps / opts.record_stride));
  Eigen::Index col = 0;
  std::vector<double> grid(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) grid[k] = static_cast<double>(k) * dt;
  Rng rng(seed, 0);
  sde::integrate_on_grid(model, {}, &force, p0, grid, rng, [&](std::size_t step, double t, const Vector&, demon::Demon*) {
    const Vector& x = force.latent();
    const double l = loss->value(t, x);
    if (l < out.best_value) {
      out.best_value = l;
      out.best_x = x;
    }
    if (step % opts.record_stride == 0) {
      out.chain.samples.col(col++) = x;
      out.chain.times.push_back(t);
    }
  });
  return out;
}

}  // namespace thermoai::apps
