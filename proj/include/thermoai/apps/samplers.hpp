#pragma once

#include <cmath>
#include <optional>

#include "thermoai/apps/common.hpp"
#include "thermoai/apps/targets.hpp"
#include "thermoai/demon/force.hpp"
#include "thermoai/sde/integrator.hpp"

namespace thermoai::apps {

struct SghmcOptions {
  /// Initial position and momentum; zero when empty.
  Vector x0;
  Vector p0;
  /// Stochastic-gradient mode: Gaussian noise with this covariance on grad U.
  std::optional<Matrix> gradient_noise_cov;
  double burn_in = kDefaultBurnIn;
  std::size_t thin = 1;
};

/// Host s-mode device for SGHMC: dp = (-B M^{-1} p - grad U(x)) dt + sqrt(2B) dW,
/// with the force supplied by a ForceDemon whose latent is x.
inline sde::SDEModel sghmc_device(const Matrix& mass, const Matrix& friction) {
  const auto n = mass.rows();
  require(mass.cols() == n && friction.rows() == n && friction.cols() == n, "sghmc: M and B must be n x n");
  if (!is_spd(mass)) throw ContractError("sghmc: mass matrix must be SPD");
  if (!is_spd(friction)) throw ContractError("sghmc: friction matrix B must be SPD");
  const Matrix minv = mass.llt().solve(Matrix::Identity(n, n));
  return sde::SDEModel(-friction * minv, Vector::Zero(n), cholesky_factor(2.0 * friction, "sghmc: 2B"),
                       Matrix::Identity(n, n));
}

/// Positions after every step over [0, n_steps dt]; burn-in dropped, then
/// every `thin`-th sample kept.
inline Chain sghmc_sample(const Target& target, const Matrix& mass, const Matrix& friction, std::size_t n_steps,
                          double dt, std::uint64_t seed, const SghmcOptions& opts = {}) {
  require(target != nullptr, "sghmc: target required");
  require(n_steps >= 1 && dt > 0.0, "sghmc: need n_steps >= 1 and dt > 0");
  require(opts.thin >= 1, "sghmc: thin must be at least 1");
  const auto n = target->dim();
  const auto model = sghmc_device(mass, friction);
  require(model.dim() == n, "sghmc: target dimension does not match M");
  const Vector x0 = opts.x0.size() ? opts.x0 : Vector::Zero(n);
  const Vector p0 = opts.p0.size() ? opts.p0 : Vector::Zero(n);
  demon::ForceDemon::Options fo;
  fo.gradient_noise_cov = opts.gradient_noise_cov;
  fo.noise_seed = derive_seed(seed, 1);
  demon::ForceDemon force(target, mass, x0, fo);

  const auto skip = static_cast<std::size_t>(burn_in_count(static_cast<Eigen::Index>(n_steps), opts.burn_in));
  const std::size_t kept = (n_steps - skip + opts.thin - 1) / opts.thin;
  Chain out;
  out.samples.resize(n, static_cast<Eigen::Index>(kept));
  out.times.reserve(kept);
  Eigen::Index col = 0;
  std::vector<double> grid(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) grid[k] = static_cast<double>(k) * dt;
  Rng rng(seed, 0);
  sde::integrate_on_grid(model, {}, &force, p0, grid, rng, [&](std::size_t step, double t, const Vector&, demon::Demon*) {
    const std::size_t i = step - 1;
    if (i >= skip && (i - skip) % opts.thin == 0) {
      out.samples.col(col++) = force.latent();
      out.times.push_back(t);
    }
  });
  return out;
}

/// Step sizes eps_k = a (b + k)^(-gamma), k = 0, 1, ...
struct StepSchedule {
  double a = 1e-2;
  double b = 1.0;
  double gamma = 0.0;

  static StepSchedule constant(double eps) { return {eps, 1.0, 0.0}; }

  double operator()(std::size_t k) const { return a * std::pow(b + static_cast<double>(k), -gamma); }

  void validate() const {
    require(a > 0.0 && gamma >= 0.0, "StepSchedule: need a > 0 and gamma >= 0");
    require(gamma == 0.0 || b > 0.0, "StepSchedule: need b > 0 for a decaying schedule");
  }
};

/// Conjugate Gaussian mean model: x_i ~ N(theta, noise_var I), theta ~
/// N(prior_mean, prior_var I); gradients are estimated from minibatches.
struct ConjugateGaussianModel {
  Matrix data;  // dim x N
  Vector prior_mean;
  double prior_var = 1.0;
  double noise_var = 1.0;
  std::size_t batch_size = 10;

  Eigen::Index dim() const { return data.rows(); }
  std::size_t size() const { return static_cast<std::size_t>(data.cols()); }

  double posterior_var() const { return 1.0 / (1.0 / prior_var + static_cast<double>(size()) / noise_var); }
  Vector posterior_mean() const {
    return posterior_var() * (prior_mean / prior_var + data.rowwise().sum() / noise_var);
  }

  /// grad log p(theta) + (N / n) sum_{i in batch} grad log p(x_i | theta).
  Vector grad_log_posterior(const Vector& theta, Rng& rng) const {
    const std::size_t n = std::min(batch_size, size());
    Vector lik = Vector::Zero(dim());
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(rng.uniform_index(size()));
      lik += (data.col(i) - theta) / noise_var;
    }
    return -(theta - prior_mean) / prior_var + (static_cast<double>(size()) / static_cast<double>(n)) * lik;
  }

  void validate() const {
    require(data.cols() >= 1 && prior_mean.size() == data.rows(), "ConjugateGaussianModel: shape mismatch");
    require(prior_var > 0.0 && noise_var > 0.0 && batch_size >= 1, "ConjugateGaussianModel: bad parameters");
  }
};

struct SgldOptions {
  Vector x0;
  double burn_in = kDefaultBurnIn;
  std::size_t thin = 1;
};

using GradLogDensity = std::function<Vector(const Vector&, Rng&)>;

/// theta <- theta + eps_k / 2 * grad log p(theta) + N(0, eps_k I)
inline Chain sgld_chain(Eigen::Index dim, const GradLogDensity& grad, const StepSchedule& eps, std::size_t n_steps,
                        std::uint64_t seed, const SgldOptions& opts = {}) {
  eps.validate();
  require(n_steps >= 1 && opts.thin >= 1, "sgld: need n_steps >= 1 and thin >= 1");
  Vector x = opts.x0.size() ? opts.x0 : Vector::Zero(dim);
  require(x.size() == dim, "sgld: x0 dimension mismatch");
  Rng noise(seed, 0);
  Rng batch(seed, 1);
  const auto skip = static_cast<std::size_t>(burn_in_count(static_cast<Eigen::Index>(n_steps), opts.burn_in));
  Chain out;
  out.samples.resize(dim, static_cast<Eigen::Index>((n_steps - skip + opts.thin - 1) / opts.thin));
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double e = eps(k);
    const Vector g = grad(x, batch);
    x += 0.5 * e * g;
    const double sd = std::sqrt(e);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) += sd * noise.normal();
    sde::detail::check_state(static_cast<double>(k + 1), x);
    if (k >= skip && (k - skip) % opts.thin == 0) {
      out.samples.col(col++) = x;
      out.times.push_back(static_cast<double>(k + 1));
    }
  }
  return out;
}

inline Chain sgld_sample(const Target& target, const StepSchedule& eps, std::size_t n_steps, std::uint64_t seed,
                         const SgldOptions& opts = {}) {
  require(target != nullptr, "sgld: target required");
  return sgld_chain(target->dim(), [&](const Vector& x, Rng&) { return Vector(-target->gradient(0.0, x)); }, eps,
                    n_steps, seed, opts);
}

inline Chain sgld_sample(const ConjugateGaussianModel& model, const StepSchedule& eps, std::size_t n_steps,
                         std::uint64_t seed, const SgldOptions& opts = {}) {
  model.validate();
  return sgld_chain(model.dim(), [&](const Vector& x, Rng& r) { return model.grad_log_posterior(x, r); }, eps,
                    n_steps, seed, opts);
}

struct HmcOptions {
  Vector x0;
  double burn_in = kDefaultBurnIn;
};

/// H(x, p) = U(x) + p^T M^{-1} p / 2.
inline double hamiltonian(const demon::Potential& u, const Eigen::LLT<Matrix>& mass, const Vector& x, const Vector& p) {
  return u.value(0.0, x) + 0.5 * p.dot(mass.solve(p));
}

/// Metropolis-corrected leapfrog HMC with fresh momentum p ~ N(0, M) each
/// iteration. Rejected proposals repeat the current state.
inline Chain hmc_sample(const Target& target, const Matrix& mass, std::size_t leapfrog_steps, double step,
                        std::size_t n_iter, std::uint64_t seed, const HmcOptions& opts = {}) {
  require(target != nullptr, "hmc: target required");
  if (leapfrog_steps < 1) throw ContractError("hmc: need at least one leapfrog step (L = 0 proposes the current state)");
  require(step > 0.0 && n_iter >= 1, "hmc: need step > 0 and n_iter >= 1");
  const auto n = target->dim();
  require(mass.rows() == n && mass.cols() == n, "hmc: mass shape mismatch");
  if (!is_spd(mass)) throw ContractError("hmc: mass matrix must be SPD");
  const Eigen::LLT<Matrix> llt(mass);
  const Matrix lower = llt.matrixL();
  Vector x = opts.x0.size() ? opts.x0 : Vector::Zero(n);
  require(x.size() == n, "hmc: x0 dimension mismatch");
  Rng rng(seed, 0);
  const auto skip = static_cast<std::size_t>(burn_in_count(static_cast<Eigen::Index>(n_iter), opts.burn_in));
  Chain out;
  out.samples.resize(n, static_cast<Eigen::Index>(n_iter - skip));
  std::size_t accepted = 0;
  Vector z(n);
  for (std::size_t it = 0; it < n_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    const Vector p0 = lower * z;
    Vector xp = x;
    Vector p = p0 - 0.5 * step * target->gradient(0.0, xp);
    for (std::size_t l = 0; l < leapfrog_steps; ++l) {
      xp += step * llt.solve(p);
      if (l + 1 < leapfrog_steps) p -= step * target->gradient(0.0, xp);
    }
    p -= 0.5 * step * target->gradient(0.0, xp);
    const double h0 = hamiltonian(*target, llt, x, p0);
    const double h1 = hamiltonian(*target, llt, xp, p);
    const double u = rng.uniform();
    if (std::isfinite(h1) && std::log(u) < h0 - h1) {
      x = xp;
      ++accepted;
    }
    if (it >= skip) {
      out.samples.col(static_cast<Eigen::Index>(it - skip)) = x;
      out.times.push_back(static_cast<double>(it + 1));
    }
  }
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(n_iter);
  return out;
}

}  // namespace thermoai::apps
