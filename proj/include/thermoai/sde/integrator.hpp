#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/rng.hpp"
#include "thermoai/demon/demon.hpp"
#include "thermoai/gates/program.hpp"
#include "thermoai/sde/model.hpp"

namespace thermoai::sde {

/// States with any |v_i| above this abort the trajectory.
inline constexpr double kDivergenceBound = 1e12;

/// Seed plus stream index for the counter-based generator.
struct SeedSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  SeedSpec(std::uint64_t s = 0, std::uint64_t st = 0) : seed(s), stream(st) {}  // NOLINT(implicit)
};

namespace detail {

inline void check_coefficients(const SDEModel& model, const Coefficients& c) {
  const auto n = model.dim();
  const auto m = model.demon_dim();
  require(c.A.rows() == n && c.A.cols() == n, "coefficients: A must be N x N");
  require(c.b.size() == n, "coefficients: b must have N entries");
  require(c.C.rows() == n && c.C.cols() == n, "coefficients: C must be N x N");
  require(c.D.rows() == n && c.D.cols() == m, "coefficients: D must be N x M");
}

inline void check_state(double t, const Eigen::Ref<const Vector>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || std::abs(v(i)) > kDivergenceBound) {
      throw DivergenceError(t, "component " + std::to_string(i + 1) + " = " + std::to_string(v(i)));
    }
  }
}

}  // namespace detail

/// One Euler-Maruyama step:
///   v' = v + (A v + b + D d) dt + C (sqrt(dt) * noise).
/// An empty demon_drift is read as d = 0.
inline StateVector euler_maruyama_step(const SDEModel& model, const Coefficients& coeffs, const Vector& demon_drift,
                                       const StateVector& state, double dt, const Vector& noise) {
  require(dt > 0.0, "euler_maruyama_step: dt must be positive");
  detail::check_coefficients(model, coeffs);
  require(state.v.size() == model.dim(), "euler_maruyama_step: state dimension mismatch");
  require(noise.size() == model.dim(), "euler_maruyama_step: noise dimension mismatch");
  require(demon_drift.size() == 0 || demon_drift.size() == model.demon_dim(),
          "euler_maruyama_step: demon drift dimension mismatch");
  Vector drift = coeffs.A * state.v + coeffs.b;
  if (demon_drift.size() > 0) drift.noalias() += coeffs.D * demon_drift;
  StateVector out{state.t + dt, state.v + drift * dt + coeffs.C * (std::sqrt(dt) * noise)};
  detail::check_state(out.t, out.v);
  return out;
}

/// Uniform grid t0, t0 + dt, ..., tf; dt must divide (tf - t0) within rounding.
inline std::vector<double> uniform_grid(double t0, double tf, double dt) {
  require(dt > 0.0, "time grid: dt must be positive");
  require(tf > t0, "time grid: need tf > t0");
  const double span = tf - t0;
  require(dt <= span * (1.0 + 1e-12), "time grid: dt larger than the horizon");
  const double steps = std::round(span / dt);
  require(std::abs(steps * dt - span) <= 1e-9 * std::max(1.0, span),
          "time grid: dt does not divide the horizon");
  const auto n = static_cast<std::size_t>(steps);
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k < n; ++k) grid[k] = t0 + static_cast<double>(k) * dt;
  grid[n] = tf;
  return grid;
}

/// Called after every completed step with the new time, state and the demon.
using StepObserver = std::function<void(std::size_t step, double t, const Vector& v, demon::Demon* demon)>;

/// Integrates the programmed, demon-augmented SDE over an arbitrary
/// increasing grid. The demon (if any) is used in place; clone it first when
/// it must not be mutated.
inline void integrate_on_grid(const SDEModel& model, const gates::GateProgram& program, demon::Demon* demon,
                              const Vector& v0, std::span<const double> grid, Rng& rng,
                              const StepObserver& observer) {
  const auto n = model.dim();
  const auto m = model.demon_dim();
  require(v0.size() == n, "initial state dimension mismatch");
  require(grid.size() >= 2, "time grid needs at least two points");
  detail::check_state(grid.front(), v0);
  if (!program.empty()) {
    program.check_compatible(model);
    const double tol = 1e-12 * std::max(1.0, std::abs(grid.back()));
    require(grid.front() >= program.t0() - tol && grid.back() <= program.tf() + tol,
            "gate program does not cover the integration horizon");
  }
  if (demon != nullptr) {
    require(demon->input_dim() == n, "demon input dimension does not match the model");
    require(demon->output_dim() == m,
            "demon output dimension " + std::to_string(demon->output_dim()) + " does not match coupling width " +
                std::to_string(m));
  }

  Coefficients coeffs = Coefficients::of(model);
  Vector v = v0;
  Vector next(n);
  Vector drift(n);
  Vector noise(n);
  Vector dvdt = Vector::Zero(n);
  Vector d;

  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const double dt = grid[k + 1] - t;
    require(dt > 0.0, "time grid must be strictly increasing");
    if (!program.empty()) program.apply_in_place(model, t, coeffs);

    drift.noalias() = coeffs.A * v;
    drift += coeffs.b;
    if (demon != nullptr) {
      d = demon->output(t, v, &dvdt);
      if (d.size() != m) throw ContractError("demon returned " + std::to_string(d.size()) + " entries, expected " + std::to_string(m));
      if (!d.allFinite()) throw DivergenceError(t, "demon output is not finite");
      drift.noalias() += coeffs.D * d;
    }
    for (Eigen::Index i = 0; i < n; ++i) noise(i) = rng.normal();
    const double sq = std::sqrt(dt);
    next = v;
    next += dt * drift;
    next.noalias() += coeffs.C * (sq * noise);
    detail::check_state(grid[k + 1], next);
    if (demon != nullptr) {
      dvdt = (next - v) / dt;
      demon->advance(t, v, dvdt, dt);
    }
    v.swap(next);
    if (observer) observer(k + 1, grid[k + 1], v, demon);
  }
}

/// Single trajectory on the uniform grid; deterministic in (seed, dt).
inline Trajectory simulate_trajectory(const SDEModel& model, const gates::GateProgram& program, demon::Demon* demon,
                                      const Vector& v0, double t0, double tf, double dt, SeedSpec seed,
                                      const StepObserver& observer = {}) {
  const auto grid = uniform_grid(t0, tf, dt);
  Rng rng(seed.seed, seed.stream);
  Trajectory traj;
  traj.reserve(grid.size());
  traj.push_back({grid.front(), v0});
  integrate_on_grid(model, program, demon, v0, grid, rng,
                    [&](std::size_t step, double t, const Vector& v, demon::Demon* dm) {
                      traj.push_back({t, v});
                      if (observer) observer(step, t, v, dm);
                    });
  return traj;
}

/// Demon evaluated on a whole batch: (t, X) -> M x n drift matrix. Only
/// stateless demons can be batched.
using BatchDemon = std::function<Matrix(double t, const Matrix& X)>;

using BatchObserver = std::function<void(std::size_t step, double t, const Matrix& X)>;

/// Wraps a stateless demon column by column.
inline BatchDemon batch_demon(const demon::Demon& d) {
  require(!d.stateful() && !d.needs_derivative(), "batch_demon: demon must be stateless and derivative-free");
  std::shared_ptr<demon::Demon> shared(d.clone());
  return [shared](double t, const Matrix& x) {
    Matrix out(shared->output_dim(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = shared->output(t, x.col(c), nullptr);
    return out;
  };
}

/// Euler-Maruyama on n columns at once. Column c draws its noise from
/// rngs[c], so it follows the same path integrate_on_grid would produce with
/// that generator (up to floating-point summation order).
inline Matrix integrate_batch(const SDEModel& model, const gates::GateProgram& program, const BatchDemon& demon,
                              Matrix x, std::span<const double> grid, std::vector<Rng>& rngs,
                              const BatchObserver& observer = {}) {
  const auto n = model.dim();
  const auto m = model.demon_dim();
  require(x.rows() == n, "integrate_batch: state dimension mismatch");
  require(static_cast<std::size_t>(x.cols()) == rngs.size(), "integrate_batch: one generator per column");
  require(grid.size() >= 2, "time grid needs at least two points");
  for (Eigen::Index c = 0; c < x.cols(); ++c) detail::check_state(grid.front(), x.col(c));
  if (!program.empty()) {
    program.check_compatible(model);
    const double tol = 1e-12 * std::max(1.0, std::abs(grid.back()));
    require(grid.front() >= program.t0() - tol && grid.back() <= program.tf() + tol,
            "gate program does not cover the integration horizon");
  }
  Coefficients co = Coefficients::of(model);
  Matrix z(n, x.cols());
  Matrix next;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const double dt = grid[k + 1] - t;
    require(dt > 0.0, "time grid must be strictly increasing");
    if (!program.empty()) program.apply_in_place(model, t, co);
    next.noalias() = co.A * x;
    next.colwise() += co.b;
    if (demon && m > 0) {
      const Matrix d = demon(t, x);
      if (d.rows() != m || d.cols() != x.cols()) throw ContractError("batch demon returned the wrong shape");
      if (!d.allFinite()) throw DivergenceError(t, "demon output is not finite");
      next.noalias() += co.D * d;
    }
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index i = 0; i < n; ++i) z(i, c) = rngs[static_cast<std::size_t>(c)].normal();
    next *= dt;
    next += x;
    next.noalias() += co.C * (std::sqrt(dt) * z);
    for (Eigen::Index c = 0; c < x.cols(); ++c) detail::check_state(grid[k + 1], next.col(c));
    x.swap(next);
    if (observer) observer(k + 1, grid[k + 1], x);
  }
  return x;
}

/// Running mean and co-moment (Welford / Chan) for one time point.
struct MomentAccumulator {
  double count = 0.0;
  Vector mean;
  Matrix m2;

  void add(const Vector& x) {
    if (count == 0.0) {
      mean = Vector::Zero(x.size());
      m2 = Matrix::Zero(x.size(), x.size());
    }
    count += 1.0;
    const Vector delta = x - mean;
    mean += delta / count;
    m2.noalias() += delta * (x - mean).transpose();
  }

  void merge(const MomentAccumulator& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const Vector delta = o.mean - mean;
    mean += delta * (o.count / total);
    m2 += o.m2 + delta * delta.transpose() * (count * o.count / total);
    count = total;
  }

  Matrix covariance() const {
    if (count < 2.0) return Matrix::Zero(mean.size(), mean.size());
    Matrix c = m2 / (count - 1.0);
    return 0.5 * (c + c.transpose());
  }
};

struct EnsembleOptions {
  /// Summary kept at every `record_stride`-th grid time (plus t0 and tf).
  std::size_t record_stride = 1;
  unsigned threads = 1;
  /// Trajectories per reduction block; the reduction order is fixed, so
  /// results do not depend on the thread count.
  std::size_t block_size = 64;
};

using InitialSampler = std::function<Vector(Rng&)>;

/// Runs n_traj independent trajectories; trajectory i draws from stream i of
/// base_seed (initial state first, then the noise).
inline EnsembleSummary simulate_ensemble(const SDEModel& model, const gates::GateProgram& program,
                                         const demon::Demon* prototype, const InitialSampler& initial_sampler,
                                         double t0, double tf, double dt, std::size_t n_traj,
                                         std::uint64_t base_seed, const EnsembleOptions& opts = {}) {
  require(n_traj >= 1, "simulate_ensemble: n_traj must be at least 1");
  require(opts.record_stride >= 1, "simulate_ensemble: record_stride must be at least 1");
  require(static_cast<bool>(initial_sampler), "simulate_ensemble: initial sampler required");
  const auto grid = uniform_grid(t0, tf, dt);
  const std::size_t last = grid.size() - 1;

  std::vector<std::size_t> slot_of_step(grid.size(), SIZE_MAX);
  std::vector<double> rec_times;
  for (std::size_t k = 0; k <= last; ++k) {
    if (k % opts.record_stride == 0 || k == last) {
      slot_of_step[k] = rec_times.size();
      rec_times.push_back(grid[k]);
    }
  }

  const std::size_t block = std::max<std::size_t>(1, opts.block_size);
  const std::size_t n_blocks = (n_traj + block - 1) / block;

  std::vector<MomentAccumulator> total(rec_times.size());
  std::map<std::size_t, std::vector<MomentAccumulator>> pending;
  std::size_t next_to_merge = 0;
  std::mutex mu;
  std::atomic<std::size_t> next_block{0};
  std::optional<std::size_t> failed_traj;
  std::exception_ptr failure;

  auto run_block = [&](std::size_t b) {
    std::vector<MomentAccumulator> acc(rec_times.size());
    const std::size_t begin = b * block;
    const std::size_t end = std::min(n_traj, begin + block);
    if (prototype == nullptr) {
      // Whole block in one batch; on failure rerun one by one to name the trajectory.
      try {
        std::vector<Rng> rngs;
        Matrix x(model.dim(), static_cast<Eigen::Index>(end - begin));
        for (std::size_t i = begin; i < end; ++i) {
          rngs.emplace_back(base_seed, i);
          const Vector v0 = initial_sampler(rngs.back());
          require(v0.size() == model.dim(), "initial state dimension mismatch");
          x.col(static_cast<Eigen::Index>(i - begin)) = v0;
          acc[0].add(v0);
        }
        integrate_batch(model, program, {}, std::move(x), grid, rngs, [&](std::size_t step, double, const Matrix& xs) {
          const std::size_t slot = slot_of_step[step];
          if (slot != SIZE_MAX)
            for (Eigen::Index c = 0; c < xs.cols(); ++c) acc[slot].add(xs.col(c));
        });
        return acc;
      } catch (const std::exception&) {
        acc.assign(rec_times.size(), MomentAccumulator{});
      }
    }
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(base_seed, i);
      std::unique_ptr<demon::Demon> dm = prototype != nullptr ? prototype->clone() : nullptr;
      if (dm) dm->set_stream(i);
      try {
        const Vector v0 = initial_sampler(rng);
        acc[0].add(v0);
        integrate_on_grid(model, program, dm.get(), v0, grid, rng,
                          [&](std::size_t step, double, const Vector& v, demon::Demon*) {
                            const std::size_t slot = slot_of_step[step];
                            if (slot != SIZE_MAX) acc[slot].add(v);
                          });
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.time(), "trajectory " + std::to_string(i) + ": " + e.what());
      } catch (const ContractError& e) {
        throw ContractError("trajectory " + std::to_string(i) + ": " + e.what());
      }
    }
    return acc;
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      try {
        auto acc = run_block(b);
        std::lock_guard<std::mutex> lock(mu);
        pending.emplace(b, std::move(acc));
        while (!pending.empty() && pending.begin()->first == next_to_merge) {
          auto& part = pending.begin()->second;
          for (std::size_t s = 0; s < total.size(); ++s) total[s].merge(part[s]);
          pending.erase(pending.begin());
          ++next_to_merge;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failed_traj || b * block < *failed_traj) {
          failed_traj = b * block;
          failure = std::current_exception();
        }
        return;
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(n_blocks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleSummary out;
  out.n_traj = n_traj;
  out.times = std::move(rec_times);
  out.mean.reserve(total.size());
  out.cov.reserve(total.size());
  for (const auto& a : total) {
    out.mean.push_back(a.mean);
    out.cov.push_back(a.covariance());
  }
  return out;
}

/// Gaussian moment flow  mu' = A mu + b,  Sigma' = A Sigma + Sigma A^T + C C^T,
/// integrated with classical RK4 on the same uniform grid as the sampler.
inline std::vector<GaussianMoments> propagate_moments(const SDEModel& model, const gates::GateProgram& program,
                                                      const Vector& mu0, const Matrix& cov0, double t0, double tf,
                                                      double dt) {
  const auto n = model.dim();
  require(mu0.size() == n, "propagate_moments: mean dimension mismatch");
  require(cov0.rows() == n && cov0.cols() == n, "propagate_moments: covariance shape mismatch");
  require(symmetry_defect(cov0) <= 1e-10, "propagate_moments: cov0 must be symmetric");
  require(min_symmetric_eigenvalue(cov0) >= -1e-9, "propagate_moments: cov0 must be PSD");
  if (!program.empty()) program.check_compatible(model);
  const auto grid = uniform_grid(t0, tf, dt);

  auto coeffs_at = [&](double t) { return program.empty() ? Coefficients::of(model) : program.apply(model, t); };
  auto rhs = [](const Coefficients& c, const Vector& mu, const Matrix& s, Vector& dmu, Matrix& ds) {
    dmu = c.A * mu + c.b;
    ds = c.A * s + s * c.A.transpose() + c.C * c.C.transpose();
  };

  std::vector<GaussianMoments> out;
  out.reserve(grid.size());
  Vector mu = mu0;
  Matrix cov = 0.5 * (cov0 + cov0.transpose());
  out.push_back({grid.front(), mu, cov});
  Vector k1m, k2m, k3m, k4m;
  Matrix k1s, k2s, k3s, k4s;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const double h = grid[k + 1] - t;
    const Coefficients c1 = coeffs_at(t);
    const Coefficients c2 = coeffs_at(t + 0.5 * h);
    const Coefficients c4 = coeffs_at(grid[k + 1]);
    rhs(c1, mu, cov, k1m, k1s);
    rhs(c2, mu + 0.5 * h * k1m, cov + 0.5 * h * k1s, k2m, k2s);
    rhs(c2, mu + 0.5 * h * k2m, cov + 0.5 * h * k2s, k3m, k3s);
    rhs(c4, mu + h * k3m, cov + h * k3s, k4m, k4s);
    mu += (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    cov += (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    cov = 0.5 * (cov + cov.transpose());
    out.push_back({grid[k + 1], mu, cov});
  }
  return out;
}

/// Sample average of f over the samples.
template <typename F>
double monte_carlo_expectation(std::span<const Vector> samples, F&& f) {
  require(!samples.empty(), "monte_carlo_expectation: no samples");
  double sum = 0.0;
  for (const auto& x : samples) sum += static_cast<double>(f(x));
  return sum / static_cast<double>(samples.size());
}

}  // namespace thermoai::sde
