#pragma once

#include <algorithm>
#include <vector>

#include "thermoai/apps/common.hpp"
#include "thermoai/sde/integrator.hpp"

namespace thermoai::apps {

struct LatentRollout {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> readouts;
};

/// Uniform grid of spacing dt from t0 with the checkpoints inserted; points
/// closer than 1e-9 dt to a checkpoint are dropped in its favor.
inline std::vector<double> grid_through(double t0, const std::vector<double>& checkpoints, double dt) {
  require(dt > 0.0, "grid_through: dt must be positive");
  const double tol = 1e-9 * dt;
  std::vector<double> grid{t0};
  std::size_t c = 0;
  while (c < checkpoints.size() && checkpoints[c] <= t0 + tol) ++c;
  for (std::size_t k = 1; c < checkpoints.size(); ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (c < checkpoints.size() && checkpoints[c] <= t + tol) grid.push_back(checkpoints[c++]);
    if (c < checkpoints.size() && t > grid.back() + tol) grid.push_back(t);
  }
  return grid;
}

/// Latent-SDE decoder rollout: starts at the encoder output h0 at t0,
/// integrates the programmed (and demon-augmented) device, and reads out
/// readout * h(t_k) at each checkpoint. An empty readout is the identity.
inline LatentRollout latent_sde_rollout(const sde::SDEModel& model, const gates::GateProgram& program,
                                        const demon::Demon* demon, const Vector& h0, double t0, double horizon,
                                        const std::vector<double>& checkpoints, double dt, sde::SeedSpec seed,
                                        const Matrix& readout = {}) {
  require(!checkpoints.empty(), "latent_sde_rollout: need at least one checkpoint");
  require(horizon >= t0, "latent_sde_rollout: horizon before t0");
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] < t0 || checkpoints[k] > horizon)
      throw ContractError("latent_sde_rollout: checkpoint " + std::to_string(checkpoints[k]) + " outside [" +
                          std::to_string(t0) + ", " + std::to_string(horizon) + "]");
    require(k == 0 || checkpoints[k] > checkpoints[k - 1], "latent_sde_rollout: checkpoints must increase");
  }
  require(readout.size() == 0 || readout.cols() == model.dim(), "latent_sde_rollout: readout has the wrong width");
  auto read = [&](const Vector& v) { return readout.size() ? Vector(readout * v) : v; };

  LatentRollout out;
  std::size_t next = 0;
  auto record = [&](double t, const Vector& v) {
    while (next < checkpoints.size() && checkpoints[next] == t) {
      out.times.push_back(t);
      out.states.push_back(v);
      out.readouts.push_back(read(v));
      ++next;
    }
  };
  record(t0, h0);
  if (next == checkpoints.size()) return out;
  const auto grid = grid_through(t0, checkpoints, dt);
  std::unique_ptr<demon::Demon> dm = demon ? demon->clone() : nullptr;
  if (dm) dm->set_stream(seed.stream);
  Rng rng(seed.seed, seed.stream);
  sde::integrate_on_grid(model, program, dm.get(), h0, grid, rng,
                         [&](std::size_t, double t, const Vector& v, demon::Demon*) { record(t, v); });
  require(next == checkpoints.size(), "latent_sde_rollout: internal grid missed a checkpoint");
  return out;
}

}  // namespace thermoai::apps
