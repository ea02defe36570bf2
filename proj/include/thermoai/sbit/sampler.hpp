#pragma once

#include "thermoai/sde/integrator.hpp"
#include "thermoai/sbit/system.hpp"

namespace thermoai::sbit {

/// Coupled CTMC sampler: one thinned clock per enabled transition, earliest
/// wins, ties go to the lowest transition index. Clocks are redrawn after
/// every jump.
inline SBitTrajectory sample_coupled_trajectory(const SBitSystem& system, State x0, double horizon,
                                                sde::SeedSpec seed, double t0 = 0.0) {
  require(std::isfinite(horizon) && horizon > t0, "sample_coupled_trajectory: need a finite horizon T > t0");
  require(system.valid_state(x0), "sample_coupled_trajectory: x0 outside the state space");
  for (const auto& tr : system.transitions())
    if (!tr.rate.covers(t0, horizon))
      throw ContractError("sample_coupled_trajectory: schedule for '" + tr.label + "' does not cover [t0, T]");
  Rng rng(seed.seed, seed.stream);
  SBitTrajectory out{system.n_bits(), x0, t0, horizon, {}};
  State x = x0;
  double t = t0;
  const auto& trs = system.transitions();
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t winner = trs.size();
    for (std::size_t k = 0; k < trs.size(); ++k) {
      if (!trs[k].enabled(x)) continue;
      const double tk = next_event(trs[k].rate, t, horizon, rng);
      if (tk < best) {
        best = tk;
        winner = k;
      }
    }
    if (winner == trs.size() || best >= horizon) break;
    x = system.fire(winner, x);
    t = best;
    out.jumps.emplace_back(t, x);
  }
  return out;
}

/// Single s-bit with rate lambda0 out of state 0 and lambda1 out of state 1.
/// Shares the clock protocol of the coupled sampler, so a one-bit system with
/// the same schedules reproduces it draw for draw.
inline SBitTrajectory sample_sbit_trajectory(const RateSchedule& lambda0, const RateSchedule& lambda1, int x0,
                                             double horizon, sde::SeedSpec seed, double t0 = 0.0) {
  require(x0 == 0 || x0 == 1, "sample_sbit_trajectory: x0 must be 0 or 1");
  require(std::isfinite(horizon) && horizon > t0, "sample_sbit_trajectory: need a finite horizon T > t0");
  require(lambda0.covers(t0, horizon) && lambda1.covers(t0, horizon),
          "sample_sbit_trajectory: schedule domain shorter than [t0, T]");
  Rng rng(seed.seed, seed.stream);
  SBitTrajectory out{1, static_cast<State>(x0), t0, horizon, {}};
  State x = static_cast<State>(x0);
  double t = t0;
  for (;;) {
    const double tn = next_event(x == 0 ? lambda0 : lambda1, t, horizon, rng);
    if (tn >= horizon) break;
    x ^= 1u;
    t = tn;
    out.jumps.emplace_back(t, x);
  }
  return out;
}

}  // namespace thermoai::sbit
