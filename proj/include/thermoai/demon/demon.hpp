#pragma once

#include <cstdint>
#include <memory>

#include "thermoai/core/linalg.hpp"

namespace thermoai::demon {

/// Maxwell's-demon device: observes (t, v, optionally dv/dt) and returns the
/// drift vector d injected through the coupling matrix D(t).
///
/// Stateful demons (internal d, latent position) must be cloned per
/// trajectory; the integrator calls output() at the start of every step and
/// advance() once the step's increment is known.
class Demon {
 public:
  virtual ~Demon() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index output_dim() const = 0;

  virtual bool needs_derivative() const { return false; }
  virtual bool stateful() const { return false; }

  virtual Vector output(double t, const Vector& v, const Vector* dv_dt) = 0;

  /// Internal state update over [t, t + dt] with the observed path slope.
  virtual void advance(double /*t*/, const Vector& /*v*/, const Vector& /*dv_dt*/, double /*dt*/) {}

  /// Restores the initial internal state.
  virtual void reset() {}

  /// Selects an independent noise stream for demons with internal randomness.
  virtual void set_stream(std::uint64_t /*stream*/) {}

  virtual std::unique_ptr<Demon> clone() const = 0;
};

/// Free-function form of Demon::output.
inline Vector demon_output(Demon& d, double t, const Vector& v, const Vector* dv_dt = nullptr) {
  return d.output(t, v, dv_dt);
}

}  // namespace thermoai::demon
