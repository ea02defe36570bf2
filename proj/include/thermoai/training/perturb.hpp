#pragma once

#include <string>

#include "thermoai/core/rng.hpp"
#include "thermoai/sde/model.hpp"

namespace thermoai::training {

/// Hardware error model: additive X + eps N(0,1) or multiplicative
/// X .* (1 + eps N(0,1)) entrywise, per target.
struct PerturbationSpec {
  enum class Mode { Additive, Multiplicative };
  Mode mode = Mode::Multiplicative;
  double eps_a = 0.0;
  double eps_b = 0.0;
  double eps_c = 0.0;
  std::uint64_t seed = 0;
};

inline std::string to_string(PerturbationSpec::Mode m) {
  return m == PerturbationSpec::Mode::Additive ? "additive" : "multiplicative";
}

namespace detail {

template <class Derived>
void perturb_entries(Eigen::MatrixBase<Derived>& x, PerturbationSpec::Mode mode, double eps, Rng rng) {
  if (eps == 0.0) return;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double xi = rng.normal();
      if (mode == PerturbationSpec::Mode::Additive) x(i, j) += eps * xi;
      else x(i, j) *= 1.0 + eps * xi;
    }
}

}  // namespace detail

/// Each target draws from its own stream, so perturbing one target never
/// changes the draws seen by another.
inline sde::SDEModel perturb_model(const sde::SDEModel& model, const PerturbationSpec& spec) {
  require(spec.eps_a >= 0.0 && spec.eps_b >= 0.0 && spec.eps_c >= 0.0, "perturb_model: magnitudes must be nonnegative");
  Matrix a = model.A0();
  Vector b = model.b0();
  Matrix c = model.C0();
  detail::perturb_entries(a, spec.mode, spec.eps_a, Rng(spec.seed, 0));
  detail::perturb_entries(b, spec.mode, spec.eps_b, Rng(spec.seed, 1));
  detail::perturb_entries(c, spec.mode, spec.eps_c, Rng(spec.seed, 2));
  return sde::SDEModel(a, b, c, model.D0());
}

}  // namespace thermoai::training
