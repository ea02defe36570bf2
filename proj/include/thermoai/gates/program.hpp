#pragma once

#include <limits>
#include <optional>

#include "thermoai/gates/schedule.hpp"
#include "thermoai/sde/model.hpp"

namespace thermoai::gates {

/// Software program for an s-mode device: one optional schedule per
/// coefficient. A missing schedule is the identity at all times.
class GateProgram {
 public:
  GateProgram() = default;

  GateProgram& set(Schedule s) {
    auto& slot = slot_for(s.target());
    for (const auto* other : {&drift_, &drift_vec_, &diffusion_, &coupling_}) {
      if (other->has_value() && other != &slot) {
        require(std::abs((*other)->t0() - s.t0()) <= 1e-12 && std::abs((*other)->tf() - s.tf()) <= 1e-12,
                "GateProgram: all schedules must share the same domain");
      }
    }
    slot = std::move(s);
    return *this;
  }

  bool empty() const {
    return !drift_.has_value() && !drift_vec_.has_value() && !diffusion_.has_value() && !coupling_.has_value();
  }

  const std::optional<Schedule>& schedule(Target t) const {
    return const_cast<GateProgram*>(this)->slot_for(t);
  }

  /// Domain shared by all schedules; unbounded for the empty program.
  double t0() const {
    for (const auto* s : {&drift_, &drift_vec_, &diffusion_, &coupling_})
      if (s->has_value()) return (*s)->t0();
    return -std::numeric_limits<double>::infinity();
  }
  double tf() const {
    for (const auto* s : {&drift_, &drift_vec_, &diffusion_, &coupling_})
      if (s->has_value()) return (*s)->tf();
    return std::numeric_limits<double>::infinity();
  }

  /// Throws unless every schedule matches the operator sizes of `model`.
  void check_compatible(const sde::SDEModel& model) const {
    const auto n = model.dim();
    const auto m = model.demon_dim();
    for (Target t : {Target::DriftSuper, Target::DriftVec, Target::DiffusionSuper, Target::DemonCouplingSuper}) {
      const auto& s = schedule(t);
      if (s && s->dim() != target_dim(t, n, m)) {
        throw ContractError(std::string("GateProgram: ") + to_string(t) + " schedule has dimension " +
                            std::to_string(s->dim()) + ", model needs " + std::to_string(target_dim(t, n, m)));
      }
    }
  }

  /// (A(t), b(t), C(t), D(t)) obtained by acting with each schedule on the base model.
  sde::Coefficients apply(const sde::SDEModel& model, double t) const {
    check_compatible(model);
    sde::Coefficients c = sde::Coefficients::of(model);
    apply_in_place(model, t, c);
    return c;
  }

  /// Same as apply() but reuses the storage in `out`; skips the compatibility check.
  void apply_in_place(const sde::SDEModel& model, double t, sde::Coefficients& out) const {
    if (drift_) out.A = drift_->evaluate(t).apply_to_operator(model.A0());
    else out.A = model.A0();
    if (drift_vec_) out.b = drift_vec_->evaluate(t).apply(model.b0());
    else out.b = model.b0();
    if (diffusion_) out.C = diffusion_->evaluate(t).apply_to_operator(model.C0());
    else out.C = model.C0();
    if (coupling_ && model.demon_dim() > 0) out.D = coupling_->evaluate(t).apply_to_operator(model.D0());
    else out.D = model.D0();
  }

 private:
  std::optional<Schedule>& slot_for(Target t) {
    switch (t) {
      case Target::DriftSuper: return drift_;
      case Target::DriftVec: return drift_vec_;
      case Target::DiffusionSuper: return diffusion_;
      case Target::DemonCouplingSuper: return coupling_;
    }
    return drift_;
  }

  std::optional<Schedule> drift_;
  std::optional<Schedule> drift_vec_;
  std::optional<Schedule> diffusion_;
  std::optional<Schedule> coupling_;
};

/// Free-function form of GateProgram::apply.
inline sde::Coefficients apply_program(const GateProgram& program, const sde::SDEModel& model, double t) {
  return program.apply(model, t);
}

inline Operator evaluate_schedule(const Schedule& schedule, double t) { return schedule.evaluate(t); }

}  // namespace thermoai::gates
