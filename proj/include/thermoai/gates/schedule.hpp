#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermoai/gates/operator.hpp"

namespace thermoai::gates {

/// Which coefficient of the s-mode SDE a schedule programs.
enum class Target { DriftSuper, DriftVec, DiffusionSuper, DemonCouplingSuper };

inline const char* to_string(Target t) {
  switch (t) {
    case Target::DriftSuper: return "drift_super";
    case Target::DriftVec: return "drift_vec";
    case Target::DiffusionSuper: return "diffusion_super";
    case Target::DemonCouplingSuper: return "demon_coupling_super";
  }
  return "?";
}

inline Target target_from_string(const std::string& s) {
  if (s == "drift_super") return Target::DriftSuper;
  if (s == "drift_vec") return Target::DriftVec;
  if (s == "diffusion_super") return Target::DiffusionSuper;
  if (s == "demon_coupling_super") return Target::DemonCouplingSuper;
  throw ContractError("unknown gate target '" + s + "'");
}

/// Operator dimension a target needs for an N-mode model with an M-dim demon port.
inline Eigen::Index target_dim(Target t, Eigen::Index n, Eigen::Index m) {
  switch (t) {
    case Target::DriftSuper:
    case Target::DiffusionSuper: return n * n;
    case Target::DriftVec: return n;
    case Target::DemonCouplingSuper: return n * m;
  }
  return 0;
}

/// Generator gate: the segment evaluates to exp(K (t - t_start)).
struct Generator {
  Target target;
  Operator K;
};

/// One pulse of a gate sequence on [t_start, t_end).
class GateSegment {
 public:
  enum class Form { Generator, FunctionScalar, FunctionEntry };

  static GateSegment generator(Operator k, double t_start, double t_end) {
    GateSegment s(Form::Generator, t_start, t_end);
    s.generator_ = std::move(k);
    s.dim_ = s.generator_.dim();
    return s;
  }

  /// g(t) * identity on an operator space of dimension `dim`.
  static GateSegment function_scalar(Eigen::Index dim, ScalarFunction g, double t_start, double t_end) {
    GateSegment s(Form::FunctionScalar, t_start, t_end);
    s.dim_ = dim;
    s.function_ = std::move(g);
    return s;
  }

  /// Identity except diagonal entry `entry`, which equals g(t).
  static GateSegment function_entry(Eigen::Index dim, Eigen::Index entry, ScalarFunction g, double t_start,
                                    double t_end) {
    require(entry >= 0 && entry < dim, "function_entry: entry index out of range");
    GateSegment s(Form::FunctionEntry, t_start, t_end);
    s.dim_ = dim;
    s.entry_ = entry;
    s.function_ = std::move(g);
    return s;
  }

  Form form() const { return form_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  Eigen::Index dim() const { return dim_; }
  const Operator& generator_op() const { return generator_; }
  const ScalarFunction& function() const { return function_; }
  Eigen::Index entry() const { return entry_; }

  /// Local factor of this segment at time t (not composed with earlier segments).
  Operator local_value(double t) const {
    switch (form_) {
      case Form::Generator: return generator_.exponential(t - t_start_);
      case Form::FunctionScalar: return Operator::scalar(dim_, function_(t));
      case Form::FunctionEntry: {
        Vector d = Vector::Ones(dim_);
        d(entry_) = function_(t);
        return Operator::diagonal(std::move(d));
      }
    }
    return Operator::identity(dim_);
  }

 private:
  GateSegment(Form f, double t_start, double t_end)
      : form_(f), t_start_(t_start), t_end_(t_end), function_(ScalarFunction::constant(1.0)) {
    require(std::isfinite(t_start) && std::isfinite(t_end) && t_start < t_end,
            "GateSegment: need t_start < t_end");
  }

  Form form_;
  double t_start_;
  double t_end_;
  Eigen::Index dim_ = 0;
  Operator generator_;
  ScalarFunction function_;
  Eigen::Index entry_ = 0;
};

/// Contiguous gate sequence for one target.
///
/// With compose=true (default) segment j evaluates to F_j(t) * P_{j-1}, where
/// P_{j-1} is the product of all completed segments, so generator schedules
/// are continuous at boundaries. With compose=false each segment acts on the
/// base operator alone: F_j(t).
class Schedule {
 public:
  static constexpr double kBoundaryTol = 1e-12;

  Schedule(Target target, std::vector<GateSegment> segments, bool compose = true)
      : target_(target), segments_(std::move(segments)), compose_(compose) {
    require(!segments_.empty(), "Schedule: needs at least one segment");
    dim_ = segments_.front().dim();
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      require(segments_[k].dim() == dim_, "Schedule: segment dimensions differ");
      if (k > 0) {
        const double gap = segments_[k].t_start() - segments_[k - 1].t_end();
        require(std::abs(gap) <= kBoundaryTol * std::max(1.0, std::abs(segments_[k].t_start())),
                "Schedule: segments must be contiguous and non-overlapping");
      }
    }
    Operator acc = Operator::identity(dim_);
    prefix_.reserve(segments_.size());
    for (const auto& s : segments_) {
      prefix_.push_back(acc);
      if (compose_) acc = s.local_value(s.t_end()).compose(acc);
    }
  }

  Target target() const { return target_; }
  Eigen::Index dim() const { return dim_; }
  double t0() const { return segments_.front().t_start(); }
  double tf() const { return segments_.back().t_end(); }
  bool compose() const { return compose_; }
  const std::vector<GateSegment>& segments() const { return segments_; }

  /// Operator value at t; t == tf is the left limit.
  Operator evaluate(double t) const {
    const double tol = kBoundaryTol * std::max(1.0, std::abs(tf()));
    if (!(t >= t0() - tol && t <= tf() + tol)) {
      throw ContractError("Schedule: t=" + std::to_string(t) + " outside [" + std::to_string(t0()) + ", " +
                          std::to_string(tf()) + "]");
    }
    std::size_t j = 0;
    while (j + 1 < segments_.size() && t >= segments_[j].t_end()) ++j;
    const Operator local = segments_[j].local_value(std::min(t, segments_[j].t_end()));
    return compose_ ? local.compose(prefix_[j]) : local;
  }

 private:
  Target target_;
  std::vector<GateSegment> segments_;
  bool compose_;
  Eigen::Index dim_ = 0;
  std::vector<Operator> prefix_;
};

/// Single-segment schedule exp(K (t - t0)) on [t0, tf).
inline Schedule generator_schedule(const Generator& g, double t0, double tf) {
  return Schedule(g.target, {GateSegment::generator(g.K, t0, tf)});
}

/// Discrete-gate convenience: consecutive fixed-duration pulses starting at t0.
inline Schedule pulse_sequence(Target target, double t0, const std::vector<std::pair<Operator, double>>& pulses,
                               bool compose = true) {
  std::vector<GateSegment> segs;
  double t = t0;
  for (const auto& [k, duration] : pulses) {
    require(duration > 0.0, "pulse_sequence: durations must be positive");
    segs.push_back(GateSegment::generator(k, t, t + duration));
    t += duration;
  }
  return Schedule(target, std::move(segs), compose);
}

enum class SingleModeKind { DriftVec, DiagonalDriftSuper, DiagonalDiffusionSuper };

/// Gate acting on s-mode j (1-based) only: identity except the (j,j) entry
/// (or the vec index of (j,j) for superoperators), which follows g(t).
inline Schedule single_smode_gate(Eigen::Index n, Eigen::Index j, ScalarFunction g, SingleModeKind which, double t0,
                                  double tf) {
  require(n > 0, "single_smode_gate: N must be positive");
  if (j < 1 || j > n) throw ContractError("single_smode_gate: mode index " + std::to_string(j) + " outside 1.." + std::to_string(n));
  const Eigen::Index i = j - 1;
  switch (which) {
    case SingleModeKind::DriftVec:
      return Schedule(Target::DriftVec, {GateSegment::function_entry(n, i, std::move(g), t0, tf)});
    case SingleModeKind::DiagonalDriftSuper:
      return Schedule(Target::DriftSuper, {GateSegment::function_entry(n * n, i + i * n, std::move(g), t0, tf)});
    case SingleModeKind::DiagonalDiffusionSuper:
      return Schedule(Target::DiffusionSuper,
                      {GateSegment::function_entry(n * n, i + i * n, std::move(g), t0, tf)});
  }
  throw ContractError("single_smode_gate: unknown kind");
}

}  // namespace thermoai::gates
