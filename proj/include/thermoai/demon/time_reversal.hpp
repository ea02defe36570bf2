#pragma once

#include <memory>

#include "thermoai/demon/demon.hpp"

namespace thermoai::demon {

/// Presents a demon defined in forward time t to a device running in
/// reversed time tau = horizon - t.
class TimeReversedDemon : public Demon {
 public:
  TimeReversedDemon(std::shared_ptr<Demon> inner, double horizon) : inner_(std::move(inner)), horizon_(horizon) {
    require(inner_ != nullptr, "TimeReversedDemon: inner demon required");
  }

  Eigen::Index input_dim() const override { return inner_->input_dim(); }
  Eigen::Index output_dim() const override { return inner_->output_dim(); }
  bool needs_derivative() const override { return inner_->needs_derivative(); }
  bool stateful() const override { return inner_->stateful(); }

  Vector output(double tau, const Vector& v, const Vector* dv_dt) override {
    return inner_->output(horizon_ - tau, v, dv_dt);
  }
  void advance(double tau, const Vector& v, const Vector& dv_dt, double dt) override {
    inner_->advance(horizon_ - tau, v, dv_dt, dt);
  }
  void reset() override { inner_->reset(); }
  void set_stream(std::uint64_t s) override { inner_->set_stream(s); }

  /// Stateless inner demons are shared between clones; stateful ones are copied.
  std::unique_ptr<Demon> clone() const override {
    if (!inner_->stateful()) return std::make_unique<TimeReversedDemon>(*this);
    return std::make_unique<TimeReversedDemon>(std::shared_ptr<Demon>(inner_->clone()), horizon_);
  }

 private:
  std::shared_ptr<Demon> inner_;
  double horizon_;
};

}  // namespace thermoai::demon
