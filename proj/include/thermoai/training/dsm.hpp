#pragma once

#include <functional>
#include <optional>

#include "thermoai/core/rng.hpp"
#include "thermoai/demon/score_network.hpp"
#include "thermoai/training/noise_schedule.hpp"

namespace thermoai::training {

using DataSampler = std::function<Vector(Rng&)>;

enum class TrainMode { ExSitu, InSitu };

inline std::string to_string(TrainMode m) { return m == TrainMode::ExSitu ? "ex_situ" : "in_situ"; }

/// One noised minibatch: x_t = a(t) x0 + sigma(t) z, columns are samples.
struct DsmBatch {
  Matrix x0;
  Matrix xt;
  Matrix z;
  Vector t;
};

/// Denoising score matching with sigma_t^2 weighting.
///
/// Ex-situ the residual is s_theta - grad log p(x_t | x0), the standard loss
/// sigma^2 |s + z/sigma|^2. In-situ the residual is the mismatch between the
/// device's reverse drift A x + b + D s (coefficients read from the possibly
/// perturbed environment at tau = T - t) and the ideal reverse drift
/// -f x + (g^2 + C C^T)/2 grad log p(x_t | x0), divided by g^2. With an ideal
/// environment both forms coincide.
class DsmObjective {
 public:
  DsmObjective(NoiseSchedule schedule, DataSampler data, std::size_t batch_size,
               std::optional<ReverseDevice> environment = std::nullopt, double t_min_fraction = 1e-3)
      : schedule_(schedule), data_(std::move(data)), batch_size_(batch_size), env_(std::move(environment)),
        t_min_(t_min_fraction * schedule.horizon) {
    require(static_cast<bool>(data_), "DsmObjective: data sampler required");
    require(batch_size_ >= 1, "DsmObjective: batch size must be at least 1");
    require(t_min_fraction > 0.0 && t_min_fraction < 1.0, "DsmObjective: t_min fraction must be in (0, 1)");
    if (env_) env_->program.check_compatible(env_->model);
  }

  const NoiseSchedule& schedule() const { return schedule_; }
  double t_min() const { return t_min_; }
  bool has_environment() const { return env_.has_value(); }
  std::size_t batch_size() const { return batch_size_; }

  DsmBatch draw(Rng& rng) const {
    Matrix x0;
    for (std::size_t c = 0; c < batch_size_; ++c) {
      const Vector x = data_(rng);
      if (c == 0) x0.resize(x.size(), static_cast<Eigen::Index>(batch_size_));
      require(x.size() == x0.rows(), "DsmObjective: data sampler changed dimension");
      x0.col(static_cast<Eigen::Index>(c)) = x;
    }
    return noise(x0, rng);
  }

  /// Adds t ~ U[t_min, T] and z ~ N(0, I) to given clean data.
  DsmBatch noise(const Matrix& x0, Rng& rng) const {
    require(x0.cols() >= 1, "dsm: empty batch");
    DsmBatch b{x0, Matrix(x0.rows(), x0.cols()), Matrix(x0.rows(), x0.cols()), Vector(x0.cols())};
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
      b.t(c) = t_min_ + (schedule_.horizon - t_min_) * rng.uniform();
      for (Eigen::Index i = 0; i < x0.rows(); ++i) b.z(i, c) = rng.normal();
      b.xt.col(c) = schedule_.mean_scale(b.t(c)) * b.x0.col(c) + std::sqrt(schedule_.kernel_var(b.t(c))) * b.z.col(c);
    }
    return b;
  }

  /// Mean weighted residual; accumulates d loss / d theta into grad when given.
  double evaluate(const demon::ScoreNetworkDemon& net, const DsmBatch& b, TrainMode mode, Vector* grad) const {
    const bool in_situ = mode == TrainMode::InSitu;
    require(!in_situ || env_.has_value(), "DsmObjective: in-situ evaluation needs an environment");
    require(b.xt.rows() == net.input_dim(), "DsmObjective: data dimension does not match the network");
    demon::Mlp::Cache cache;
    const Matrix s = net.batch_score(b.t, b.xt, grad ? &cache : nullptr);
    const auto n = static_cast<double>(b.xt.cols());
    Matrix ds(s.rows(), s.cols());
    double total = 0.0;
    sde::Coefficients co = in_situ ? sde::Coefficients::of(env_->model) : sde::Coefficients{};
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      const double t = b.t(c);
      const double var = schedule_.kernel_var(t);
      const double sigma = std::sqrt(var);
      if (!in_situ) {
        const Vector r = s.col(c) + b.z.col(c) / sigma;
        total += var * r.squaredNorm();
        ds.col(c) = (2.0 * var / n) * r;
        continue;
      }
      env_->program.apply_in_place(env_->model, schedule_.horizon - t, co);
      const Vector x = b.xt.col(c);
      const Vector cond_score = -b.z.col(c) / sigma;
      const double g2 = schedule_.g2(t);
      const Matrix mix = 0.5 * (g2 * Matrix::Identity(x.size(), x.size()) + co.C * co.C.transpose());
      const Vector target = -schedule_.f(t) * x + mix * cond_score;
      const Vector r = (co.A * x + co.b + co.D * s.col(c) - target) / g2;
      total += var * r.squaredNorm();
      ds.col(c) = (2.0 * var / (n * g2)) * (co.D.transpose() * r);
    }
    if (grad) net.network().backward(cache, ds, *grad);
    return total / n;
  }

  double loss_and_gradient(const demon::ScoreNetworkDemon& net, Rng& rng, TrainMode mode, Vector* grad) const {
    return evaluate(net, draw(rng), mode, grad);
  }

 private:
  NoiseSchedule schedule_;
  DataSampler data_;
  std::size_t batch_size_;
  std::optional<ReverseDevice> env_;
  double t_min_;
};

/// Standard DSM loss on a fixed clean batch (columns) with fresh t and z.
inline double dsm_loss(const demon::ScoreNetworkDemon& net, const Matrix& data_batch, const NoiseSchedule& schedule,
                       Rng& rng, double t_min_fraction = 1e-3) {
  require(data_batch.cols() >= 1, "dsm_loss: empty batch");
  const DsmObjective obj(schedule, [](Rng&) { return Vector(); }, 1, std::nullopt, t_min_fraction);
  return obj.evaluate(net, obj.noise(data_batch, rng), TrainMode::ExSitu, nullptr);
}

}  // namespace thermoai::training
