#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermoai/training/dsm.hpp"
#include "thermoai/training/optimizer.hpp"

namespace thermoai::training {

struct TrainConfig {
  TrainMode mode = TrainMode::ExSitu;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  /// Cosine decay of the learning rate to zero over the run.
  bool cosine_decay = false;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  /// Perturbation size for the gradient-free estimator.
  double spsa_c = 1e-2;
};

struct TrainResult {
  std::vector<double> loss_history;
};

/// Loss became NaN or infinite.
class TrainingDivergence : public std::runtime_error {
 public:
  explicit TrainingDivergence(std::size_t step)
      : std::runtime_error("training loss is not finite at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// loss(params, rng, grad-or-null). The rng carries the step's minibatch randomness.
using ParamObjective = std::function<double(const Vector&, Rng&, Vector*)>;

/// Step k draws from stream k of the seed. Without gradients the update uses
/// simultaneous perturbation (two loss evaluations on common random numbers).
inline TrainResult train_parameters(Vector& params, const ParamObjective& objective, bool differentiable,
                                    const TrainConfig& cfg) {
  require(cfg.learning_rate >= 0.0, "train: learning rate must be nonnegative");
  require(cfg.steps >= 1, "train: steps must be at least 1");
  auto opt = make_optimizer(cfg.optimizer, cfg.learning_rate);
  TrainResult out;
  out.loss_history.reserve(cfg.steps);
  Vector grad(params.size());
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    Rng rng(cfg.seed, k);
    if (cfg.cosine_decay)
      opt->set_learning_rate(0.5 * cfg.learning_rate *
                             (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.steps))));
    double loss;
    if (differentiable) {
      grad.setZero();
      loss = objective(params, rng, &grad);
    } else {
      Rng pert(derive_seed(cfg.seed, 1), k);
      Vector delta(params.size());
      for (Eigen::Index i = 0; i < delta.size(); ++i) delta(i) = (pert() & 1u) ? 1.0 : -1.0;
      Rng r_plus = rng, r_minus = rng;
      const double lp = objective(params + cfg.spsa_c * delta, r_plus, nullptr);
      const double lm = objective(params - cfg.spsa_c * delta, r_minus, nullptr);
      loss = 0.5 * (lp + lm);
      grad = ((lp - lm) / (2.0 * cfg.spsa_c)) * delta;
    }
    if (!std::isfinite(loss) || !grad.allFinite()) throw TrainingDivergence(k);
    out.loss_history.push_back(loss);
    opt->step(params, grad);
  }
  return out;
}

/// Trains a score network on the DSM objective in the configured mode.
inline TrainResult train_demon(demon::ScoreNetworkDemon& net, const DsmObjective& objective, const TrainConfig& cfg) {
  require(cfg.mode == TrainMode::ExSitu || objective.has_environment(),
          "train_demon: in-situ training needs an environment");
  Vector params = net.network().params();
  demon::ScoreNetworkDemon work = net;
  const ParamObjective f = [&](const Vector& p, Rng& rng, Vector* grad) {
    work.network().mutable_params() = p;
    return objective.loss_and_gradient(work, rng, cfg.mode, grad);
  };
  auto result = train_parameters(params, f, true, cfg);
  net.network().set_params(params);
  return result;
}

inline void write_loss_csv(std::ostream& os, const std::vector<double>& history) {
  os.precision(17);
  os << "step,loss\n";
  for (std::size_t k = 0; k < history.size(); ++k) os << k << ',' << history[k] << '\n';
}

/// Mean of the first and last `window` entries.
inline std::pair<double, double> windowed_means(const std::vector<double>& h, std::size_t window) {
  require(window >= 1 && h.size() >= window, "windowed_means: history shorter than window");
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    a += h[i];
    b += h[h.size() - 1 - i];
  }
  return {a / static_cast<double>(window), b / static_cast<double>(window)};
}

}  // namespace thermoai::training
