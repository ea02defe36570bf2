#pragma once

#include "thermoai/apps/diffusion.hpp"
#include "thermoai/training/perturb.hpp"
#include "thermoai/training/trainer.hpp"

namespace thermoai::apps {

/// Learned error correction on the 1D Gaussian generative task: a score
/// network is trained on the ideal reverse device, the device's A0 is then
/// perturbed, and three deployments are compared by moment error.
struct ErrorCorrectionConfig {
  NoiseSchedule schedule = NoiseSchedule::vp(0.1, 20.0);
  double data_mean = 2.0;
  double data_sd = 0.5;
  training::PerturbationSpec perturbation{training::PerturbationSpec::Mode::Multiplicative, 0.1, 0.0, 0.0, 0};
  std::vector<Eigen::Index> hidden{32, 32};
  demon::TimeEmbedding embedding = demon::TimeEmbedding::sinusoidal(4);
  std::size_t batch_size = 256;
  double learning_rate = 5e-3;
  std::size_t pretrain_steps = 6000;
  /// Fine-tuning length, used for both the ideal and the in-situ arm.
  std::size_t finetune_steps = 2000;
  double finetune_learning_rate = 1e-3;
  std::size_t n_samples = 10000;
  double dt = 2e-3;
  std::uint64_t seed = 0;
};

struct ErrorCorrectionResult {
  /// Ideal-trained network on the ideal device.
  double baseline = 0.0;
  /// Network fine-tuned in situ on the perturbed device, deployed there.
  double in_situ = 0.0;
  /// Ideal-trained network deployed on the perturbed device.
  double ideal_on_perturbed = 0.0;
  double perturbed_a0 = 0.0;
};

inline ErrorCorrectionResult run_error_correction(const ErrorCorrectionConfig& cfg) {
  using namespace training;
  const auto ideal = reverse_device(cfg.schedule, 1);
  ReverseDevice perturbed = ideal;
  PerturbationSpec ps = cfg.perturbation;
  ps.seed = derive_seed(cfg.seed, 10);
  perturbed.model = perturb_model(ideal.model, ps);

  const double mu = cfg.data_mean, sd = cfg.data_sd;
  const DataSampler data = [mu, sd](Rng& r) { return vector_of({mu + sd * r.normal()}); };

  demon::ScoreNetworkDemon net(1, cfg.hidden, cfg.embedding, derive_seed(cfg.seed, 11));
  TrainConfig pre;
  pre.steps = cfg.pretrain_steps;
  pre.learning_rate = cfg.learning_rate;
  pre.cosine_decay = true;
  pre.seed = derive_seed(cfg.seed, 12);
  train_demon(net, DsmObjective(cfg.schedule, data, cfg.batch_size), pre);

  TrainConfig fine;
  fine.steps = cfg.finetune_steps;
  fine.learning_rate = cfg.finetune_learning_rate;
  fine.cosine_decay = true;
  fine.seed = derive_seed(cfg.seed, 13);
  demon::ScoreNetworkDemon ideal_net = net;
  train_demon(ideal_net, DsmObjective(cfg.schedule, data, cfg.batch_size), fine);
  demon::ScoreNetworkDemon insitu_net = net;
  fine.mode = TrainMode::InSitu;
  train_demon(insitu_net, DsmObjective(cfg.schedule, data, cfg.batch_size, perturbed), fine);

  // Common random numbers: every arm sees the same prior draws and noise.
  const std::uint64_t s = derive_seed(cfg.seed, 14);
  const Vector m = vector_of({mu});
  const Matrix v = Matrix::Constant(1, 1, sd * sd);
  ErrorCorrectionResult out;
  out.perturbed_a0 = perturbed.model.A0()(0, 0);
  out.baseline = moment_error(diffusion_reverse(ideal, cfg.schedule, ideal_net, cfg.n_samples, cfg.dt, s), m, v);
  out.in_situ = moment_error(diffusion_reverse(perturbed, cfg.schedule, insitu_net, cfg.n_samples, cfg.dt, s), m, v);
  out.ideal_on_perturbed =
      moment_error(diffusion_reverse(perturbed, cfg.schedule, ideal_net, cfg.n_samples, cfg.dt, s), m, v);
  return out;
}

}  // namespace thermoai::apps
