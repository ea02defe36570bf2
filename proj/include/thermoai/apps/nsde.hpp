#pragma once

#include <optional>

#include "thermoai/apps/common.hpp"
#include "thermoai/demon/score_network.hpp"
#include "thermoai/sde/integrator.hpp"

namespace thermoai::apps {

enum class WeightMode { Prior, Posterior };

/// Continuous-depth network with diffusing weights. Hidden field
/// dh/dt = tanh(W h + c), weights w = [vec(W) column-major; c].
/// Prior:     dw = a w dt + sigma dW.
/// Posterior: dw = (NN_phi(t, w) + w) dt + sigma dW.
struct NSDESpec {
  Eigen::Index hidden_dim = 2;
  double sigma = 0.0;
  double prior_drift = 0.0;
  /// Initial weights; zero when empty.
  Vector w0;
  std::optional<demon::ScoreNetworkDemon> posterior_net;

  Eigen::Index weight_dim() const { return hidden_dim * hidden_dim + hidden_dim; }
  Eigen::Index state_dim() const { return hidden_dim + weight_dim(); }

  void validate() const {
    require(hidden_dim >= 1, "NSDESpec: hidden_dim must be positive");
    require(sigma >= 0.0 && std::isfinite(sigma), "NSDESpec: sigma must be >= 0");
    require(w0.size() == 0 || w0.size() == weight_dim(), "NSDESpec: w0 has the wrong length");
    if (posterior_net)
      require(posterior_net->input_dim() == weight_dim(), "NSDESpec: posterior network must act on the weights");
  }
};

/// tanh(W h + c) for packed weights w.
inline Vector hidden_field(Eigen::Index h_dim, const Vector& h, const Vector& w) {
  const Eigen::Map<const Matrix> wm(w.data(), h_dim, h_dim);
  return (wm * h + w.tail(h_dim)).array().tanh().matrix();
}

/// Supplies the nonlinear parts of the joint drift: [f_h(h, w); NN_phi(t, w)].
class NsdeDemon : public demon::Demon {
 public:
  NsdeDemon(Eigen::Index h_dim, std::optional<demon::ScoreNetworkDemon> net) : h_(h_dim), net_(std::move(net)) {
    p_ = h_dim * h_dim + h_dim;
  }
  Eigen::Index input_dim() const override { return h_ + p_; }
  Eigen::Index output_dim() const override { return h_ + p_; }
  Vector output(double t, const Vector& v, const Vector*) override {
    Vector out(h_ + p_);
    const Vector w = v.tail(p_);
    out.head(h_) = hidden_field(h_, v.head(h_), w);
    if (net_) out.tail(p_) = net_->score(t, w);
    else out.tail(p_).setZero();
    return out;
  }
  std::unique_ptr<demon::Demon> clone() const override { return std::make_unique<NsdeDemon>(*this); }

 private:
  Eigen::Index h_;
  Eigen::Index p_;
  std::optional<demon::ScoreNetworkDemon> net_;
};

/// Linear part of the joint device on [h; w].
inline sde::SDEModel weight_diffuser_device(const NSDESpec& spec, WeightMode mode) {
  spec.validate();
  const auto h = spec.hidden_dim;
  const auto p = spec.weight_dim();
  const auto n = h + p;
  Matrix a = Matrix::Zero(n, n);
  Matrix c = Matrix::Zero(n, n);
  const double aw = mode == WeightMode::Posterior ? 1.0 : spec.prior_drift;
  a.bottomRightCorner(p, p).diagonal().setConstant(aw);
  c.bottomRightCorner(p, p).diagonal().setConstant(spec.sigma);
  return sde::SDEModel(a, Vector::Zero(n), c, Matrix::Identity(n, n));
}

struct NsdeRollout {
  /// One trajectory of [h; w] per input column.
  std::vector<sde::Trajectory> paths;
  Eigen::Index hidden_dim = 0;

  Vector hidden(std::size_t i, std::size_t k) const { return paths[i][k].v.head(hidden_dim); }
  Vector weights(std::size_t i, std::size_t k) const { return paths[i][k].v.tail(paths[i][k].v.size() - hidden_dim); }
};

/// Integrates every input h0 (columns of `inputs`) over [0, T]; input i uses
/// stream i of `seed`.
inline NsdeRollout weight_diffuser_rollout(const NSDESpec& spec, WeightMode mode, const Matrix& inputs, double horizon,
                                           double dt, std::uint64_t seed, unsigned threads = 1) {
  const auto model = weight_diffuser_device(spec, mode);
  require(inputs.rows() == spec.hidden_dim && inputs.cols() >= 1, "weight_diffuser_rollout: inputs must be hidden_dim x n");
  if (mode == WeightMode::Posterior)
    require(spec.posterior_net.has_value(), "weight_diffuser_rollout: posterior mode needs NN_phi");
  const auto h = spec.hidden_dim;
  const auto p = spec.weight_dim();
  const Vector w0 = spec.w0.size() ? spec.w0 : Vector::Zero(p);
  const NsdeDemon proto(h, mode == WeightMode::Posterior ? spec.posterior_net : std::nullopt);
  NsdeRollout out;
  out.hidden_dim = h;
  out.paths.resize(static_cast<std::size_t>(inputs.cols()));
  parallel_for(out.paths.size(), threads, [&](std::size_t i) {
    Vector v0(h + p);
    v0 << inputs.col(static_cast<Eigen::Index>(i)), w0;
    auto dm = proto.clone();
    out.paths[i] = sde::simulate_trajectory(model, {}, dm.get(), v0, 0.0, horizon, dt, {seed, i});
  });
  return out;
}

}  // namespace thermoai::apps
