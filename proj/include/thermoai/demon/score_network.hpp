#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "thermoai/demon/demon.hpp"
#include "thermoai/demon/mlp.hpp"

namespace thermoai::demon {

/// Time feature fed to the network alongside the state.
struct TimeEmbedding {
  enum class Kind { Affine, Sinusoidal };
  Kind kind = Kind::Affine;
  /// Affine: features (scale * t). Sinusoidal: number of sin/cos pairs.
  int size = 1;
  double scale = 1.0;
  /// Highest angular frequency for the sinusoidal embedding.
  double max_frequency = 64.0;

  static TimeEmbedding affine(double scale = 1.0) { return {Kind::Affine, 1, scale, 64.0}; }
  static TimeEmbedding sinusoidal(int pairs = 4, double max_frequency = 64.0) {
    return {Kind::Sinusoidal, pairs, 1.0, max_frequency};
  }

  Eigen::Index width() const { return kind == Kind::Sinusoidal ? 2 * size : 1; }

  void write(double t, double* out) const {
    if (kind == Kind::Affine) {
      out[0] = scale * t;
      return;
    }
    for (int k = 0; k < size; ++k) {
      const double w = size == 1 ? 1.0 : std::pow(max_frequency, static_cast<double>(k) / (size - 1));
      out[2 * k] = std::sin(w * t);
      out[2 * k + 1] = std::cos(w * t);
    }
  }
};

inline std::string to_string(TimeEmbedding::Kind k) {
  switch (k) {
    case TimeEmbedding::Kind::Affine: return "affine";
    case TimeEmbedding::Kind::Sinusoidal: return "sinusoidal";
  }
  return "affine";
}

/// Direct score model s_theta(v, t): an MLP on [v; embed(t)]. Stateless.
class ScoreNetworkDemon : public Demon {
 public:
  ScoreNetworkDemon(Eigen::Index dim, std::vector<Eigen::Index> hidden = {64, 64},
                    TimeEmbedding embedding = TimeEmbedding::affine(), std::uint64_t seed = 0,
                    bool zero_last_layer = false)
      : dim_(dim), embedding_(embedding), net_(layer_sizes(dim, hidden, embedding), seed, zero_last_layer) {}

  ScoreNetworkDemon(Eigen::Index dim, TimeEmbedding embedding, Mlp net)
      : dim_(dim), embedding_(embedding), net_(std::move(net)) {
    require(net_.input_dim() == dim + embedding.width() && net_.output_dim() == dim,
            "ScoreNetworkDemon: network shape does not match dim and embedding");
  }

  Eigen::Index input_dim() const override { return dim_; }
  Eigen::Index output_dim() const override { return dim_; }

  Vector output(double t, const Vector& v, const Vector*) override { return score(t, v); }

  Vector score(double t, const Vector& v) const {
    require(v.size() == dim_, "ScoreNetworkDemon: state dimension mismatch");
    Vector in(net_.input_dim());
    in.head(dim_) = v;
    embedding_.write(t, in.data() + dim_);
    return net_.forward(in);
  }

  /// Network input for a batch (columns are samples).
  Matrix batch_input(const Vector& times, const Matrix& x) const {
    require(x.rows() == dim_ && times.size() == x.cols(), "ScoreNetworkDemon: batch shape mismatch");
    Matrix in(net_.input_dim(), x.cols());
    in.topRows(dim_) = x;
    for (Eigen::Index c = 0; c < x.cols(); ++c) embedding_.write(times(c), in.col(c).data() + dim_);
    return in;
  }

  Matrix batch_score(const Vector& times, const Matrix& x, Mlp::Cache* cache = nullptr) const {
    return net_.forward(batch_input(times, x), cache);
  }

  std::unique_ptr<Demon> clone() const override { return std::make_unique<ScoreNetworkDemon>(*this); }

  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }
  const TimeEmbedding& embedding() const { return embedding_; }

 private:
  static std::vector<Eigen::Index> layer_sizes(Eigen::Index dim, const std::vector<Eigen::Index>& hidden,
                                               const TimeEmbedding& e) {
    require(dim > 0, "ScoreNetworkDemon: dim must be positive");
    std::vector<Eigen::Index> s{dim + e.width()};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(dim);
    return s;
  }

  Eigen::Index dim_;
  TimeEmbedding embedding_;
  Mlp net_;
};

}  // namespace thermoai::demon
