#include <cmath>

#include <gtest/gtest.h>

#include "thermoai/demon/force.hpp"
#include "thermoai/demon/serialize.hpp"
#include "thermoai/demon/total_derivative.hpp"
#include "thermoai/sde/integrator.hpp"

using namespace thermoai;
using namespace thermoai::demon;

namespace {

Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

GaussianMixture two_mode_mixture() {
  return GaussianMixture({0.3, 0.7}, {Gaussian(vector_of({-1.0, 0.5}), matrix_from_rows({{0.5, 0.1}, {0.1, 0.3}})),
                                      Gaussian::isotropic(vector_of({1.0, -0.5}), 0.4)});
}

}  // namespace

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Mlp net({3, 8, 8, 2}, 4);
  Rng rng(1);
  net.mutable_params() += random_vector(rng, net.n_params(), 0.1);
  Matrix x(3, 5);
  for (Eigen::Index c = 0; c < 5; ++c) x.col(c) = random_vector(rng, 3);
  const Matrix w = Matrix::Random(2, 5);
  // L = sum(w .* f(x))
  auto loss = [&](const Mlp& m, const Matrix& in) { return (w.array() * m.forward(in).array()).sum(); };
  Mlp::Cache cache;
  net.forward(x, &cache);
  Vector grad;
  const Matrix dx = net.backward(cache, w, grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < net.n_params(); ++i) {
    Mlp p = net, m = net;
    p.mutable_params()(i) += h;
    m.mutable_params()(i) -= h;
    const double fd = (loss(p, x) - loss(m, x)) / (2 * h);
    ASSERT_NEAR(grad(i), fd, 1e-7 * std::max(1.0, std::abs(fd))) << "param " << i;
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    ASSERT_NEAR(dx.data()[i], (loss(net, xp) - loss(net, xm)) / (2 * h), 1e-7);
  }
}

TEST(ScoreNetworkDemon, ZeroFinalLayerOutputsZero) {
  ScoreNetworkDemon d(3, {16, 16}, TimeEmbedding::sinusoidal(3), 7, true);
  EXPECT_TRUE(demon_output(d, 0.4, vector_of({1.0, -2.0, 0.5})).isZero(0.0));
  EXPECT_EQ(d.network().sizes(), (std::vector<Eigen::Index>{9, 16, 16, 3}));
}

TEST(ScoreNetworkDemon, DefaultArchitectureAndDeterminism) {
  ScoreNetworkDemon d(2);
  EXPECT_EQ(d.network().sizes(), (std::vector<Eigen::Index>{3, 64, 64, 2}));
  const Vector v = vector_of({0.3, -0.1});
  EXPECT_EQ(d.score(0.5, v), d.score(0.5, v));
  Vector times(2);
  times << 0.5, 0.9;
  Matrix xs(2, 2);
  xs << v, v;
  const Matrix batch = d.batch_score(times, xs);
  EXPECT_LT((batch.col(0) - d.score(0.5, v)).norm(), 1e-14);
  EXPECT_LT((batch.col(1) - d.score(0.9, v)).norm(), 1e-14);
}

TEST(ScoreNetworkDemon, JsonCheckpointRoundTrip) {
  ScoreNetworkDemon d(2, {8, 5}, TimeEmbedding::sinusoidal(2, 8.0), 3);
  const auto j = score_network_to_json(d);
  const auto e = score_network_from_json(Json::parse(j.dump()));
  EXPECT_EQ(e.network().params(), d.network().params());
  const Vector v = vector_of({1.0, 2.0});
  EXPECT_EQ(e.score(0.3, v), d.score(0.3, v));
  Json bad = j;
  bad["network"]["layers"][0]["b"] = Json::array({1.0});
  EXPECT_THROW(score_network_from_json(bad), ConfigError);
}

TEST(ForceDemon, QuadraticForce) {
  ForceDemon d(QuadraticPotential::isotropic(2), Matrix::Identity(2, 2), vector_of({2.0, 0.0}));
  EXPECT_EQ(demon_output(d, 0.0, Vector::Zero(2)), vector_of({-2.0, 0.0}));
}

TEST(ForceDemon, GaussianNegativeLogScore) {
  const GaussianMixture g({1.0}, {Gaussian::isotropic(Vector::Zero(1), 1.0)});
  ForceDemon d(std::make_shared<GaussianMixtureNll>(g), Matrix::Identity(1, 1), vector_of({0.7}));
  EXPECT_NEAR(d.output(0.0, Vector::Zero(1), nullptr)(0), -0.7, 1e-14);
}

TEST(ForceDemon, FiniteDifferenceMatchesAnalyticOnQuadratic) {
  Rng rng(2);
  const Matrix s = Matrix::Random(3, 3);
  const auto u = std::make_shared<QuadraticPotential>(s * s.transpose() + Matrix::Identity(3, 3));
  const Vector x0 = random_vector(rng, 3);
  ForceDemon a(u, Matrix::Identity(3, 3), x0);
  ForceDemon f(u, Matrix::Identity(3, 3), x0, {GradientMode::FiniteDifference, 1e-4, std::nullopt, 0});
  EXPECT_LT((a.force(0.0) - f.force(0.0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ForceDemon, CatalogAnalyticVsFiniteDifference) {
  Rng rng(77);
  std::vector<PotentialPtr> catalog{
      std::make_shared<QuadraticPotential>(matrix_from_rows({{2.0, 0.3}, {0.3, 1.0}}), vector_of({0.5, -1.0})),
      std::make_shared<DoubleWellPotential>(2, 1.5, 1.0),
      std::make_shared<GaussianMixtureNll>(two_mode_mixture()),
      std::make_shared<NetworkPotential>(Mlp({3, 16, 16, 1}, 5)),
      std::make_shared<ScaledPotential>(gates::ScalarFunction::affine(1.0, 2.0),
                                        std::make_shared<DoubleWellPotential>(2))};
  for (const auto& u : catalog) {
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vector x = random_vector(rng, 2);
      const double t = rng.uniform();
      const Vector ga = u->gradient(t, x);
      const Vector gf = finite_difference_gradient(*u, t, x, 1e-4);
      worst = std::max(worst, (ga - gf).norm() / ga.norm());
    }
    EXPECT_LT(worst, 1e-5) << u->name();
  }
}

TEST(ForceDemon, FrozenLatentUnderZeroMomentum) {
  ForceDemon d(std::make_shared<DoubleWellPotential>(2), Matrix::Identity(2, 2), vector_of({0.3, -0.2}));
  const Vector f0 = force_demon_step(d, 0.0, Vector::Zero(2), 0.1);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(force_demon_step(d, 0.1 * i, Vector::Zero(2), 0.1), f0);
}

TEST(ForceDemon, LatentUsesInverseMass) {
  ForceDemon d(QuadraticPotential::isotropic(2), matrix_from_rows({{2.0, 0.0}, {0.0, 4.0}}), Vector::Zero(2));
  d.move_latent(vector_of({1.0, 1.0}), 0.5);
  EXPECT_LT((d.latent() - vector_of({0.25, 0.125})).norm(), 1e-15);
}

TEST(ForceDemon, RejectsBadMass) {
  const auto u = QuadraticPotential::isotropic(2);
  EXPECT_THROW(ForceDemon(u, matrix_from_rows({{1.0, 0.0}, {0.0, 0.0}}), Vector::Zero(2)), ContractError);
  EXPECT_THROW(ForceDemon(u, matrix_from_rows({{1.0, 2.0}, {0.0, 1.0}}), Vector::Zero(2)), ContractError);
  EXPECT_THROW(ForceDemon(u, Matrix::Identity(3, 3), Vector::Zero(2)), ContractError);
}

TEST(ForceDemon, HostedEnergyDriftAgainstLeapfrog) {
  // dp = -grad U dt through the demon, dx = p dt in the latent; U = x^2/2, M = 1.
  const double dt = 1e-3, horizon = 10.0;
  const sde::SDEModel m(Matrix::Zero(1, 1), Vector::Zero(1), Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  ForceDemon d(QuadraticPotential::isotropic(1), Matrix::Identity(1, 1), vector_of({1.0}));
  const double p0 = 0.0, x0 = 1.0;
  double lx = x0, lp = p0;
  double worst_h = 0.0, worst_x = 0.0;
  const auto grid = sde::uniform_grid(0.0, horizon, dt);
  Rng rng(1);
  sde::integrate_on_grid(m, gates::GateProgram{}, &d, vector_of({p0}), grid, rng,
                         [&](std::size_t, double, const Vector& v, Demon* dm) {
                           const double x = static_cast<ForceDemon*>(dm)->latent()(0);
                           const double h = 0.5 * x * x + 0.5 * v(0) * v(0);
                           worst_h = std::max(worst_h, std::abs(h - 0.5));
                           lp -= 0.5 * dt * lx;
                           lx += dt * lp;
                           lp -= 0.5 * dt * lx;
                           worst_x = std::max(worst_x, std::abs(x - lx));
                         });
  EXPECT_LT(worst_h, dt);
  EXPECT_LT(worst_x, 10 * dt);
}

TEST(ForceDemon, GradientNoiseCovarianceAndStreams) {
  ForceDemon::Options opts;
  opts.gradient_noise_cov = matrix_from_rows({{0.5, 0.2}, {0.2, 0.3}});
  opts.noise_seed = 9;
  ForceDemon d(QuadraticPotential::isotropic(2), Matrix::Identity(2, 2), Vector::Zero(2), opts);
  Matrix acc = Matrix::Zero(2, 2);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const Vector f = d.force(0.0);
    acc += f * f.transpose();
  }
  EXPECT_LT((acc / n - *opts.gradient_noise_cov).norm(), 0.02);
  auto a = d.clone(), b = d.clone();
  a->set_stream(1);
  b->set_stream(2);
  EXPECT_NE(a->output(0.0, Vector::Zero(2), nullptr), b->output(0.0, Vector::Zero(2), nullptr));
}

TEST(TotalDerivativeDemon, Examples) {
  TotalDerivativeDemon zero(1, vector_of({0.5}), [](double, const Vector&) { return Vector::Zero(1); },
                            [](double, const Vector&) { return Matrix::Zero(1, 1); });
  total_derivative_step(zero, 0.0, vector_of({1.0}), vector_of({3.0}), 0.1);
  EXPECT_EQ(zero.state(), vector_of({0.5}));
  TotalDerivativeDemon ones(1, vector_of({0.0}), [](double, const Vector&) { return Vector::Ones(1); },
                            [](double, const Vector&) { return Matrix::Zero(1, 1); });
  total_derivative_step(ones, 0.0, vector_of({1.0}), vector_of({3.0}), 0.1);
  EXPECT_NEAR(ones.state()(0), 0.1, 1e-15);
  EXPECT_THROW(ones.output(0.0, vector_of({1.0}), nullptr), ContractError);
  EXPECT_THROW(total_derivative_step(ones, 0.0, vector_of({1.0}), vector_of({3.0}), 0.0), ContractError);
}

namespace {

/// Max |d - t v(t)| along v(t) = (sin 2t, cos t) with q = v, r = t I.
double total_derivative_tracking_error(double dt) {
  TotalDerivativeDemon d(2, Vector::Zero(2), [](double, const Vector& v) { return v; },
                         [](double t, const Vector&) { return Matrix(t * Matrix::Identity(2, 2)); });
  auto path = [](double t) { return vector_of({std::sin(2 * t), std::cos(t)}); };
  const int steps = static_cast<int>(std::lround(2.0 / dt));
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Vector v = path(t);
    const Vector dvdt = (path(t + dt) - v) / dt;
    d.step(t, v, dvdt, dt);
    worst = std::max(worst, (d.state() - (t + dt) * path(t + dt)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST(TotalDerivativeDemon, TracksExactDemonAtFirstOrder) {
  const double e1 = total_derivative_tracking_error(0.01);
  const double e2 = total_derivative_tracking_error(0.005);
  EXPECT_LT(e1, 0.05);
  EXPECT_NEAR(e1 / e2, 2.0, 0.4);
}

TEST(TotalDerivativeDemon, NetworkFormAndCloning) {
  auto d = TotalDerivativeDemon::from_networks(2, vector_of({0.1}), Mlp({3, 4, 1}, 1), Mlp({3, 4, 2}, 2));
  auto a = d.clone(), b = d.clone();
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vector v = random_vector(rng, 2), dv = random_vector(rng, 2);
    EXPECT_EQ(a->output(0.01 * k, v, &dv), b->output(0.01 * k, v, &dv));
    a->advance(0.01 * k, v, dv, 0.01);
    b->advance(0.01 * k, v, dv, 0.01);
  }
  a->reset();
  EXPECT_EQ(static_cast<TotalDerivativeDemon*>(a.get())->state(), vector_of({0.1}));
}

TEST(TotalDerivativeDemon, DrivesHostSde) {
  // q = 1, r = 0: d(t) = t, so v' = d gives v(T) = T^2/2 up to O(dt).
  const sde::SDEModel m(Matrix::Zero(1, 1), Vector::Zero(1), Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  TotalDerivativeDemon d(1, Vector::Zero(1), [](double, const Vector&) { return Vector::Ones(1); },
                         [](double, const Vector&) { return Matrix::Zero(1, 1); });
  const auto tr = sde::simulate_trajectory(m, gates::GateProgram{}, &d, Vector::Zero(1), 0.0, 1.0, 1e-3, 1);
  EXPECT_NEAR(tr.back().v(0), 0.5, 2e-3);
}

TEST(AnalyticScore, Examples) {
  const Gaussian std_normal = Gaussian::isotropic(Vector::Zero(3), 1.0);
  const Vector x = vector_of({0.3, -1.0, 2.0});
  EXPECT_LT((analytic_score(std_normal, x) + x).norm(), 1e-15);
  const Gaussian shifted = Gaussian::isotropic(vector_of({1.0, 2.0}), 1.0);
  EXPECT_LT(analytic_score(shifted, shifted.mean()).norm(), 1e-15);
  const GaussianMixture sym({0.5, 0.5}, {Gaussian::isotropic(vector_of({-1.0}), 0.2), Gaussian::isotropic(vector_of({1.0}), 0.2)});
  EXPECT_NEAR(analytic_score(sym, vector_of({0.0}))(0), 0.0, 1e-15);
  EXPECT_THROW(Gaussian(Vector::Zero(2), Matrix::Zero(2, 2)), ContractError);
}

TEST(AnalyticScore, MixtureScoreIsLogDensityGradient) {
  const auto mix = two_mode_mixture();
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_vector(rng, 2);
    Vector fd(2);
    for (int i = 0; i < 2; ++i) {
      Vector xp = x, xm = x;
      xp(i) += 1e-5;
      xm(i) -= 1e-5;
      fd(i) = (mix.log_density(xp) - mix.log_density(xm)) / 2e-5;
    }
    EXPECT_LT((mix.score(x) - fd).norm(), 1e-7 * std::max(1.0, fd.norm()));
  }
}
