#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "sde_oracles.hpp"
#include "thermoai/sde/integrator.hpp"
#include "thermoai/sde/io.hpp"

using namespace thermoai;
using namespace thermoai::sde;
using thermoai::testing::lyapunov_stationary;
using thermoai::testing::random_stable_matrix;
using thermoai::testing::rel_frobenius;

namespace {

SDEModel vp_model(Eigen::Index n, double beta) {
  return SDEModel(-(beta / 2.0) * Matrix::Identity(n, n), Vector::Zero(n), std::sqrt(beta) * Matrix::Identity(n, n));
}

InitialSampler standard_normal(Eigen::Index n) {
  return [n](Rng& rng) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
  };
}

/// Demon returning a constant vector of a given size.
class ConstantDemon : public demon::Demon {
 public:
  ConstantDemon(Eigen::Index n, Vector value) : n_(n), value_(std::move(value)) {}
  Eigen::Index input_dim() const override { return n_; }
  Eigen::Index output_dim() const override { return value_.size(); }
  Vector output(double, const Vector&, const Vector*) override { return value_; }
  std::unique_ptr<demon::Demon> clone() const override { return std::make_unique<ConstantDemon>(*this); }

 private:
  Eigen::Index n_;
  Vector value_;
};

const gates::GateProgram kNoProgram{};

}  // namespace

TEST(EulerMaruyamaStep, ConstantDriftNoNoise) {
  const SDEModel m(Matrix::Zero(2, 2), vector_of({1.0, 0.0}), Matrix::Zero(2, 2));
  const auto s = euler_maruyama_step(m, Coefficients::of(m), Vector(), {0.0, Vector::Zero(2)}, 0.1, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(s.v(0), 0.1);
  EXPECT_DOUBLE_EQ(s.v(1), 0.0);
  EXPECT_DOUBLE_EQ(s.t, 0.1);
}

TEST(EulerMaruyamaStep, ExponentialDecayOneStep) {
  const SDEModel m(-Matrix::Identity(1, 1), Vector::Zero(1), Matrix::Zero(1, 1));
  const auto s = euler_maruyama_step(m, Coefficients::of(m), Vector(), {0.0, vector_of({1.0})}, 0.01, Vector::Zero(1));
  EXPECT_DOUBLE_EQ(s.v(0), 0.99);
}

TEST(EulerMaruyamaStep, NoiseAndDemonTerms) {
  const SDEModel m(Matrix::Zero(1, 1), Vector::Zero(1), 2.0 * Matrix::Identity(1, 1), 3.0 * Matrix::Ones(1, 1));
  const auto s = euler_maruyama_step(m, Coefficients::of(m), vector_of({0.5}), {0.0, vector_of({0.0})}, 0.04,
                                     vector_of({1.0}));
  // D d dt + C sqrt(dt) xi = 3*0.5*0.04 + 2*0.2*1
  EXPECT_NEAR(s.v(0), 0.06 + 0.4, 1e-15);
}

TEST(EulerMaruyamaStep, DimensionMismatchIsContractViolation) {
  const SDEModel m = vp_model(2, 2.0);
  EXPECT_THROW(euler_maruyama_step(m, Coefficients::of(m), Vector(), {0.0, Vector::Zero(3)}, 0.1, Vector::Zero(2)),
               ContractError);
  EXPECT_THROW(euler_maruyama_step(m, Coefficients::of(m), Vector(), {0.0, Vector::Zero(2)}, 0.1, Vector::Zero(1)),
               ContractError);
  EXPECT_THROW(euler_maruyama_step(m, Coefficients::of(m), Vector(), {0.0, Vector::Zero(2)}, 0.0, Vector::Zero(2)),
               ContractError);
}

TEST(EulerMaruyamaStep, DivergenceNamesTime) {
  const SDEModel m(Matrix::Zero(1, 1), vector_of({1e14}), Matrix::Zero(1, 1));
  try {
    euler_maruyama_step(m, Coefficients::of(m), Vector(), {2.5, Vector::Zero(1)}, 0.5, Vector::Zero(1));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_DOUBLE_EQ(e.time(), 3.0);
    EXPECT_NE(std::string(e.what()).find("t=3"), std::string::npos);
  }
}

TEST(SimulateTrajectory, SampleCountAndDeterminism) {
  const SDEModel m = vp_model(2, 2.0);
  const auto a = simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(2), 0.0, 1.0, 0.01, 5);
  const auto b = simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(2), 0.0, 1.0, 0.01, 5);
  ASSERT_EQ(a.size(), 101u);
  EXPECT_DOUBLE_EQ(a.back().t, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i].v, b[i].v);
  const auto c = simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(2), 0.0, 1.0, 0.01, 6);
  EXPECT_NE(a.back().v, c.back().v);
}

TEST(SimulateTrajectory, GridPreconditions) {
  const SDEModel m = vp_model(1, 2.0);
  EXPECT_THROW(simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(1), 0.0, 1.0, 2.0, 1), ContractError);
  EXPECT_THROW(simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(1), 0.0, 1.0, 0.3, 1), ContractError);
  EXPECT_THROW(simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(1), 1.0, 1.0, 0.1, 1), ContractError);
}

TEST(SimulateTrajectory, DemonOutputDimensionChecked) {
  const SDEModel m(Matrix::Zero(2, 2), Vector::Zero(2), Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  ConstantDemon wrong(2, Vector::Ones(3));
  EXPECT_THROW(simulate_trajectory(m, kNoProgram, &wrong, Vector::Zero(2), 0.0, 1.0, 0.1, 1), ContractError);
  ConstantDemon right(2, vector_of({1.0, -2.0}));
  const auto tr = simulate_trajectory(m, kNoProgram, &right, Vector::Zero(2), 0.0, 1.0, 0.1, 1);
  EXPECT_NEAR(tr.back().v(0), 1.0, 1e-12);
  EXPECT_NEAR(tr.back().v(1), -2.0, 1e-12);
}

TEST(SimulateTrajectory, StationaryVpPreservesVariance) {
  // v0 ~ N(0,1) is the VP fixed point; stationary variance c^2/(2 * beta/2) = 1.
  const SDEModel m = vp_model(1, 2.0);
  const int n = 4000;
  double s2 = 0;
  for (int i = 0; i < n; ++i) {
    Rng init(99, i);
    const Vector v0 = vector_of({init.normal()});
    const auto tr = simulate_trajectory(m, kNoProgram, nullptr, v0, 0.0, 2.0, 0.01, SeedSpec(11, i));
    s2 += tr.back().v(0) * tr.back().v(0);
  }
  EXPECT_NEAR(s2 / n, 1.0, 3.0 * std::sqrt(2.0 / n) + 0.01);
}

TEST(SimulateEnsemble, SingleTrajectoryHasZeroCovariance) {
  const SDEModel m = vp_model(2, 2.0);
  const auto sampler = standard_normal(2);
  const auto summary = simulate_ensemble(m, kNoProgram, nullptr, sampler, 0.0, 0.5, 0.05, 1, 17);
  Rng rng(17, 0);
  const Vector v0 = sampler(rng);
  const auto grid = uniform_grid(0.0, 0.5, 0.05);
  std::vector<Vector> path{v0};
  integrate_on_grid(m, kNoProgram, nullptr, v0, grid, rng,
                    [&](std::size_t, double, const Vector& v, demon::Demon*) { path.push_back(v); });
  ASSERT_EQ(summary.times.size(), path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    EXPECT_EQ(summary.mean[k], path[k]);
    EXPECT_TRUE(summary.cov[k].isZero(0.0));
  }
}

TEST(SimulateEnsemble, BitwiseDeterministicAcrossRunsAndThreads) {
  Rng r(3);
  const SDEModel m(random_stable_matrix(r, 3), Vector::Ones(3), Matrix::Identity(3, 3));
  const auto sampler = standard_normal(3);
  EnsembleOptions one;
  EnsembleOptions many;
  many.threads = 4;
  many.block_size = 7;
  one.block_size = 7;
  const auto a = simulate_ensemble(m, kNoProgram, nullptr, sampler, 0.0, 1.0, 0.01, 300, 8, one);
  const auto b = simulate_ensemble(m, kNoProgram, nullptr, sampler, 0.0, 1.0, 0.01, 300, 8, one);
  const auto c = simulate_ensemble(m, kNoProgram, nullptr, sampler, 0.0, 1.0, 0.01, 300, 8, many);
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    ASSERT_EQ(a.mean[k], b.mean[k]);
    ASSERT_EQ(a.cov[k], b.cov[k]);
    ASSERT_EQ(a.mean[k], c.mean[k]);
    ASSERT_EQ(a.cov[k], c.cov[k]);
  }
}

TEST(SimulateEnsemble, VpStationaryVariance) {
  const SDEModel m = vp_model(2, 2.0);
  EnsembleOptions opts;
  opts.record_stride = 100;
  const auto s = simulate_ensemble(m, kNoProgram, nullptr, [](Rng&) { return Vector::Zero(2); }, 0.0, 5.0, 0.01,
                                   10000, 21, opts);
  for (int i = 0; i < 2; ++i) EXPECT_LT(std::abs(s.cov.back()(i, i) - 1.0), 0.05);
}

TEST(SimulateEnsemble, ErrorCarriesTrajectoryIndex) {
  const SDEModel m(Matrix::Identity(1, 1) * 50.0, Vector::Zero(1), Matrix::Identity(1, 1));
  try {
    simulate_ensemble(m, kNoProgram, nullptr, [](Rng&) { return vector_of({1.0}); }, 0.0, 2.0, 0.01, 3, 1);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("trajectory 0"), std::string::npos);
  }
}

TEST(VarianceExploding, SlopeMatchesDiffusionSquared) {
  const double c0 = 1.5;
  const SDEModel m(Matrix::Zero(1, 1), Vector::Zero(1), c0 * Matrix::Identity(1, 1));
  EnsembleOptions opts;
  opts.record_stride = 10;
  const auto s = simulate_ensemble(m, kNoProgram, nullptr, [](Rng&) { return Vector::Zero(1); }, 0.0, 2.0, 0.01,
                                   10000, 4, opts);
  std::vector<double> t, var;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    t.push_back(s.times[k]);
    var.push_back(s.cov[k](0, 0));
  }
  EXPECT_NEAR(thermoai::testing::fitted_slope(t, var) / (c0 * c0), 1.0, 0.05);
}

TEST(PropagateMoments, VarianceExplodingClosedForm) {
  const double c0 = 0.8;
  const SDEModel m(Matrix::Zero(2, 2), Vector::Zero(2), c0 * Matrix::Identity(2, 2));
  const auto ms = propagate_moments(m, kNoProgram, Vector::Zero(2), Matrix::Zero(2, 2), 0.0, 3.0, 0.1);
  for (const auto& g : ms) {
    check_moments(g);
    EXPECT_NEAR((g.cov - c0 * c0 * g.t * Matrix::Identity(2, 2)).norm(), 0.0, 1e-12);
  }
}

TEST(PropagateMoments, VariancePreservingFixedPoint) {
  const SDEModel m = vp_model(3, 2.0);
  const auto ms = propagate_moments(m, kNoProgram, Vector::Zero(3), Matrix::Identity(3, 3), 0.0, 4.0, 0.05);
  for (const auto& g : ms) EXPECT_NEAR((g.cov - Matrix::Identity(3, 3)).norm(), 0.0, 1e-12);
}

TEST(PropagateMoments, ConstantDriftMovesMeanLinearly) {
  const SDEModel m(Matrix::Zero(2, 2), vector_of({1.0, 2.0}), Matrix::Zero(2, 2));
  const Matrix cov0 = matrix_from_rows({{2.0, 0.5}, {0.5, 1.0}});
  const auto ms = propagate_moments(m, kNoProgram, Vector::Zero(2), cov0, 0.0, 1.0, 0.1);
  EXPECT_NEAR(ms.back().mean(0), 1.0, 1e-12);
  EXPECT_NEAR(ms.back().mean(1), 2.0, 1e-12);
  EXPECT_NEAR((ms.back().cov - cov0).norm(), 0.0, 1e-12);
}

TEST(PropagateMoments, RelaxesToLyapunovSolution) {
  Rng r(12);
  const Matrix a = random_stable_matrix(r, 4);
  const Matrix c = thermoai::testing::random_matrix(r, 4, 4, 0.7);
  const SDEModel m(a, Vector::Zero(4), c);
  const auto ms = propagate_moments(m, kNoProgram, Vector::Zero(4), Matrix::Zero(4, 4), 0.0, 60.0, 0.01);
  const Matrix ref = lyapunov_stationary(a, c * c.transpose());
  EXPECT_LT(rel_frobenius(ms.back().cov, ref), 1e-8);
}

TEST(PropagateMoments, OuTransientClosedForm) {
  // A = -I: Sigma(t) = e^{-2t} Sigma0 + (1 - e^{-2t}) C C^T / 2
  const Matrix c = matrix_from_rows({{1.0, 0.0}, {0.5, 0.3}});
  const Matrix cov0 = matrix_from_rows({{0.2, 0.1}, {0.1, 0.4}});
  const SDEModel m(-Matrix::Identity(2, 2), Vector::Zero(2), c);
  const auto ms = propagate_moments(m, kNoProgram, Vector::Zero(2), cov0, 0.0, 1.5, 0.01);
  const double e = std::exp(-3.0);
  const Matrix ref = e * cov0 + (1.0 - e) * 0.5 * c * c.transpose();
  EXPECT_NEAR((ms.back().cov - ref).norm(), 0.0, 1e-10);
}

TEST(EnsembleVsMoments, LinearModelsAgreeWithinMonteCarloError) {
  Rng r(2024);
  for (int model_idx = 0; model_idx < 2; ++model_idx) {
    const Matrix a = random_stable_matrix(r, 3);
    const Vector b = thermoai::testing::random_matrix(r, 3, 1, 0.5);
    const Matrix c = thermoai::testing::random_matrix(r, 3, 3, 0.6);
    const SDEModel m(a, b, c);
    const Vector mu0 = vector_of({0.5, -0.5, 1.0});
    const Matrix l0 = 0.3 * Matrix::Identity(3, 3);
    InitialSampler init = [&](Rng& rng) {
      Vector z(3);
      for (int i = 0; i < 3; ++i) z(i) = rng.normal();
      return Vector(mu0 + l0 * z);
    };
    EnsembleOptions opts;
    opts.record_stride = 25;
    const std::size_t n = 20000;
    const auto s = simulate_ensemble(m, kNoProgram, nullptr, init, 0.0, 1.0, 0.004, n, 77 + model_idx, opts);
    const auto ms = propagate_moments(m, kNoProgram, mu0, l0 * l0.transpose(), 0.0, 1.0, 0.004);
    for (std::size_t k = 1; k < s.times.size(); ++k) {
      const auto& g = ms[k * 25 < ms.size() ? k * 25 : ms.size() - 1];
      ASSERT_NEAR(g.t, s.times[k], 1e-12);
      for (int i = 0; i < 3; ++i) {
        const double se = std::sqrt(s.cov[k](i, i) / n);
        EXPECT_LT(std::abs(s.mean[k](i) - g.mean(i)), 3.0 * se + 1e-12) << "t=" << g.t;
      }
      EXPECT_LT(rel_frobenius(s.cov[k], g.cov), 0.10) << "t=" << g.t;
    }
  }
}

TEST(EnsembleVsMoments, HalvingStepStaysInsideMonteCarloBand) {
  Rng r(5);
  const SDEModel m(random_stable_matrix(r, 2), Vector::Ones(2), Matrix::Identity(2, 2));
  EnsembleOptions opts;
  opts.record_stride = 1000000;  // endpoints only
  const std::size_t n = 20000;
  const auto coarse = simulate_ensemble(m, kNoProgram, nullptr, [](Rng&) { return Vector::Zero(2); }, 0.0, 1.0, 0.02,
                                        n, 1, opts);
  const auto fine = simulate_ensemble(m, kNoProgram, nullptr, [](Rng&) { return Vector::Zero(2); }, 0.0, 1.0, 0.01,
                                      n, 2, opts);
  for (int i = 0; i < 2; ++i) {
    const double band = 3.0 * std::sqrt((coarse.cov.back()(i, i) + fine.cov.back()(i, i)) / n);
    EXPECT_LT(std::abs(coarse.mean.back()(i) - fine.mean.back()(i)), band);
  }
  EXPECT_LT(rel_frobenius(coarse.cov.back(), fine.cov.back()), 0.10);
}

TEST(MonteCarloExpectation, Examples) {
  std::vector<Vector> xs;
  Rng rng(31);
  for (int i = 0; i < 100000; ++i) xs.push_back(vector_of({rng.normal(), rng.normal()}));
  EXPECT_DOUBLE_EQ(monte_carlo_expectation(xs, [](const Vector&) { return 3.0; }), 3.0);
  EXPECT_NEAR(monte_carlo_expectation(xs, [](const Vector& x) { return x(0); }), 0.0, 0.02);
  EXPECT_NEAR(monte_carlo_expectation(xs, [](const Vector& x) { return x(0) * x(0); }), 1.0, 0.02);
  std::vector<Vector> none;
  EXPECT_THROW(monte_carlo_expectation(none, [](const Vector&) { return 1.0; }), ContractError);
}

TEST(TrajectoryCsv, HeaderAndRows) {
  const SDEModel m = vp_model(2, 2.0);
  const auto tr = simulate_trajectory(m, kNoProgram, nullptr, Vector::Zero(2), 0.0, 0.2, 0.1, 1);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,v1,v2");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
