// Acceptance run: one PASS/FAIL line per criterion. `acceptance 3 7` runs a subset.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sde_oracles.hpp"
#include "thermoai/apps/apps.hpp"
#include "thermoai/apps/error_correction.hpp"
#include "thermoai/circuit/compiler.hpp"
#include "thermoai/cli/run.hpp"
#include "thermoai/demon/force.hpp"
#include "thermoai/sbit/oracle.hpp"
#include "thermoai/sbit/sampler.hpp"
#include "thermoai/training/perturb.hpp"
#include "thermoai/training/trainer.hpp"

using namespace thermoai;
using namespace thermoai::apps;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Vector row_of(const Matrix& x) { return x.row(0).transpose(); }

double mean1(const Matrix& x) { return x.row(0).mean(); }

double var1(const Matrix& x) { return sample_cov(x)(0, 0); }

// 1. Ensemble covariance vs RK4 moment flow on random stable 4-dim models.
void moment_oracle(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  Rng r(20240601);
  double worst = 0.0;
  for (int m = 0; m < 5; ++m) {
    const Matrix a = thermoai::testing::random_stable_matrix(r, 4);
    const Vector b = thermoai::testing::random_matrix(r, 4, 1, 0.5);
    const Matrix c = thermoai::testing::random_matrix(r, 4, 4, 0.6);
    const Eigen::EigenSolver<Matrix> es(a);
    o.check((es.eigenvalues().real().array() < 0.0).all(), "model " + std::to_string(m) + " not stable");
    const sde::SDEModel model(a, b, c);
    const Vector mu0 = thermoai::testing::random_matrix(r, 4, 1, 1.0);
    const Matrix l0 = 0.4 * Matrix::Identity(4, 4);
    const sde::InitialSampler init = [&](Rng& g) {
      Vector z(4);
      for (int i = 0; i < 4; ++i) z(i) = g.normal();
      return Vector(mu0 + l0 * z);
    };
    sde::EnsembleOptions opts;
    opts.record_stride = 100;
    opts.threads = workers();
    const auto s = sde::simulate_ensemble(model, {}, nullptr, init, 0.0, 2.0, 1e-3, 20000, 100 + m, opts);
    const auto ms = sde::propagate_moments(model, {}, mu0, l0 * l0.transpose(), 0.0, 2.0, 1e-3);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      const auto& g = ms[std::min(k * 100, ms.size() - 1)];
      o.check(std::abs(g.t - s.times[k]) < 1e-12, "checkpoint times differ");
      worst = std::max(worst, thermoai::testing::rel_frobenius(s.cov[k], g.cov));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.detail << "worst rel. Frobenius error " << worst << " over 5 models x 21 checkpoints; " << secs << " s";
  o.check(worst < 0.10, "covariance error >= 10%");
  o.check(secs < 60.0, "took >= 60 s");
}

// 2. VP forward process with constant beta = 2 keeps unit variance.
void vp_stationarity(Outcome& o) {
  DiffusionSpec spec{training::NoiseSchedule::vp_constant(2.0, 5.0), 2};
  const auto paths = diffusion_forward(spec, Matrix::Zero(2, 10000), 1e-3, 31, 1000);
  const Matrix cov = sample_cov(paths.states.back());
  o.detail << "Var at t=5: (" << cov(0, 0) << ", " << cov(1, 1) << ")";
  for (int i = 0; i < 2; ++i) o.check(std::abs(cov(i, i) - 1.0) <= 0.05, "variance outside 1 +- 0.05");
}

// 3. VE forward process: Var(t) grows at rate c0^2.
void ve_law(Outcome& o) {
  const double c0 = 1.5;
  DiffusionSpec spec{training::NoiseSchedule::ve(c0, 1.0), 1};
  const auto paths = diffusion_forward(spec, Matrix::Zero(1, 10000), 1e-3, 32, 50);
  std::vector<double> t, v;
  for (std::size_t k = 0; k < paths.times.size(); ++k) {
    t.push_back(paths.times[k]);
    v.push_back(k == 0 ? 0.0 : var1(paths.states[k]));
  }
  const double slope = thermoai::testing::fitted_slope(t, v);
  o.detail << "fitted slope " << slope << " vs c0^2 = " << c0 * c0;
  o.check(std::abs(slope / (c0 * c0) - 1.0) <= 0.05, "slope off by more than 5%");
}

// 4. Single s-bit occupancy and inter-event times.
void sbit_stationarity(Outcome& o) {
  using sbit::RateSchedule;
  const auto tr = sbit::sample_sbit_trajectory(RateSchedule::constant(1.0), RateSchedule::constant(3.0), 0, 20000.0, 41);
  const auto occ = tr.occupancy();
  const double lambda = 2.0;
  const auto sym = sbit::sample_sbit_trajectory(RateSchedule::constant(lambda), RateSchedule::constant(lambda), 0,
                                                10000.0, 42);
  double prev = sym.t0, sum = 0.0;
  for (const auto& [t, x] : sym.jumps) {
    sum += t - prev;
    prev = t;
  }
  const double mean_gap = sum / static_cast<double>(sym.jumps.size());
  o.detail << "occupancy (" << occ[0] << ", " << occ[1] << "); mean gap x lambda " << mean_gap * lambda << " over "
           << sym.jumps.size() << " events";
  o.check(std::abs(occ[0] - 0.75) <= 0.02 && std::abs(occ[1] - 0.25) <= 0.02, "occupancy outside +-0.02");
  o.check(std::abs(mean_gap * lambda - 1.0) <= 0.03, "mean inter-event time off by more than 3%");
}

// 5. Three-bit single-flip CTMC with time-dependent rates vs the dense propagator.
void coupled_ctmc(Outcome& o) {
  using sbit::RateSchedule;
  const std::vector<RateSchedule> up{RateSchedule::constant(1.0), RateSchedule::piecewise_linear({0.0, 1.0}, {0.5, 2.5}),
                                     RateSchedule::constant(2.0)};
  const std::vector<RateSchedule> down{RateSchedule::constant(1.5), RateSchedule::constant(3.0),
                                       RateSchedule::piecewise_constant({0.0, 0.5, 1.0}, {0.2, 1.0})};
  const auto sys = sbit::single_flip_system(up, down);
  const int n = 20000;
  Vector emp = Vector::Zero(8);
  for (int i = 0; i < n; ++i)
    emp(static_cast<Eigen::Index>(sbit::sample_coupled_trajectory(sys, 0, 1.0, {51, static_cast<std::uint64_t>(i)}).state_at(1.0))) += 1.0;
  emp /= n;
  const Vector exact = sbit::transient_distribution(sys, Vector::Unit(8, 0), 1.0);
  const double tv = sbit::total_variation(emp, exact);
  o.detail << "TV(empirical, oracle) at t=1: " << tv;
  o.check(tv < 0.03, "TV >= 0.03");
}

// 6. Circuit compiler: two-cell conductance matrix and single-cell equipartition.
void circuit_compiler(Outcome& o) {
  using namespace thermoai::circuit;
  RCNetlist two;
  two.cells = {{1.0, 1.0, 300.0}, {1.0, 1.0, 300.0}};
  two.couplings = {{0, 1, CouplingKind::Resistive, 1.0, true}};
  const auto c2 = compile_network(two);
  const Matrix j = matrix_from_rows({{2.0, -1.0}, {-1.0, 2.0}});
  o.check(c2.coupling_matrix == j, "J != [[2,-1],[-1,2]]");
  o.check(c2.model.A0() == Matrix(-j), "A0 != -J");

  const double r = 1e3, cap = 1e-9, temp = 300.0, rc = r * cap;
  const auto cell = compile_rc_cell(r, cap, temp);
  sde::EnsembleOptions opts;
  opts.record_stride = 1000;
  opts.threads = workers();
  const auto s = sde::simulate_ensemble(cell, {}, nullptr, [](Rng&) { return Vector::Zero(1); }, 0.0, 10.0 * rc,
                                        0.01 * rc, 20000, 61, opts);
  const double var = s.cov.back()(0, 0), ref = kBoltzmann * temp / cap;
  o.detail << "J exact: " << (c2.coupling_matrix == j ? "yes" : "no") << "; single-cell Var " << var << " vs k_B T/C "
           << ref << " (ratio " << var / ref << ")";
  o.check(std::abs(var / ref - 1.0) <= 0.10, "variance off by more than 10%");
}

// 7. Diffusion round trip with the exact score; trained score on the +-1 mixture.
void diffusion_round_trip(Outcome& o) {
  DiffusionSpec spec;
  Rng data(71);
  Matrix x0(1, 10000);
  for (Eigen::Index c = 0; c < x0.cols(); ++c) x0(0, c) = 2.0 + 0.5 * data.normal();
  const auto fwd = diffusion_forward(spec, x0, 1e-3, 72, 1000);
  const MarginalScoreDemon exact(spec.schedule, demon::Gaussian::isotropic(vector_of({2.0}), 0.25));
  const Matrix back = diffusion_reverse_from(training::reverse_device(spec.schedule, 1), exact, fwd.states.back(), 1e-3, 73);
  const double m = mean1(back), v = var1(back);
  o.detail << "exact score: mean " << m << ", var " << v;
  o.check(std::abs(m - 2.0) <= 0.05, "mean outside 2 +- 0.05");
  o.check(std::abs(v / 0.25 - 1.0) <= 0.10, "variance off by more than 10%");

  const auto mix = symmetric_mixture_1d(1.0, 0.25);
  demon::ScoreNetworkDemon net(1, {32, 32}, demon::TimeEmbedding::sinusoidal(4), 74);
  training::TrainConfig tc;
  tc.steps = 4000;
  tc.learning_rate = 5e-3;
  tc.cosine_decay = true;
  tc.seed = 75;
  training::train_demon(net, training::DsmObjective(spec.schedule, [&](Rng& g) { return mix.sample(g); }, 128), tc);
  const Matrix xs = diffusion_reverse(spec, net, 10000, 2e-3, 76);
  const double right = (xs.array() > 0.0).cast<double>().mean();
  o.detail << "; trained score: mode weights (" << 1.0 - right << ", " << right << "), mean |x| "
           << xs.array().abs().mean();
  o.check(std::abs(right - 0.5) <= 0.1, "mode weights outside 0.5 +- 0.1");
}

// 8. SGHMC, SGLD and HMC on N(0, I2) agree pairwise.
void sampler_agreement(Outcome& o) {
  const auto target = standard_normal_target(2);
  const Matrix id = Matrix::Identity(2, 2);
  const std::size_t kept = 50000;
  // Each chain keeps 5e4 samples after the default 20% burn-in.
  const std::size_t total = kept * 5 / 4;
  SghmcOptions so;
  so.thin = 80;
  const auto a = sghmc_sample(target, id, 2.0 * id, total * so.thin, 0.05, 81, so);
  SgldOptions lo;
  lo.thin = 120;
  const auto b = sgld_sample(target, StepSchedule::constant(0.05), total * lo.thin, 82, lo);
  const auto c = hmc_sample(target, id, 10, 0.15, total, 83);
  const std::vector<std::pair<const char*, const Chain*>> chains{{"SGHMC", &a}, {"SGLD", &b}, {"HMC", &c}};
  double worst_mean = 0.0, worst_cov = 0.0;
  for (const auto& [name, ch] : chains) {
    o.check(static_cast<std::size_t>(ch->size()) == kept, std::string(name) + " kept " + std::to_string(ch->size()));
    o.detail << name << " mean (" << sample_mean(ch->samples).transpose() << ") diag cov ("
             << sample_cov(ch->samples).diagonal().transpose() << "); ";
  }
  for (std::size_t i = 0; i < chains.size(); ++i)
    for (std::size_t j = 0; j < chains.size(); ++j) {
      if (i == j) continue;
      const auto& x = chains[i].second->samples;
      const auto& y = chains[j].second->samples;
      worst_mean = std::max(worst_mean, (sample_mean(x) - sample_mean(y)).cwiseAbs().maxCoeff());
      worst_cov = std::max(worst_cov, thermoai::testing::rel_frobenius(sample_cov(x), sample_cov(y)));
    }
  const auto tiny = hmc_sample(target, id, 10, 1e-3, 2000, 84);
  o.detail << "worst pairwise mean gap " << worst_mean << ", cov gap " << worst_cov << "; HMC acceptance at 1e-3 "
           << tiny.acceptance;
  o.check(worst_mean <= 0.03, "mean gap > 0.03");
  o.check(worst_cov <= 0.10, "covariance gap > 10%");
  o.check(tiny.acceptance > 0.99, "HMC acceptance <= 0.99");
}

// 9. Annealer on the double well.
void annealer(Outcome& o) {
  const auto loss = double_well_target();
  const Matrix s = Matrix::Constant(1, 1, std::sqrt(2.0));
  std::vector<int> hit(100, 0);
  parallel_for(100, workers(), [&](std::size_t k) {
    AnnealOptions opts;
    opts.x0 = vector_of({0.0});
    opts.record_stride = 100;
    const auto r = anneal(loss, s, 20000, 0.01, 900 + k, opts);
    hit[k] = std::abs(std::abs(r.best_x(0)) - 1.0) < 0.05;
  });
  int wins = 0;
  for (int h : hit) wins += h;
  AnnealOptions lo;
  lo.record_stride = 5;
  const auto r = anneal(loss, s, 1000000, 0.02, 999, lo);
  const auto first = burn_in_count(r.chain.size(), kDefaultBurnIn);
  const Matrix tail = r.chain.samples.rightCols(r.chain.size() - first);
  const Vector xs = row_of(tail);
  const double tv = histogram_tv({xs.data(), xs.data() + xs.size()}, [](double x) { return std::pow(x * x - 1.0, 2); },
                                 -2.5, 2.5);
  o.detail << wins << "/100 runs in a global basin; long-run histogram TV " << tv;
  o.check(wins >= 95, "fewer than 95 successes");
  o.check(tv < 0.05, "TV >= 0.05");
}

// 10. In-situ retraining under a 10% multiplicative A0 perturbation.
void error_correction(Outcome& o) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ErrorCorrectionConfig cfg;
    cfg.seed = seed;
    const auto r = run_error_correction(cfg);
    o.detail << "seed " << seed << " (perturbed A0 " << r.perturbed_a0 << "): base " << r.baseline << " in-situ " << r.in_situ << " ideal-on-perturbed "
             << r.ideal_on_perturbed << "; ";
    o.check(r.in_situ <= 1.2 * r.baseline, "seed " + std::to_string(seed) + " in-situ > 1.2 x baseline");
    o.check(r.in_situ < r.ideal_on_perturbed, "seed " + std::to_string(seed) + " in-situ not below ideal-on-perturbed");
  }
}

// 11. Gradient checks.
void gradient_checks(Outcome& o) {
  using namespace training;
  double worst_dsm = 0.0;
  for (int variant = 0; variant < 2; ++variant) {
    const auto sched = variant == 0 ? NoiseSchedule::vp(0.1, 20.0) : NoiseSchedule::ve(2.0);
    demon::ScoreNetworkDemon net(2, {8, 8},
                                 variant == 0 ? demon::TimeEmbedding::sinusoidal(2) : demon::TimeEmbedding::affine(), 110 + variant);
    auto dev = reverse_device(sched, 2);
    dev.model = perturb_model(dev.model, {PerturbationSpec::Mode::Multiplicative, 0.1, 0.0, 0.1, 111});
    const DsmObjective obj(sched, [](Rng& g) { return Vector(vector_of({0.5 + g.normal(), -0.5 + 0.5 * g.normal()})); }, 16, dev);
    for (auto mode : {TrainMode::ExSitu, TrainMode::InSitu}) {
      Rng rng(112);
      const DsmBatch batch = obj.draw(rng);
      Vector grad = Vector::Zero(net.network().n_params());
      obj.evaluate(net, batch, mode, &grad);
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < grad.size(); ++i) {
        auto p = net, m = net;
        p.network().mutable_params()(i) += h;
        m.network().mutable_params()(i) -= h;
        const double fd = (obj.evaluate(p, batch, mode, nullptr) - obj.evaluate(m, batch, mode, nullptr)) / (2 * h);
        worst_dsm = std::max(worst_dsm, std::abs(grad(i) - fd) / std::max(std::abs(fd), 1e-3));
      }
    }
  }
  Rng rng(113);
  const std::vector<demon::PotentialPtr> catalog{
      std::make_shared<demon::QuadraticPotential>(matrix_from_rows({{2.0, 0.3}, {0.3, 1.0}}), vector_of({0.5, -1.0})),
      std::make_shared<demon::DoubleWellPotential>(2, 1.5, 1.0),
      mixture_target(demon::GaussianMixture({0.4, 0.6}, {demon::Gaussian::isotropic(vector_of({-1.0, 0.0}), 0.5),
                                                         demon::Gaussian::isotropic(vector_of({1.0, 1.0}), 1.0)})),
      std::make_shared<demon::NetworkPotential>(demon::Mlp({3, 16, 16, 1}, 114)),
      std::make_shared<demon::ScaledPotential>(gates::ScalarFunction::affine(1.0, 2.0),
                                               std::make_shared<demon::DoubleWellPotential>(2)),
      tilted_double_well_target(0.3)};
  double worst_force = 0.0;
  for (const auto& u : catalog) {
    const auto n = u->dim();
    for (int k = 0; k < 100; ++k) {
      Vector x(n);
      for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.5 * rng.normal();
      const double t = rng.uniform();
      demon::ForceDemon a(u, Matrix::Identity(n, n), x);
      demon::ForceDemon f(u, Matrix::Identity(n, n), x, {demon::GradientMode::FiniteDifference, 1e-4, std::nullopt, 0});
      const Vector fa = a.force(t), ff = f.force(t);
      worst_force = std::max(worst_force, (fa - ff).norm() / std::max(fa.norm(), 1e-3));
    }
  }
  o.detail << "DSM backprop max rel. error " << worst_dsm << "; ForceDemon analytic vs FD max rel. error "
           << worst_force << " over " << catalog.size() << " potentials";
  o.check(worst_dsm < 1e-4, "DSM gradient error >= 1e-4");
  o.check(worst_force < 1e-5, "force gradient error >= 1e-5");
}

// 12. Every CLI subcommand is hash-stable across repeated runs.
void cli_determinism(Outcome& o) {
  const fs::path dir = fs::path(THERMOAI_SOURCE_DIR) / "configs";
  std::set<std::string> covered;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::ostringstream sink;
  for (const auto& f : files) {
    const auto cfg = cli::read_json_file(f, "config");
    if (!cfg.contains("command")) continue;
    const auto cmd = cfg["command"].get<std::string>();
    Json hashes[2];
    for (int rep = 0; rep < 2; ++rep) {
      cli::RunOptions opts;
      opts.output_dir = (fs::temp_directory_path() / ("thermoai_acceptance_" + f.stem().string() + "_" + std::to_string(rep))).string();
      opts.base_dir = dir;
      opts.out = &sink;
      opts.err = &sink;
      const auto r = cli::run_experiment(cmd, cfg, opts);
      o.check(r.exit_code == 0, cmd + " exited with " + std::to_string(r.exit_code));
      hashes[rep] = r.manifest.value("artifacts", Json::object());
    }
    o.check(!hashes[0].empty() && hashes[0] == hashes[1], cmd + " artifacts differ between runs");
    covered.insert(cmd);
  }
  for (const auto& name : cli::subcommands()) o.check(covered.count(name) == 1, "no config for " + name);
  o.detail << covered.size() << "/" << cli::subcommands().size() << " subcommands hash-identical across two runs";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria{
      {"moment-oracle agreement", moment_oracle},     {"VP stationarity", vp_stationarity},
      {"VE variance law", ve_law},                    {"s-bit stationarity", sbit_stationarity},
      {"coupled CTMC oracle", coupled_ctmc},          {"circuit compiler", circuit_compiler},
      {"diffusion round trip", diffusion_round_trip}, {"sampler cross-validation", sampler_agreement},
      {"annealer", annealer},                         {"error-correction ordering", error_correction},
      {"gradient checks", gradient_checks},           {"CLI determinism", cli_determinism}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
