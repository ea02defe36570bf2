#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "thermoai/apps/apps.hpp"
#include "thermoai/circuit/compiler.hpp"
#include "thermoai/cli/config.hpp"
#include "thermoai/demon/serialize.hpp"
#include "thermoai/gates/json.hpp"
#include "thermoai/sbit/oracle.hpp"
#include "thermoai/sbit/sampler.hpp"
#include "thermoai/sde/io.hpp"
#include "thermoai/training/perturb.hpp"
#include "thermoai/training/trainer.hpp"

#ifndef THERMOAI_VERSION
#define THERMOAI_VERSION "unknown"
#endif

namespace thermoai::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDivergence = 3 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate",       "sample-diffusion", "sghmc",        "sgld",
                                              "hmc",            "anneal",           "sbit",         "compile-circuit",
                                              "train-demon",    "nsde-rollout",     "latent-rollout"};
  return names;
}

/// Command-line overrides; unset fields leave the config alone.
struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  /// Directory relative file references are resolved against.
  std::filesystem::path base_dir = ".";
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

struct RunResult {
  int exit_code = kOk;
  std::string error;
  Json manifest;
  std::filesystem::path output_dir;
};

namespace detail {

struct Context {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::map<std::string, std::string> artifacts;
  std::ostream* out = nullptr;

  void add(const std::string& name, const std::string& bytes) { artifacts[name] = bytes; }
  void add_json(const std::string& name, const Json& j) { add(name, j.dump(2) + "\n"); }
};

inline std::ostringstream csv_stream() {
  std::ostringstream os;
  os.precision(17);
  return os;
}

inline Json cov_json(const Matrix& m) { return matrix_rows(m); }

inline std::string samples_csv(const Matrix& x, const std::vector<double>* times = nullptr, const char* tname = "t") {
  auto os = csv_stream();
  const bool with_t = times && static_cast<Eigen::Index>(times->size()) == x.cols();
  os << (with_t ? tname : "index");
  for (Eigen::Index r = 0; r < x.rows(); ++r) os << ",x" << (r + 1);
  os << '\n';
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (with_t) os << (*times)[static_cast<std::size_t>(c)];
    else os << c;
    for (Eigen::Index r = 0; r < x.rows(); ++r) os << ',' << x(r, c);
    os << '\n';
  }
  return os.str();
}

inline Json moments_json(const Matrix& x) {
  Json j{{"n_samples", x.cols()}, {"mean", vector_to_json(apps::sample_mean(x))}};
  if (x.cols() >= 2) j["cov"] = cov_json(apps::sample_cov(x));
  return j;
}

/// {"lo", "hi", "bins"}: histogram TV of a 1D chain against exp(-u).
inline std::optional<double> maybe_tv(const Node& c, const Matrix& x, const std::function<double(double)>& u) {
  if (!c.has("tv")) return std::nullopt;
  const Node tv = c.child("tv");
  tv.allow({"lo", "hi", "bins"});
  if (x.rows() != 1) throw ConfigError(tv.path(), "histogram TV needs a one-dimensional target");
  const double lo = tv.get<double>("lo"), hi = tv.get<double>("hi");
  if (!(hi > lo)) throw ConfigError(tv.field("hi"), "must exceed lo");
  const int bins = static_cast<int>(tv.count("bins", 60));
  std::vector<double> xs(x.data(), x.data() + x.cols());
  return apps::histogram_tv(xs, u, lo, hi, bins);
}

inline sde::SDEModel model_from(const Node& m) {
  m.allow({"A0", "b0", "C0", "D0"});
  const Matrix a = m.matrix("A0");
  const auto n = a.rows();
  if (n == 0 || a.cols() != n) throw ConfigError(m.field("A0"), "must be a nonempty square matrix");
  const Vector b = m.vector("b0", Vector::Zero(n));
  const Matrix c = m.matrix("C0");
  if (b.size() != n) throw ConfigError(m.field("b0"), "must have " + std::to_string(n) + " entries");
  if (c.rows() != n || c.cols() != n) throw ConfigError(m.field("C0"), "must be " + std::to_string(n) + " x " + std::to_string(n));
  if (!m.has("D0")) return sde::SDEModel(a, b, c);
  const Matrix d = m.matrix("D0");
  if (d.rows() != n) throw ConfigError(m.field("D0"), "must have " + std::to_string(n) + " rows");
  return sde::SDEModel(a, b, c, d);
}

inline gates::GateProgram program_from(const Node& c, const sde::SDEModel& model) {
  if (!c.has("program")) return {};
  auto p = gates::program_from_json(c.raw("program"), c.field("program"));
  try {
    p.check_compatible(model);
  } catch (const ContractError& e) {
    throw ConfigError(c.field("program"), e.what());
  }
  return p;
}

inline training::NoiseSchedule schedule_from(const Node& s) {
  const auto kind = s.get<std::string>("kind");
  if (kind == "vp") {
    s.allow({"kind", "beta_min", "beta_max", "T"});
    return training::NoiseSchedule::vp(s.positive("beta_min"), s.positive("beta_max"), s.positive("T", 1.0));
  }
  if (kind == "ve") {
    s.allow({"kind", "c0", "T"});
    return training::NoiseSchedule::ve(s.positive("c0"), s.positive("T", 1.0));
  }
  throw ConfigError(s.field("kind"), "expected vp or ve");
}

/// {"kind": "gaussian", "mean", "cov"} or {"kind": "mixture", "weights", "means", "variances"}.
inline demon::GaussianMixture data_law_from(const Node& d) {
  const auto kind = d.get<std::string>("kind");
  try {
    if (kind == "gaussian") {
      d.allow({"kind", "mean", "cov"});
      const Vector mean = d.vector("mean");
      const Matrix cov = d.matrix("cov", Matrix::Identity(mean.size(), mean.size()));
      return demon::GaussianMixture({1.0}, {demon::Gaussian(mean, cov)});
    }
    if (kind == "mixture") {
      d.allow({"kind", "weights", "means", "variances"});
      const auto w = d.get<std::vector<double>>("weights");
      const auto& means = d.raw("means");
      const auto vars = d.get<std::vector<double>>("variances");
      if (!means.is_array() || means.size() != w.size() || vars.size() != w.size())
        throw ConfigError(d.field("weights"), "weights, means and variances must have equal length");
      std::vector<demon::Gaussian> comps;
      for (std::size_t k = 0; k < w.size(); ++k)
        comps.push_back(demon::Gaussian::isotropic(vector_from_json(means[k], d.field("means/" + std::to_string(k))), vars[k]));
      return demon::GaussianMixture(w, comps);
    }
  } catch (const ContractError& e) {
    throw ConfigError(d.path(), e.what());
  }
  throw ConfigError(d.field("kind"), "expected gaussian or mixture");
}

inline training::PerturbationSpec perturbation_from(const Node& p, std::uint64_t seed) {
  p.allow({"mode", "eps_a", "eps_b", "eps_c"});
  training::PerturbationSpec s;
  const auto mode = p.get<std::string>("mode", "multiplicative");
  if (mode == "multiplicative") s.mode = training::PerturbationSpec::Mode::Multiplicative;
  else if (mode == "additive") s.mode = training::PerturbationSpec::Mode::Additive;
  else throw ConfigError(p.field("mode"), "expected additive or multiplicative");
  s.eps_a = p.get<double>("eps_a", 0.0);
  s.eps_b = p.get<double>("eps_b", 0.0);
  s.eps_c = p.get<double>("eps_c", 0.0);
  for (const char* k : {"eps_a", "eps_b", "eps_c"})
    if (p.get<double>(k) < 0.0) throw ConfigError(p.field(k), "must be nonnegative");
  s.seed = seed;
  return s;
}

inline demon::TimeEmbedding embedding_from(const Node& e) {
  const auto kind = e.get<std::string>("kind", "sinusoidal");
  if (kind == "affine") {
    e.allow({"kind", "scale"});
    return demon::TimeEmbedding::affine(e.get<double>("scale", 1.0));
  }
  if (kind == "sinusoidal") {
    e.allow({"kind", "size", "max_frequency"});
    return demon::TimeEmbedding::sinusoidal(static_cast<int>(e.count("size", 4)), e.positive("max_frequency", 64.0));
  }
  throw ConfigError(e.field("kind"), "expected affine or sinusoidal");
}

inline demon::ScoreNetworkDemon checkpoint_from(const Node& c, const std::string& key) {
  return demon::score_network_from_json(c.raw(key), c.field(key));
}

inline apps::Target target_from(const Node& c, const std::string& key) {
  return apps::target_from_json(c.raw(key), c.field(key));
}

inline Matrix spd_from(const Node& c, const std::string& key, Eigen::Index n) {
  const Matrix m = c.matrix(key, Matrix::Identity(n, n));
  if (m.rows() != n || m.cols() != n) throw ConfigError(c.field(key), "must be " + std::to_string(n) + " x " + std::to_string(n));
  if (!is_spd(m)) throw ConfigError(c.field(key), "must be symmetric positive definite");
  return m;
}

inline Vector sized_vector(const Node& c, const std::string& key, Eigen::Index n) {
  const Vector v = c.vector(key, Vector::Zero(n));
  if (v.size() != n) throw ConfigError(c.field(key), "must have " + std::to_string(n) + " entries");
  return v;
}

inline double burn_in_from(const Node& c) {
  const double b = c.get<double>("burn_in", apps::kDefaultBurnIn);
  if (!(b >= 0.0 && b < 1.0)) throw ConfigError(c.field("burn_in"), "must lie in [0, 1)");
  return b;
}

// ---- subcommands ----

inline void run_simulate(const Node& c, Context& ctx) {
  c.allow({"model", "program", "x0", "cov0", "t0", "tf", "dt", "n_traj", "record_stride"});
  const auto model = model_from(c.child("model"));
  const auto program = program_from(c, model);
  const auto n = model.dim();
  const Vector x0 = sized_vector(c, "x0", n);
  const Matrix cov0 = c.matrix("cov0", Matrix::Zero(n, n));
  if (cov0.rows() != n || cov0.cols() != n || symmetry_defect(cov0) > 1e-10 || min_symmetric_eigenvalue(cov0) < -1e-12)
    throw ConfigError(c.field("cov0"), "must be a symmetric PSD " + std::to_string(n) + " x " + std::to_string(n) + " matrix");
  const double t0 = c.get<double>("t0", 0.0);
  const double tf = c.get<double>("tf");
  if (!(tf > t0)) throw ConfigError(c.field("tf"), "must exceed t0");
  const double dt = c.positive("dt");
  const auto n_traj = c.count("n_traj", 1000);
  const auto stride = c.count("record_stride", 1);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov0);
  const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const sde::InitialSampler init = [&](Rng& r) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = r.normal();
    return Vector(x0 + root * z);
  };

  Rng r0(ctx.seed, 0);
  const Vector v0 = init(r0);
  const auto traj = sde::simulate_trajectory(model, program, nullptr, v0, t0, tf, dt, {ctx.seed, 0});
  sde::Trajectory kept;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (k % stride == 0 || k + 1 == traj.size()) kept.push_back(traj[k]);
  std::ostringstream tcsv;
  sde::write_trajectory_csv(tcsv, kept);
  ctx.add("trajectory.csv", tcsv.str());

  sde::EnsembleOptions eo;
  eo.record_stride = stride;
  eo.threads = ctx.threads;
  const auto summary = sde::simulate_ensemble(model, program, nullptr, init, t0, tf, dt, n_traj, ctx.seed, eo);
  const auto oracle_all = sde::propagate_moments(model, program, x0, cov0, t0, tf, dt);
  std::vector<sde::GaussianMoments> oracle;
  for (std::size_t k = 0; k < oracle_all.size(); ++k)
    if (k % stride == 0 || k + 1 == oracle_all.size()) oracle.push_back(oracle_all[k]);
  Json err = Json::array();
  for (std::size_t k = 0; k < summary.times.size(); ++k) {
    const double ref = oracle[k].cov.norm();
    err.push_back(ref > 0.0 ? (summary.cov[k] - oracle[k].cov).norm() / ref : (summary.cov[k] - oracle[k].cov).norm());
  }
  Json m{{"ensemble", sde::summary_to_json(summary)}, {"oracle", sde::moments_to_json(oracle)}, {"cov_rel_error", err}};
  ctx.add_json("moments.json", m);
}

inline void run_sample_diffusion(const Node& c, Context& ctx) {
  c.allow({"schedule", "data", "score", "n_samples", "dt", "perturbation"});
  const auto schedule = schedule_from(c.child("schedule"));
  std::optional<demon::GaussianMixture> law;
  if (c.has("data")) law = data_law_from(c.child("data"));
  std::unique_ptr<demon::Demon> score;
  if (c.has("score")) score = std::make_unique<demon::ScoreNetworkDemon>(checkpoint_from(c, "score"));
  else if (law) score = std::make_unique<apps::MarginalScoreDemon>(schedule, *law);
  else throw ConfigError(c.field("score"), "need a score checkpoint or a data law");
  const auto dim = score->input_dim();
  if (law && law->dim() != dim) throw ConfigError(c.field("data"), "dimension differs from the score network");
  const auto n = c.count("n_samples", 10000);
  const double dt = c.positive("dt", 1e-3);
  auto device = training::reverse_device(schedule, dim);
  if (c.has("perturbation"))
    device.model = training::perturb_model(device.model, perturbation_from(c.child("perturbation"), derive_seed(ctx.seed, 10)));
  const Matrix x = apps::diffusion_reverse(device, schedule, *score, n, dt, ctx.seed);
  ctx.add("samples.csv", samples_csv(x));
  Json m = moments_json(x);
  if (law && law->components().size() == 1) {
    const auto& g = law->components().front();
    m["moment_error"] = apps::moment_error(x, g.mean(), g.cov());
  } else if (law) {
    std::vector<double> counts(law->components().size(), 0.0);
    for (Eigen::Index s = 0; s < x.cols(); ++s) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < counts.size(); ++k)
        if ((x.col(s) - law->components()[k].mean()).norm() < (x.col(s) - law->components()[best].mean()).norm()) best = k;
      counts[best] += 1.0;
    }
    for (auto& w : counts) w /= static_cast<double>(x.cols());
    m["mode_weights"] = counts;
  }
  ctx.add_json("metrics.json", m);
}

inline Json chain_metrics(const apps::Chain& ch) { return moments_json(ch.samples); }

inline void run_sghmc(const Node& c, Context& ctx) {
  c.allow({"target", "mass", "friction", "n_steps", "dt", "x0", "p0", "gradient_noise_cov", "burn_in", "thin", "tv"});
  const auto target = target_from(c, "target");
  const auto n = target->dim();
  const Matrix mass = spd_from(c, "mass", n);
  const Matrix friction = spd_from(c, "friction", n);
  apps::SghmcOptions o;
  o.x0 = sized_vector(c, "x0", n);
  o.p0 = sized_vector(c, "p0", n);
  if (c.has("gradient_noise_cov")) o.gradient_noise_cov = spd_from(c, "gradient_noise_cov", n);
  o.burn_in = burn_in_from(c);
  o.thin = c.count("thin", 1);
  const auto ch = apps::sghmc_sample(target, mass, friction, c.count("n_steps"), c.positive("dt"), ctx.seed, o);
  ctx.add("chain.csv", samples_csv(ch.samples, &ch.times));
  Json m = chain_metrics(ch);
  if (auto tv = maybe_tv(c, ch.samples, [&](double x) { return target->value(0.0, vector_of({x})); })) m["tv"] = *tv;
  ctx.add_json("metrics.json", m);
}

inline void run_sgld(const Node& c, Context& ctx) {
  c.allow({"target", "conjugate", "step", "n_steps", "x0", "burn_in", "thin", "tv"});
  apps::StepSchedule eps;
  if (c.has("step") && c.raw("step").is_number()) {
    eps = apps::StepSchedule::constant(c.positive("step"));
  } else {
    const Node s = c.child("step");
    s.allow({"a", "b", "gamma"});
    eps = {s.positive("a"), s.get<double>("b", 1.0), s.get<double>("gamma", 0.0)};
    try {
      eps.validate();
    } catch (const ContractError& e) {
      throw ConfigError(s.path(), e.what());
    }
  }
  const auto n_steps = c.count("n_steps");
  apps::SgldOptions o;
  o.burn_in = burn_in_from(c);
  o.thin = c.count("thin", 1);
  if (c.has("target") == c.has("conjugate"))
    throw ConfigError(c.field("target"), "give exactly one of target and conjugate");
  apps::Chain ch;
  Json m;
  if (c.has("target")) {
    const auto target = target_from(c, "target");
    o.x0 = sized_vector(c, "x0", target->dim());
    ch = apps::sgld_sample(target, eps, n_steps, ctx.seed, o);
    m = chain_metrics(ch);
    if (auto tv = maybe_tv(c, ch.samples, [&](double x) { return target->value(0.0, vector_of({x})); })) m["tv"] = *tv;
  } else {
    const Node q = c.child("conjugate");
    q.allow({"data", "prior_mean", "prior_var", "noise_var", "batch_size"});
    apps::ConjugateGaussianModel model;
    model.data = q.matrix("data");
    model.prior_mean = q.vector("prior_mean", Vector::Zero(model.data.rows()));
    model.prior_var = q.positive("prior_var", 1.0);
    model.noise_var = q.positive("noise_var", 1.0);
    model.batch_size = q.count("batch_size", 10);
    try {
      model.validate();
    } catch (const ContractError& e) {
      throw ConfigError(q.path(), e.what());
    }
    o.x0 = sized_vector(c, "x0", model.dim());
    ch = apps::sgld_sample(model, eps, n_steps, ctx.seed, o);
    m = chain_metrics(ch);
    m["posterior_mean"] = vector_to_json(model.posterior_mean());
    m["posterior_var"] = model.posterior_var();
  }
  ctx.add("chain.csv", samples_csv(ch.samples, &ch.times, "step"));
  ctx.add_json("metrics.json", m);
}

inline void run_hmc(const Node& c, Context& ctx) {
  c.allow({"target", "mass", "leapfrog_steps", "step", "n_iter", "x0", "burn_in", "tv"});
  const auto target = target_from(c, "target");
  const auto n = target->dim();
  const Matrix mass = spd_from(c, "mass", n);
  apps::HmcOptions o;
  o.x0 = sized_vector(c, "x0", n);
  o.burn_in = burn_in_from(c);
  const auto ch = apps::hmc_sample(target, mass, c.count("leapfrog_steps"), c.positive("step"), c.count("n_iter"),
                                   ctx.seed, o);
  ctx.add("chain.csv", samples_csv(ch.samples, &ch.times, "iteration"));
  Json m = chain_metrics(ch);
  m["acceptance"] = ch.acceptance;
  if (auto tv = maybe_tv(c, ch.samples, [&](double x) { return target->value(0.0, vector_of({x})); })) m["tv"] = *tv;
  ctx.add_json("metrics.json", m);
}

inline void run_anneal(const Node& c, Context& ctx) {
  c.allow({"loss", "S", "n_steps", "dt", "x0", "p0", "lambda", "record_stride", "n_runs", "burn_in", "tv"});
  const auto loss = target_from(c, "loss");
  const auto n = loss->dim();
  const Matrix s = c.matrix("S", Matrix::Identity(n, n));
  if (s.rows() != n || s.cols() != n || !s.isLowerTriangular(0.0))
    throw ConfigError(c.field("S"), "must be a lower-triangular " + std::to_string(n) + " x " + std::to_string(n) + " matrix");
  apps::AnnealOptions o;
  o.x0 = sized_vector(c, "x0", n);
  o.p0 = sized_vector(c, "p0", n);
  if (!c.has("lambda")) c.json()["lambda"] = 1.0;
  o.lambda = gates::scalar_function_from_json(c.raw("lambda"), c.field("lambda"));
  o.record_stride = c.count("record_stride", 1);
  const auto n_steps = c.count("n_steps");
  const double dt = c.positive("dt");
  const auto runs = c.count("n_runs", 1);
  const double burn = burn_in_from(c);
  // Run r uses derive_seed(seed, r); run 0 keeps its chain.
  std::vector<apps::AnnealResult> res(runs);
  apps::parallel_for(runs, ctx.threads, [&](std::size_t r) {
    res[r] = apps::anneal(loss, s, n_steps, dt, derive_seed(ctx.seed, r), o);
    if (r > 0) res[r].chain = {};
  });
  const auto& ch = res.front().chain;
  ctx.add("chain.csv", samples_csv(ch.samples, &ch.times));
  auto os = csv_stream();
  os << "run,best_value";
  for (Eigen::Index i = 0; i < n; ++i) os << ",best_x" << (i + 1);
  os << '\n';
  for (std::size_t r = 0; r < runs; ++r) {
    os << r << ',' << res[r].best_value;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << res[r].best_x(i);
    os << '\n';
  }
  ctx.add("runs.csv", os.str());
  const auto first = apps::burn_in_count(ch.size(), burn);
  const Matrix tail = ch.samples.rightCols(ch.size() - first);
  Json m{{"best_value", res.front().best_value}, {"best_x", vector_to_json(res.front().best_x)}};
  double best = res.front().best_value;
  for (const auto& r : res) best = std::min(best, r.best_value);
  m["best_value_over_runs"] = best;
  if (tail.cols() >= 2) m["chain"] = moments_json(tail);
  if (auto tv = maybe_tv(c, tail, [&](double x) { return o.lambda(0.0) * loss->value(0.0, vector_of({x})); })) m["tv"] = *tv;
  ctx.add_json("metrics.json", m);
}

inline sbit::State parse_bits(const Node& c, const std::string& key, int n_bits) {
  const auto& v = c.raw(key);
  if (v.is_number_integer()) {
    if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) throw ConfigError(c.field(key), "state index must be nonnegative");
    const auto x = v.get<std::uint64_t>();
    if (n_bits < 64 && (x >> n_bits) != 0) throw ConfigError(c.field(key), "state outside the state space");
    return x;
  }
  if (!v.is_string()) throw ConfigError(c.field(key), "expected a bit string or a state index");
  const auto s = v.get<std::string>();
  if (static_cast<int>(s.size()) != n_bits) throw ConfigError(c.field(key), "expected " + std::to_string(n_bits) + " bits");
  // Bit 1 is the leftmost character, matching state_string.
  sbit::State x = 0;
  for (int i = 0; i < n_bits; ++i) {
    const char ch = s[static_cast<std::size_t>(i)];
    if (ch != '0' && ch != '1') throw ConfigError(c.field(key), "bit strings use 0 and 1 only");
    if (ch == '1') x |= sbit::State{1} << i;
  }
  return x;
}

inline void run_sbit(const Node& c, Context& ctx) {
  c.allow({"up", "down", "x0", "t0", "horizon", "n_traj"});
  const auto& up_j = c.raw("up");
  const auto& down_j = c.raw("down");
  if (!up_j.is_array() || !down_j.is_array() || up_j.empty() || up_j.size() != down_j.size())
    throw ConfigError(c.field("up"), "up and down must be nonempty arrays of equal length (one rate per bit)");
  std::vector<sbit::RateSchedule> up, down;
  for (std::size_t i = 0; i < up_j.size(); ++i) {
    up.push_back(sbit::rate_schedule_from_json(up_j[i], c.field("up/" + std::to_string(i))));
    down.push_back(sbit::rate_schedule_from_json(down_j[i], c.field("down/" + std::to_string(i))));
  }
  const auto system = sbit::single_flip_system(up, down);
  const int bits = system.n_bits();
  if (!c.has("x0")) c.json()["x0"] = std::uint64_t{0};
  const auto x0 = parse_bits(c, "x0", bits);
  const double t0 = c.get<double>("t0", 0.0);
  const double horizon = c.get<double>("horizon");
  if (!(horizon > t0)) throw ConfigError(c.field("horizon"), "must exceed t0");
  for (const auto& tr : system.transitions())
    if (!tr.rate.covers(t0, horizon)) throw ConfigError(c.field("up"), "schedule '" + tr.label + "' does not cover [t0, horizon]");
  const auto n_traj = c.count("n_traj", 1);

  std::vector<sbit::SBitTrajectory> trajs(n_traj);
  apps::parallel_for(n_traj, ctx.threads, [&](std::size_t i) {
    trajs[i] = sbit::sample_coupled_trajectory(system, x0, horizon, {ctx.seed, i}, t0);
  });
  std::ostringstream os;
  sbit::write_sbit_csv(os, trajs.front());
  ctx.add("trajectory.csv", os.str());

  Json m;
  const auto& tr0 = trajs.front();
  m["jumps"] = tr0.jumps.size();
  if (bits <= 20) m["occupancy"] = tr0.occupancy();
  if (bits <= sbit::kMaxDenseBits) {
    const auto states = std::size_t{1} << bits;
    std::vector<double> empirical(states, 0.0);
    for (const auto& t : trajs) empirical[t.state_at(horizon)] += 1.0;
    for (auto& p : empirical) p /= static_cast<double>(n_traj);
    Vector p0 = Vector::Zero(static_cast<Eigen::Index>(states));
    p0(static_cast<Eigen::Index>(x0)) = 1.0;
    const Vector exact = sbit::transient_distribution(system, p0, horizon, t0);
    const Vector emp = Eigen::Map<const Vector>(empirical.data(), static_cast<Eigen::Index>(states));
    m["final_distribution"] = empirical;
    m["oracle_distribution"] = vector_to_json(exact);
    m["tv"] = sbit::total_variation(emp, exact);
  }
  ctx.add_json("metrics.json", m);
}

inline std::string matrix_csv(const Matrix& a) {
  auto os = csv_stream();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) os << (j ? "," : "") << a(i, j);
    os << '\n';
  }
  return os.str();
}

inline void run_compile_circuit(const Node& c, Context& ctx) {
  c.allow({"netlist"});
  const auto net = circuit::netlist_from_json(c.raw("netlist"), c.field("netlist"));
  const auto compiled = circuit::compile_network(net);
  const auto a = matrix_csv(compiled.model.A0());
  const auto cc = matrix_csv(compiled.model.C0());
  ctx.add("A0.csv", a);
  ctx.add("C0.csv", cc);
  Json eig = Json::array();
  for (Eigen::Index i = 0; i < compiled.eigenvalues.size(); ++i)
    eig.push_back({compiled.eigenvalues(i).real(), compiled.eigenvalues(i).imag()});
  ctx.add_json("compiled.json", {{"A0", matrix_rows(compiled.model.A0())},
                                 {"b0", vector_to_json(compiled.model.b0())},
                                 {"C0", matrix_rows(compiled.model.C0())},
                                 {"coupling_matrix", matrix_rows(compiled.coupling_matrix)},
                                 {"eigenvalues", eig},
                                 {"stable", compiled.stable()}});
  *ctx.out << "A0\n" << a << "C0\n" << cc;
}

inline void run_train_demon(const Node& c, Context& ctx) {
  c.allow({"schedule", "data", "network", "init", "batch_size", "steps", "learning_rate", "optimizer",
           "cosine_decay", "mode", "perturbation", "spsa_c"});
  const auto schedule = schedule_from(c.child("schedule"));
  const auto law = data_law_from(c.child("data"));
  const auto dim = law.dim();
  std::optional<demon::ScoreNetworkDemon> net;
  if (c.has("init")) {
    net = checkpoint_from(c, "init");
    if (net->input_dim() != dim) throw ConfigError(c.field("init"), "checkpoint dimension differs from the data");
  } else {
    if (!c.has("network")) c.json()["network"] = Json::object();
    const Node nn = c.child("network");
    nn.allow({"hidden", "embedding"});
    const auto hidden = nn.get<std::vector<Eigen::Index>>("hidden", {64, 64});
    for (auto h : hidden)
      if (h < 1) throw ConfigError(nn.field("hidden"), "layer widths must be positive");
    if (!nn.has("embedding")) nn.json()["embedding"] = Json::object();
    net.emplace(dim, hidden, embedding_from(nn.child("embedding")), derive_seed(ctx.seed, 1));
  }
  training::TrainConfig tc;
  tc.steps = c.count("steps");
  tc.learning_rate = c.positive("learning_rate", 1e-3);
  tc.cosine_decay = c.get<bool>("cosine_decay", true);
  tc.spsa_c = c.positive("spsa_c", 1e-2);
  tc.seed = derive_seed(ctx.seed, 2);
  const auto opt = c.get<std::string>("optimizer", "adam");
  if (opt == "adam") tc.optimizer = training::OptimizerKind::Adam;
  else if (opt == "sgd") tc.optimizer = training::OptimizerKind::Sgd;
  else throw ConfigError(c.field("optimizer"), "expected adam or sgd");
  const auto mode = c.get<std::string>("mode", "ex_situ");
  std::optional<training::ReverseDevice> env;
  if (mode == "in_situ") {
    tc.mode = training::TrainMode::InSitu;
    env = training::reverse_device(schedule, dim);
    if (c.has("perturbation"))
      env->model = training::perturb_model(env->model, perturbation_from(c.child("perturbation"), derive_seed(ctx.seed, 10)));
  } else if (mode != "ex_situ") {
    throw ConfigError(c.field("mode"), "expected ex_situ or in_situ");
  } else if (c.has("perturbation")) {
    throw ConfigError(c.field("perturbation"), "only meaningful with mode in_situ");
  }
  const training::DataSampler data = [law](Rng& r) { return law.sample(r); };
  const training::DsmObjective obj(schedule, data, c.count("batch_size", 128), env);
  const auto result = training::train_demon(*net, obj, tc);
  ctx.add_json("checkpoint.json", demon::score_network_to_json(*net));
  std::ostringstream os;
  training::write_loss_csv(os, result.loss_history);
  ctx.add("loss.csv", os.str());
  const auto& h = result.loss_history;
  const std::size_t tail = std::max<std::size_t>(1, h.size() / 10);
  double avg = 0.0;
  for (std::size_t k = h.size() - tail; k < h.size(); ++k) avg += h[k];
  ctx.add_json("metrics.json", {{"steps", h.size()}, {"final_loss", h.back()}, {"tail_mean_loss", avg / tail}});
}

inline void run_nsde_rollout(const Node& c, Context& ctx) {
  c.allow({"hidden_dim", "sigma", "prior_drift", "w0", "mode", "posterior_net", "inputs", "horizon", "dt", "record_stride"});
  apps::NSDESpec spec;
  spec.hidden_dim = static_cast<Eigen::Index>(c.count("hidden_dim"));
  spec.sigma = c.get<double>("sigma", 0.0);
  if (spec.sigma < 0.0) throw ConfigError(c.field("sigma"), "must be nonnegative");
  spec.prior_drift = c.get<double>("prior_drift", 0.0);
  spec.w0 = sized_vector(c, "w0", spec.weight_dim());
  const auto mode_s = c.get<std::string>("mode", "prior");
  apps::WeightMode mode = apps::WeightMode::Prior;
  if (mode_s == "posterior") mode = apps::WeightMode::Posterior;
  else if (mode_s != "prior") throw ConfigError(c.field("mode"), "expected prior or posterior");
  if (c.has("posterior_net")) {
    const Node pn = c.child("posterior_net");
    if (pn.has("network")) {
      spec.posterior_net = checkpoint_from(c, "posterior_net");
    } else {
      pn.allow({"hidden", "init_seed"});
      spec.posterior_net.emplace(spec.weight_dim(), pn.get<std::vector<Eigen::Index>>("hidden", {16}),
                                 demon::TimeEmbedding::affine(), pn.get<std::uint64_t>("init_seed", 0));
    }
    if (spec.posterior_net->input_dim() != spec.weight_dim())
      throw ConfigError(c.field("posterior_net"), "must act on " + std::to_string(spec.weight_dim()) + " weights");
  } else if (mode == apps::WeightMode::Posterior) {
    throw ConfigError(c.field("posterior_net"), "required in posterior mode");
  }
  const Matrix rows = c.matrix("inputs");
  if (rows.cols() != spec.hidden_dim || rows.rows() < 1)
    throw ConfigError(c.field("inputs"), "each input must have hidden_dim entries");
  const double horizon = c.positive("horizon");
  const double dt = c.positive("dt");
  const auto stride = c.count("record_stride", 1);
  const auto roll = apps::weight_diffuser_rollout(spec, mode, rows.transpose(), horizon, dt, ctx.seed, ctx.threads);

  auto os = csv_stream();
  const auto h = spec.hidden_dim, p = spec.weight_dim();
  os << "input,t";
  for (Eigen::Index i = 0; i < h; ++i) os << ",h" << (i + 1);
  for (Eigen::Index i = 0; i < p; ++i) os << ",w" << (i + 1);
  os << '\n';
  Matrix final_h(h, static_cast<Eigen::Index>(roll.paths.size()));
  Matrix final_w(p, static_cast<Eigen::Index>(roll.paths.size()));
  for (std::size_t i = 0; i < roll.paths.size(); ++i) {
    const auto& tr = roll.paths[i];
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (k % stride != 0 && k + 1 != tr.size()) continue;
      os << i << ',' << tr[k].t;
      for (Eigen::Index j = 0; j < tr[k].v.size(); ++j) os << ',' << tr[k].v(j);
      os << '\n';
    }
    final_h.col(static_cast<Eigen::Index>(i)) = roll.hidden(i, tr.size() - 1);
    final_w.col(static_cast<Eigen::Index>(i)) = roll.weights(i, tr.size() - 1);
  }
  ctx.add("paths.csv", os.str());
  Json m{{"final_hidden", matrix_rows(final_h.transpose())}, {"final_weight_mean", vector_to_json(apps::sample_mean(final_w))}};
  if (final_w.cols() >= 2) m["final_weight_var"] = vector_to_json(apps::sample_cov(final_w).diagonal());
  ctx.add_json("metrics.json", m);
}

inline void run_latent_rollout(const Node& c, Context& ctx) {
  c.allow({"model", "program", "h0", "t0", "horizon", "checkpoints", "dt", "readout", "n_traj"});
  const auto model = model_from(c.child("model"));
  const auto program = program_from(c, model);
  const auto n = model.dim();
  const Vector h0 = sized_vector(c, "h0", n);
  const double t0 = c.get<double>("t0", 0.0);
  const double horizon = c.get<double>("horizon");
  if (!(horizon > t0)) throw ConfigError(c.field("horizon"), "must exceed t0");
  const auto cps = c.get<std::vector<double>>("checkpoints");
  if (cps.empty()) throw ConfigError(c.field("checkpoints"), "need at least one checkpoint");
  for (std::size_t k = 0; k < cps.size(); ++k)
    if (cps[k] < t0 || cps[k] > horizon || (k > 0 && cps[k] <= cps[k - 1]))
      throw ConfigError(c.field("checkpoints/" + std::to_string(k)), "checkpoints must increase within [t0, horizon]");
  const double dt = c.positive("dt");
  Matrix readout;
  if (c.has("readout")) {
    readout = c.matrix("readout");
    if (readout.cols() != n) throw ConfigError(c.field("readout"), "must have " + std::to_string(n) + " columns");
  }
  const auto n_traj = c.count("n_traj", 1);
  std::vector<apps::LatentRollout> rolls(n_traj);
  apps::parallel_for(n_traj, ctx.threads, [&](std::size_t i) {
    rolls[i] = apps::latent_sde_rollout(model, program, nullptr, h0, t0, horizon, cps, dt, {ctx.seed, i}, readout);
  });
  const auto m_out = rolls.front().readouts.front().size();
  auto os = csv_stream();
  os << "traj,t";
  for (Eigen::Index j = 0; j < m_out; ++j) os << ",y" << (j + 1);
  os << '\n';
  for (std::size_t i = 0; i < n_traj; ++i)
    for (std::size_t k = 0; k < rolls[i].times.size(); ++k) {
      os << i << ',' << rolls[i].times[k];
      for (Eigen::Index j = 0; j < m_out; ++j) os << ',' << rolls[i].readouts[k](j);
      os << '\n';
    }
  ctx.add("readouts.csv", os.str());
  Json mean = Json::array();
  for (std::size_t k = 0; k < cps.size(); ++k) {
    Vector acc = Vector::Zero(m_out);
    for (const auto& r : rolls) acc += r.readouts[k];
    mean.push_back(vector_to_json(acc / static_cast<double>(n_traj)));
  }
  ctx.add_json("metrics.json", {{"checkpoints", cps}, {"mean_readout", mean}});
}

inline const std::map<std::string, std::function<void(const Node&, Context&)>>& registry() {
  static const std::map<std::string, std::function<void(const Node&, Context&)>> r{
      {"simulate", run_simulate},         {"sample-diffusion", run_sample_diffusion},
      {"sghmc", run_sghmc},               {"sgld", run_sgld},
      {"hmc", run_hmc},                   {"anneal", run_anneal},
      {"sbit", run_sbit},                 {"compile-circuit", run_compile_circuit},
      {"train-demon", run_train_demon},   {"nsde-rollout", run_nsde_rollout},
      {"latent-rollout", run_latent_rollout}};
  return r;
}

}  // namespace detail

/// Validates `config`, runs `command`, and writes its artifacts plus
/// manifest.json into the output directory. Never throws on bad input: the
/// outcome is in the exit code (0 ok, 2 config error, 3 divergence).
inline RunResult run_experiment(const std::string& command, Json config, const RunOptions& opts = {}) {
  RunResult res;
  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    res.exit_code = code;
    res.error = msg;
    *opts.err << "thermoai " << command << ": " << kind << ": " << msg << '\n';
    return res;
  };
  try {
    const auto& reg = detail::registry();
    const auto it = reg.find(command);
    if (it == reg.end()) throw ConfigError("command", "unknown subcommand '" + command + "'");
    if (!config.is_object()) throw ConfigError("<root>", "expected a JSON object");
    if (config.contains("command") && config["command"] != command)
      throw ConfigError("command", "config is for '" + config["command"].dump() + "'");
    config["command"] = command;
    if (opts.seed) config["seed"] = *opts.seed;
    if (opts.threads) config["threads"] = *opts.threads;
    if (opts.output_dir) config["output_dir"] = *opts.output_dir;
    inline_file_references(config, opts.base_dir,
                           {"model", "program", "netlist", "target", "loss", "score", "init", "posterior_net", "data"});

    Node root(config, "");
    detail::Context ctx;
    ctx.out = opts.out;
    if (!root.has("seed")) throw ConfigError("seed", "missing required field (runs are never seeded from the clock)");
    ctx.seed = root.get<std::uint64_t>("seed");
    const auto threads = root.get<std::size_t>("threads", 1);
    if (threads < 1 || threads > 1024) throw ConfigError("threads", "must be in 1..1024");
    ctx.threads = static_cast<unsigned>(threads);
    res.output_dir = root.get<std::string>("output_dir", "out");

    // The command sees everything except the runner keys.
    Json body = config;
    for (const char* k : {"command", "seed", "threads", "output_dir"}) body.erase(k);
    Node node(body, "");
    it->second(node, ctx);

    Json resolved = body;
    resolved["command"] = command;
    resolved["seed"] = ctx.seed;
    resolved["threads"] = ctx.threads;
    Json artifacts = Json::object();
    for (const auto& [name, bytes] : ctx.artifacts)
      artifacts[name] = {{"fnv1a64", hex64(fnv1a(bytes))}, {"bytes", bytes.size()}};
    res.manifest = {{"thermoai_version", THERMOAI_VERSION}, {"command", command}, {"config", resolved},
                    {"artifacts", artifacts}};

    std::filesystem::create_directories(res.output_dir);
    for (const auto& [name, bytes] : ctx.artifacts) {
      std::ofstream f(res.output_dir / name, std::ios::binary);
      f << bytes;
      if (!f) throw std::runtime_error("cannot write " + (res.output_dir / name).string());
    }
    std::ofstream mf(res.output_dir / "manifest.json", std::ios::binary);
    mf << res.manifest.dump(2) << '\n';
    if (!mf) throw std::runtime_error("cannot write manifest.json");
    return res;
  } catch (const ConfigError& e) {
    return fail(kConfigError, "config error", e.what());
  } catch (const ContractError& e) {
    return fail(kConfigError, "config error", e.what());
  } catch (const DivergenceError& e) {
    return fail(kDivergence, "divergence", e.what());
  } catch (const training::TrainingDivergence& e) {
    return fail(kDivergence, "divergence", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "error", e.what());
  }
}

/// Loads the config file (file references resolve next to it) and runs it.
inline RunResult run_experiment_file(const std::string& command, const std::filesystem::path& config_path,
                                     RunOptions opts = {}) {
  Json config;
  try {
    config = read_json_file(config_path, "config");
  } catch (const ConfigError& e) {
    *opts.err << "thermoai " << command << ": config error: " << e.what() << '\n';
    RunResult r;
    r.exit_code = kConfigError;
    r.error = e.what();
    return r;
  }
  opts.base_dir = config_path.parent_path().empty() ? std::filesystem::path(".") : config_path.parent_path();
  return run_experiment(command, std::move(config), opts);
}

}  // namespace thermoai::cli
