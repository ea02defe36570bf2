#include <CLI11.hpp>

#include "thermoai/cli/run.hpp"

int main(int argc, char** argv) {
  using namespace thermoai::cli;
  CLI::App app{"thermoai: thermodynamic device simulator and experiment runner"};
  app.set_version_flag("--version", std::string(THERMOAI_VERSION));
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("-c,--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", output_dir, "artifact directory (overrides output_dir)");
    sub->add_option("-s,--seed", seed, "base seed (overrides seed)");
    sub->add_option("-j,--threads", threads, "worker cap (overrides threads)")->check(CLI::Range(1u, 1024u));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  RunOptions opts;
  opts.output_dir = output_dir;
  opts.seed = seed;
  opts.threads = threads;
  const auto* sub = app.get_subcommands().front();
  const auto res = run_experiment_file(sub->get_name(), config, opts);
  if (res.exit_code == kOk)
    std::cerr << "thermoai " << sub->get_name() << ": wrote " << res.manifest["artifacts"].size()
              << " artifacts and manifest.json to " << res.output_dir.string() << '\n';
  return res.exit_code;
}
