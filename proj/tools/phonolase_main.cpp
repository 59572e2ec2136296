#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phonolase/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  int jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool plots = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--output", args.output_dir,
                  "output directory (overrides PHONOLASE_OUTPUT and the "
                  "config's output.dir)");
  cmd->add_option("--jobs", args.jobs,
                  "max concurrent sweep runs (default: available cores)");
  cmd->add_option("--seed", args.seed, "override engine.seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--plots", args.plots, "emit SVG plots");
}

int execute(const CommonArgs& args, phonolase::ExperimentKind kind) {
  phonolase::ExperimentSpec spec;
  try {
    spec = phonolase::load_config(args.config_path);
  } catch (const std::exception& e) {
    std::cerr << "phonolase: " << e.what() << "\n";
    return 1;
  }
  if (spec.kind != kind) spec.kind = kind;  // subcommand wins over the file

  phonolase::RunOptions opts;
  opts.jobs = args.jobs;
  if (args.seed_set) opts.seed_override = args.seed;
  if (args.plots) opts.plots_override = true;
  if (!args.output_dir.empty()) {
    opts.output_dir = args.output_dir;
  } else if (const char* env = std::getenv("PHONOLASE_OUTPUT")) {
    if (*env) opts.output_dir = env;
  }
  return phonolase::run_experiment(spec, opts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "phonolase: levitated-nanosphere phonon laser simulator and analysis "
      "suite"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    phonolase::ExperimentKind kind;
  };
  const Sub subs[] = {
      {"run", "single closed-loop run", phonolase::ExperimentKind::Run},
      {"sweep", "pump-depth sweep with threshold detection",
       phonolase::ExperimentKind::Sweep},
      {"transient", "gain-switch transient", phonolase::ExperimentKind::Transient},
      {"oracle", "rate-equation reference model",
       phonolase::ExperimentKind::Oracle},
      {"calibrate", "phase and gain calibration",
       phonolase::ExperimentKind::Calibrate},
  };

  CommonArgs args[5];
  for (int i = 0; i < 5; ++i)
    add_common(app.add_subcommand(subs[i].name, subs[i].help), args[i]);

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 5; ++i) {
    if (app.get_subcommand(subs[i].name)->parsed())
      return execute(args[i], subs[i].kind);
  }
  return 1;
}
