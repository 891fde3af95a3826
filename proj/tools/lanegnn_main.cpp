// Command-line tool: train / eval / ablate / replay.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure
// (scenario infeasible, malformed input file, diverged training, replay
// mismatch). On diverged training the checkpoints written so far remain on
// disk.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lanegnn/harness.hpp"
#include "lanegnn/util.hpp"

namespace {

using namespace lanegnn;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int n_scenarios = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_eval_options) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON, comments allowed)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (overrides config out_dir)");
  cmd->add_option("--seed", args.seed, "seed override");
  if (with_eval_options)
    cmd->add_option("--n-scenarios", args.n_scenarios,
                    "number of evaluation scenarios (overrides config)");
}

ExperimentConfig load_with_overrides(const CLI::App* cmd, const CommonArgs& args,
                                     bool seed_is_eval) {
  ExperimentConfig cfg = load_experiment_config(args.config_path);
  if (cmd->count("--out")) cfg.out_dir = args.out_dir;
  if (cmd->count("--seed")) {
    if (seed_is_eval)
      cfg.eval.seed = args.seed;
    else
      cfg.train.seed = args.seed;
  }
  const CLI::Option* n_scenarios = cmd->get_option_no_throw("--n-scenarios");
  if (n_scenarios != nullptr && n_scenarios->count() > 0) {
    cfg.eval.n_scenarios = args.n_scenarios;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic lane-change policy: training, evaluation, "
               "robustness comparison, and episode replay"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a policy from the config");
  add_common(train, train_args, /*with_eval_options=*/false);

  CommonArgs eval_args;
  std::string eval_checkpoint, eval_trajectory, eval_episode;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint (mean actions)");
  add_common(eval, eval_args, /*with_eval_options=*/true);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--trajectory", eval_trajectory,
                   "dump the first scenario's trajectory CSV here");
  eval->add_option("--episode", eval_episode,
                   "dump the first scenario's per-step episode CSV here");

  CommonArgs ablate_args;
  std::vector<std::string> ablate_checkpoints;
  std::vector<double> ablate_noise;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "compare graph and flat networks under distance noise");
  add_common(ablate, ablate_args, /*with_eval_options=*/true);
  ablate->add_option("--checkpoint", ablate_checkpoints,
                     "two checkpoints: one graph-backbone, one flat-backbone")
      ->required()
      ->expected(2)
      ->check(CLI::ExistingFile);
  ablate->add_option("--noise", ablate_noise,
                     "distance noise level in meters (repeatable; overrides config)");

  CommonArgs replay_args;
  std::string replay_trajectory, replay_episode;
  CLI::App* replay = app.add_subcommand("replay", "verify a dumped episode");
  replay->add_option("--config", replay_args.config_path,
                     "experiment config the episode was produced with")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--trajectory", replay_trajectory, "trajectory CSV")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--episode", replay_episode, "per-step episode CSV")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      const ExperimentConfig cfg = load_with_overrides(train, train_args, false);
      run_train(cfg, &std::cout);
      return 0;
    }
    if (*eval) {
      const ExperimentConfig cfg = load_with_overrides(eval, eval_args, true);
      run_eval(cfg, eval_checkpoint, eval_trajectory, eval_episode, &std::cout);
      return 0;
    }
    if (*ablate) {
      ExperimentConfig cfg = load_with_overrides(ablate, ablate_args, true);
      if (ablate->count("--noise")) cfg.ablation.noise_stddev = ablate_noise;
      run_ablate(cfg, ablate_checkpoints[0], ablate_checkpoints[1], &std::cout);
      return 0;
    }
    if (*replay) {
      const ExperimentConfig cfg = load_experiment_config(replay_args.config_path);
      const ReplayResult result =
          run_replay(cfg, replay_trajectory, replay_episode, &std::cout);
      return result.ok ? 0 : 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "training aborted: " << e.what()
              << " (metrics and the last checkpoint written remain on disk)\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
