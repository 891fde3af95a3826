#pragma once

// Experiment orchestration behind the command-line tool: full training runs
// (rollout -> advantages -> update loop with metrics, checkpoints, periodic
// held-out evaluation and optional early stop), checkpoint evaluation,
// noise-robustness comparisons between the two network families, and replay
// verification of dumped episodes. All functions are also used directly by
// the test suites.

#include <iosfwd>
#include <string>
#include <vector>

#include "lanegnn/config.hpp"
#include "lanegnn/io.hpp"

namespace lanegnn {

struct TrainResult {
  int updates_run = 0;
  bool early_stopped = false;
  EvalReport final_eval;          // held-out scenarios, mean actions
  std::string checkpoint_path;    // final checkpoint
};

// Trains per cfg into cfg.out_dir: resolved_config.json, metrics.csv,
// eval_curve.csv (when periodic evaluation is on), checkpoint_latest.txt at
// every checkpoint interval, checkpoint_final.txt + eval_final.csv at the
// end. Progress lines go to *log when given.
TrainResult run_train(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Evaluates a checkpoint on cfg.eval scenarios with mean actions; writes
// eval_report.csv into cfg.out_dir. Optionally dumps the first scenario's
// trajectory and per-step episode CSVs for replay/plotting.
EvalReport run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    const std::string& trajectory_path = "",
                    const std::string& episode_path = "",
                    std::ostream* log = nullptr);

// Evaluates one graph-backbone and one flat-backbone checkpoint (order
// detected from checkpoint metadata) at noise 0 (Nominal) and at each
// cfg.ablation noise level (Ablation) on the same scenario seeds; writes
// comparison.csv into cfg.out_dir and returns the rows.
std::vector<ComparisonRow> run_ablate(const ExperimentConfig& cfg,
                                      const std::string& checkpoint_a,
                                      const std::string& checkpoint_b,
                                      std::ostream* log = nullptr);

// Replays a dumped episode against the evaluator; ok=false on any mismatch.
ReplayResult run_replay(const ExperimentConfig& cfg,
                        const std::string& trajectory_path,
                        const std::string& episode_path,
                        std::ostream* log = nullptr);

// One seeded episode with mean actions, recording every world state and the
// executed control/reward/status per step.
struct EpisodeDumpResult {
  EpisodeDump dump;
  TerminalStatus status = TerminalStatus::running;
  double episode_return = 0.0;
};
EpisodeDumpResult run_episode_dump(const ActorCritic& net, ParameterStore& store,
                                   const EnvConfig& env_cfg,
                                   std::uint64_t scenario_seed,
                                   std::uint64_t noise_seed);

}  // namespace lanegnn
