#pragma once

// Clipped-surrogate policy optimization with generalized advantage
// estimation. Rollouts are collected on-policy into a fixed-size buffer
// (episodes may span buffer boundaries; the cut tail bootstraps from the
// critic), advantages are computed in a backward sweep, and updates run
// shuffled minibatches for several epochs with a single Adam step per
// minibatch after global gradient-norm clipping.

#include <cstdint>
#include <vector>

#include "lanegnn/env.hpp"
#include "lanegnn/policy.hpp"

namespace lanegnn {

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double lr = 3e-4;
  int epochs_per_update = 10;
  int minibatch_size = 256;
  int steps_per_update = 2048;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  int total_updates = 300;
  bool normalize_advantages = true;
  std::uint64_t seed = 1;
  int checkpoint_every = 50;
  // Evaluation cadence during training; 0 disables periodic evaluation.
  int eval_every = 0;
  int eval_scenarios = 100;
  // Early stop once an eval clears both thresholds (success >= first,
  // collision <= second); success threshold 0 disables.
  double early_stop_success_rate = 0.0;
  double early_stop_max_collision_rate = 1.0;
  void validate() const;
};

struct Transition {
  Observation obs;
  std::vector<double> action;
  double log_prob_old = 0.0;
  double value_old = 0.0;
  double reward = 0.0;
  bool terminal = false;  // episode ended on this step
};

struct RolloutBuffer {
  std::vector<Transition> steps;
  // Critic value of the state after the last stored step, used only when the
  // final episode was cut by the buffer boundary rather than terminating.
  double bootstrap_value = 0.0;
  bool truncated_tail = false;
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

struct EpisodeStats {  // over episodes that completed within one rollout
  int episodes = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  double mean_return = 0.0;  // undiscounted, completed episodes only
  double success_rate() const { return episodes ? double(successes) / episodes : 0.0; }
  double collision_rate() const { return episodes ? double(collisions) / episodes : 0.0; }
  double timeout_rate() const { return episodes ? double(timeouts) / episodes : 0.0; }
};

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double mean_sigma = 0.0;     // raw stddev averaged over samples and dims
  double clip_fraction = 0.0;  // |ratio - 1| > clip_eps
  double grad_norm = 0.0;      // pre-clip, averaged over minibatches
};

struct EvalReport {
  int episodes = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double mean_return = 0.0;
};

// One-step temporal-difference residual; `terminal` masks the bootstrap.
double td_residual(double reward, double gamma, double v_next, double v_now,
                   bool terminal);

// min(ratio * adv, clamp(ratio, 1 - eps, 1 + eps) * adv)
double clipped_surrogate(double ratio, double advantage, double clip_eps);

// Fills buffer.advantages / value_targets (targets use the raw advantages;
// normalization, when enabled, applies to the advantages afterwards).
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda,
                        bool normalize);

// Owns the training environment plus the seed streams for scenarios,
// observation noise, and action sampling; episodes continue across buffers.
class RolloutCollector {
 public:
  RolloutCollector(EnvConfig env_cfg, TrainConfig cfg);

  struct Result {
    RolloutBuffer buffer;
    EpisodeStats stats;
  };
  Result collect(const ActorCritic& net, ParameterStore& store);

  std::uint64_t episodes_started() const { return episode_counter_; }

 private:
  void begin_episode();

  EnvConfig env_cfg_;
  TrainConfig cfg_;
  Environment env_;
  Rng action_rng_{0};
  std::uint64_t episode_counter_ = 0;
  double episode_return_ = 0.0;
};

// Mean clipped-surrogate objective of the buffer at the current parameters
// (no gradients); used by tests to confirm updates reduce the loss.
double ppo_loss(const ActorCritic& net, ParameterStore& store,
                const RolloutBuffer& buffer, const TrainConfig& cfg);

// One full update (all epochs/minibatches) over the buffer. Throws
// TrainingDivergedError on a non-finite loss.
UpdateStats ppo_update(const RolloutBuffer& buffer, const ActorCritic& net,
                       ParameterStore& store, AdamOptimizer& opt,
                       const TrainConfig& cfg, Rng& shuffle_rng);

// Runs n_scenarios seeded episodes with mean actions (or sampled actions on
// request) and tallies outcomes. Seed streams are namespaced separately from
// training; the observation-noise draws per scenario depend only on (seed,
// scenario index), so noise-level sweeps see identical underlying draws.
EvalReport evaluate_policy(const ActorCritic& net, ParameterStore& store,
                           const EnvConfig& env_cfg, int n_scenarios,
                           std::uint64_t seed, bool sample_actions = false);

}  // namespace lanegnn
