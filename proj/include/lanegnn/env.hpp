#pragma once

// Episode runner: couples the simulator with the evaluator and the observers
// so training, evaluation, and replay all drive episodes through one code
// path. The environment latches the world terminal once an episode ends.

#include <cstdint>
#include <optional>

#include "lanegnn/evaluator.hpp"
#include "lanegnn/observers.hpp"
#include "lanegnn/sim.hpp"

namespace lanegnn {

struct EpisodeParams {
  int max_steps = 100;
};

struct EnvConfig {
  SimConfig sim;
  ScenarioConfig scenario;
  GoalSpec goal;
  RewardWeights weights;
  ObserverConfig observer;
  EpisodeParams episode;
};

class Environment {
 public:
  explicit Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {}

  // Starts a fresh episode; noise_seed feeds the observation-noise stream.
  void reset(std::uint64_t scenario_seed, std::uint64_t noise_seed);

  const WorldState& world() const { return world_; }
  const EnvConfig& config() const { return cfg_; }
  bool active() const { return started_ && !world_.terminal; }

  // Observation of the current world in the requested view. Consumes noise
  // randomness only when noise_stddev > 0.
  Observation observe(BackboneKind kind);

  struct StepOutcome {
    double reward = 0.0;
    TerminalStatus status = TerminalStatus::running;
    StepEvents events;
  };
  StepOutcome step(const Control& u);

 private:
  EnvConfig cfg_;
  WorldState world_;
  Rng noise_rng_{0};
  bool started_ = false;
};

}  // namespace lanegnn
