#pragma once

// Experiment configuration: one commented JSON file describes the simulator,
// scenario sampling, goal, reward, observer, networks, training, evaluation,
// and ablation. Parsing is strict — unknown keys and type mismatches are
// errors — and every field has a default, so an empty object {} is a valid
// config. The resolved snapshot materializes all defaults so a run is fully
// reproducible from (snapshot, seed) alone.

#include <cstdint>
#include <string>
#include <vector>

#include "lanegnn/env.hpp"
#include "lanegnn/policy.hpp"
#include "lanegnn/ppo.hpp"

namespace lanegnn {

// The goal region itself is derived from the road: the left lane's center
// band (quarter lane width to each side), the full corridor length, desired
// speed within +/- speed_tol, and heading within +/- heading_tol.
struct GoalConfig {
  double v_des = 12.5;      // m/s
  double speed_tol = 2.0;   // m/s
  double heading_tol = 0.1; // rad
};

struct EvalConfig {
  int n_scenarios = 100;
  std::uint64_t seed = 1000003;
};

struct AblationConfig {
  std::vector<double> noise_stddev = {5.0};  // m, per ablation row
};

struct ExperimentConfig {
  SimConfig sim;
  ScenarioConfig scenario;
  GoalConfig goal;
  RewardWeights reward;
  ObserverConfig observer;
  EpisodeParams episode;
  NetworkConfig network;
  TrainConfig train;
  EvalConfig eval;
  AblationConfig ablation;
  std::string out_dir = "out";

  GoalSpec goal_spec() const;
  EnvConfig env_config() const;  // observer noise as configured
  EnvConfig env_config(double noise_override) const;
  void validate() const;
};

std::string backbone_to_string(BackboneKind kind);
BackboneKind backbone_from_string(const std::string& s);

// Strict parse of commented JSON; `origin` labels error messages.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical snapshot with every field explicit; ends with a newline.
std::string resolved_config_json(const ExperimentConfig& cfg);

// Hash of the resolved snapshot text; stamped into run metadata.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace lanegnn
