#include "lanegnn/env.hpp"

namespace lanegnn {

void Environment::reset(std::uint64_t scenario_seed, std::uint64_t noise_seed) {
  cfg_.goal.validate();
  cfg_.weights.validate();
  world_ = generate_scenario(scenario_seed, cfg_.scenario, cfg_.sim);
  noise_rng_ = Rng(noise_seed);
  started_ = true;
}

Observation Environment::observe(BackboneKind kind) {
  if (!started_) throw std::logic_error("Environment::observe: reset first");
  if (kind == BackboneKind::gnn) {
    return Observation{observe_graph(world_, cfg_.observer, noise_rng_)};
  }
  return Observation{observe_flat(world_, cfg_.observer, noise_rng_)};
}

Environment::StepOutcome Environment::step(const Control& u) {
  if (!started_) throw std::logic_error("Environment::step: reset first");
  StepResult result = step_world(world_, u, cfg_.sim);
  StepOutcome out;
  out.events = result.events;
  out.status = check_terminal(result.world, result.events, cfg_.goal,
                              cfg_.episode.max_steps, cfg_.sim);
  const Control executed = clamp_control(u, cfg_.sim.bounds);
  out.reward = compute_reward(result.world, executed, out.status, cfg_.goal,
                              cfg_.weights, cfg_.sim.bounds);
  world_ = result.world;
  if (out.status != TerminalStatus::running) world_.terminal = true;
  return out;
}

}  // namespace lanegnn
