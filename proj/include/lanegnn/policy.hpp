#pragma once

// Actor-critic networks. The actor maps an observation through a backbone
// (message-passing over the graph view, or a dense stack over the flat view)
// to an embedding, then through a projection head to the raw parameters of a
// diagonal Gaussian over (steer_rate, accel). The critic is an independent
// network of the same backbone family ending in a scalar value head.

#include <string>
#include <variant>
#include <vector>

#include "lanegnn/distribution.hpp"
#include "lanegnn/gnn.hpp"
#include "lanegnn/observers.hpp"
#include "lanegnn/tape.hpp"

namespace lanegnn {

struct NetworkConfig {
  BackboneKind backbone = BackboneKind::gnn;
  int gnn_hidden = 80;
  int gnn_layers = 3;
  std::vector<int> flat_hidden = {512, 256, 256};
  std::vector<int> head_hidden = {64};
  // Initial stddev as a fraction of each action dimension's half range
  // (applied through the projection head's final bias).
  double sigma_init_frac = 0.25;
  void validate() const;
};

struct DenseStack {
  std::vector<DenseLayer> layers;
};

ValueId dense_stack_forward(GradTape& tape, const DenseStack& stack, ValueId in);

// Action layout is [steer_rate, accel].
inline constexpr int kActionDim = 2;
Bounds action_bounds(const ControlBounds& bounds);
Control action_to_control(const std::vector<double>& action);

struct ActorCritic {
  NetworkConfig cfg;
  Bounds bounds;
  // Actor
  GnnStack actor_gnn;
  DenseStack actor_flat;
  DenseStack actor_proj;  // embedding -> [mean_raw(k), stddev_raw(k)]
  // Critic (independent weights)
  GnnStack critic_gnn;
  DenseStack critic_flat;
  DenseStack critic_value;  // embedding -> scalar
};

// Builds both networks into the store under "actor/..." and "critic/...".
ActorCritic build_actor_critic(ParameterStore& store, const NetworkConfig& net_cfg,
                               const ObserverConfig& obs_cfg,
                               const ControlBounds& bounds, Rng& init_rng);

struct ActorForward {
  DiagonalNormal dist;
  ValueId projection;  // raw head outputs; backward seeds land here
};

// The observation variant must match the backbone kind.
ActorForward actor_forward(GradTape& tape, const ActorCritic& net,
                           const Observation& obs);

struct CriticForward {
  double value = 0.0;
  ValueId value_node = -1;
};

CriticForward critic_forward(GradTape& tape, const ActorCritic& net,
                             const Observation& obs);

}  // namespace lanegnn
