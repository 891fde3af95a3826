#include "lanegnn/policy.hpp"

#include <cmath>

namespace lanegnn {

void NetworkConfig::validate() const {
  if (gnn_hidden <= 0 || gnn_layers <= 0) {
    throw ConfigError("network: gnn_hidden and gnn_layers must be positive");
  }
  if (flat_hidden.empty()) {
    throw ConfigError("network: flat_hidden must list at least one layer width");
  }
  for (int w : flat_hidden) {
    if (w <= 0) throw ConfigError("network: flat_hidden widths must be positive");
  }
  for (int w : head_hidden) {
    if (w <= 0) throw ConfigError("network: head_hidden widths must be positive");
  }
  if (!(sigma_init_frac > 0.0) || sigma_init_frac > 2.0) {
    throw ConfigError("network: sigma_init_frac must be in (0, 2]");
  }
}

ValueId dense_stack_forward(GradTape& tape, const DenseStack& stack, ValueId in) {
  ValueId v = in;
  for (const DenseLayer& layer : stack.layers) v = tape.dense(layer, v);
  return v;
}

Bounds action_bounds(const ControlBounds& bounds) {
  Bounds b;
  b.lo = {-bounds.steer_rate_max, bounds.accel_min};
  b.hi = {bounds.steer_rate_max, bounds.accel_max};
  return b;
}

Control action_to_control(const std::vector<double>& action) {
  if (action.size() != kActionDim) {
    throw std::logic_error("action_to_control: expected [steer_rate, accel]");
  }
  Control u;
  u.steer_rate = action[0];
  u.accel = action[1];
  return u;
}

namespace {

DenseStack build_head(ParameterStore& store, const std::string& prefix,
                      int in_dim, const std::vector<int>& hidden, int out_dim,
                      Rng& rng) {
  DenseStack stack;
  int in = in_dim;
  int idx = 0;
  for (int w : hidden) {
    stack.layers.push_back(add_dense(store, prefix + "/layer" + std::to_string(idx++),
                                     in, w, Activation::relu, rng));
    in = w;
  }
  stack.layers.push_back(add_dense(store, prefix + "/layer" + std::to_string(idx),
                                   in, out_dim, Activation::identity, rng));
  return stack;
}

DenseStack build_flat_backbone(ParameterStore& store, const std::string& prefix,
                               int in_dim, const std::vector<int>& hidden,
                               Rng& rng) {
  DenseStack stack;
  int in = in_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    stack.layers.push_back(add_dense(store, prefix + "/layer" + std::to_string(i),
                                     in, hidden[i], Activation::relu, rng));
    in = hidden[i];
  }
  return stack;
}

}  // namespace

ActorCritic build_actor_critic(ParameterStore& store, const NetworkConfig& net_cfg,
                               const ObserverConfig& obs_cfg,
                               const ControlBounds& bounds, Rng& init_rng) {
  net_cfg.validate();
  ActorCritic net;
  net.cfg = net_cfg;
  net.bounds = action_bounds(bounds);

  int embed_dim = 0;
  if (net_cfg.backbone == BackboneKind::gnn) {
    net.actor_gnn = build_gnn(store, "actor/gnn", kNodeFeatureDim, kEdgeFeatureDim,
                              net_cfg.gnn_hidden, net_cfg.gnn_layers, init_rng);
    net.critic_gnn = build_gnn(store, "critic/gnn", kNodeFeatureDim, kEdgeFeatureDim,
                               net_cfg.gnn_hidden, net_cfg.gnn_layers, init_rng);
    embed_dim = net_cfg.gnn_hidden;
  } else {
    const int in_dim = flat_observation_dim(obs_cfg);
    net.actor_flat =
        build_flat_backbone(store, "actor/flat", in_dim, net_cfg.flat_hidden, init_rng);
    net.critic_flat =
        build_flat_backbone(store, "critic/flat", in_dim, net_cfg.flat_hidden, init_rng);
    embed_dim = net_cfg.flat_hidden.back();
  }

  net.actor_proj = build_head(store, "actor/proj", embed_dim, net_cfg.head_hidden,
                              2 * kActionDim, init_rng);
  net.critic_value = build_head(store, "critic/value", embed_dim, net_cfg.head_hidden,
                                1, init_rng);

  // Bias the mean outputs so the initial policy applies the neutral command
  // (zero, or the nearest bound midpoint when zero is out of range) instead
  // of the tanh midpoint: with an asymmetric accel range the midpoint is a
  // standing brake command, a poor prior for the very first rollouts.
  // Bias the stddev outputs so the initial policy explores at a sane scale
  // relative to each action range (raw zero would give stddev ~0.69 in raw
  // units, far too wide for the steering dimension).
  Matrix& proj_bias = store.value(net.actor_proj.layers.back().bias);
  Matrix& proj_weights = store.value(net.actor_proj.layers.back().weights);
  for (int d = 0; d < kActionDim; ++d) {
    const double lo = net.bounds.lo[d];
    const double hi = net.bounds.hi[d];
    const double half_range = 0.5 * (hi - lo);
    const double neutral = std::clamp(0.0, lo, hi);
    const double unit = std::clamp((neutral - 0.5 * (lo + hi)) / half_range, -0.999, 0.999);
    proj_bias.at(d, 0) = std::atanh(unit);
    const double target = net_cfg.sigma_init_frac * half_range;
    proj_bias.at(kActionDim + d, 0) = softplus_inv(std::max(target - kStddevFloor, 1e-8));
    // Shrink the mean rows so the freshly built policy stays close to the
    // neutral command for every observation. At full random scale the mean
    // holds a state-correlated offset of a few percent of the range; on the
    // steering-rate channel that integrates into a committed drift that runs
    // the vehicle off the road long before learning can correct it.
    for (int c = 0; c < proj_weights.cols; ++c) {
      proj_weights.at(d, c) *= 0.01;
    }
  }
  return net;
}

namespace {

ValueId backbone_forward(GradTape& tape, const ActorCritic& net,
                         const Observation& obs, bool actor) {
  if (net.cfg.backbone == BackboneKind::gnn) {
    const auto* graph = std::get_if<ObservationGraph>(&obs);
    if (!graph) {
      throw ConfigError("network/observer mismatch: gnn backbone needs the graph view");
    }
    return gnn_forward(tape, actor ? net.actor_gnn : net.critic_gnn, *graph);
  }
  const auto* flat = std::get_if<FlatObservation>(&obs);
  if (!flat) {
    throw ConfigError("network/observer mismatch: flat backbone needs the flat view");
  }
  return dense_stack_forward(tape, actor ? net.actor_flat : net.critic_flat,
                             tape.input(*flat));
}

}  // namespace

ActorForward actor_forward(GradTape& tape, const ActorCritic& net,
                           const Observation& obs) {
  const ValueId emb = backbone_forward(tape, net, obs, /*actor=*/true);
  const ValueId proj = dense_stack_forward(tape, net.actor_proj, emb);
  const auto& raw = tape.value(proj);
  const std::vector<double> mean_raw(raw.begin(), raw.begin() + kActionDim);
  const std::vector<double> stddev_raw(raw.begin() + kActionDim, raw.end());
  ActorForward out{normal_head(mean_raw, stddev_raw, net.bounds), proj};
  return out;
}

CriticForward critic_forward(GradTape& tape, const ActorCritic& net,
                             const Observation& obs) {
  const ValueId emb = backbone_forward(tape, net, obs, /*actor=*/false);
  const ValueId value = dense_stack_forward(tape, net.critic_value, emb);
  return CriticForward{tape.value(value)[0], value};
}

}  // namespace lanegnn
