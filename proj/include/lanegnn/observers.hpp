#pragma once

// Two views of the world around the ego, both anchored on the ego
// longitudinally (x measured from the ego, road-aligned axes) while the
// lateral coordinate stays in the road frame — lanes, boundaries and the
// goal band are fixed road structure the policy must be able to see.
// Positions are scaled by the sensing radius and velocities by a fixed
// speed scale:
//
//  - graph view: one node per vehicle within the sensing radius, each node
//    with directed edges to its nearest other nodes, edge values carrying
//    exact relative displacement;
//  - flat view: ego features first, then the nearest vehicles in ascending
//    distance order, zero-padded to a fixed width.
//
// Sensing noise perturbs only the distances used for neighbor selection and
// ordering (graph wiring / slot order); feature values stay exact.

#include <string>
#include <variant>
#include <vector>

#include "lanegnn/rng.hpp"
#include "lanegnn/sim.hpp"

namespace lanegnn {

struct ObserverConfig {
  int n_near = 3;               // outgoing edges per graph node
  double r_near = 50.0;         // sensing radius [m]
  double noise_stddev = 0.0;    // distance sensing noise [m]
  int max_agents_flat = 4;      // flat slots, ego included
  double velocity_scale = 15.0; // [m/s]
};

// Which network family consumes the observation; the graph view feeds the
// message-passing backbone, the flat view feeds the dense backbone. The pair
// is chosen together so they can never disagree.
enum class BackboneKind { gnn, flat };

inline constexpr int kNodeFeatureDim = 4;  // x (ego-relative), y (road frame), vx, vy
inline constexpr int kEdgeFeatureDim = 2;  // relative displacement (scaled)

struct GraphEdge {
  int from = 0;
  int to = 0;
  std::vector<double> value;  // kEdgeFeatureDim
};

struct ObservationGraph {
  std::vector<std::vector<double>> node_values;  // kNodeFeatureDim each
  std::vector<GraphEdge> edges;  // no self edges, no duplicate (from, to)
  int ego_index = 0;
  std::vector<int> vehicle_ids;  // node index -> vehicle id
};

using FlatObservation = std::vector<double>;

using Observation = std::variant<ObservationGraph, FlatObservation>;

// d + stddev * z per entry, clamped at zero; stddev == 0 is the identity and
// consumes no randomness.
std::vector<double> perturb_distances(const std::vector<double>& true_distances,
                                      double stddev, Rng& rng);

ObservationGraph observe_graph(const WorldState& world, const ObserverConfig& cfg,
                               Rng& noise_rng);

FlatObservation observe_flat(const WorldState& world, const ObserverConfig& cfg,
                             Rng& noise_rng);

inline int flat_observation_dim(const ObserverConfig& cfg) {
  return cfg.max_agents_flat * kNodeFeatureDim;
}

// Human-readable node/edge listing for inspection and golden tests.
std::string dump_graph(const ObservationGraph& graph);

}  // namespace lanegnn
