#include "lanegnn/observers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lanegnn {

namespace {

double true_distance(const VehicleState& a, const VehicleState& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<double> node_features(const VehicleState& s, const VehicleState& ego,
                                  const ObserverConfig& cfg) {
  return {(s.x - ego.x) / cfg.r_near, s.y / cfg.r_near,
          s.v * std::cos(s.theta) / cfg.velocity_scale,
          s.v * std::sin(s.theta) / cfg.velocity_scale};
}

void validate(const ObserverConfig& cfg) {
  if (cfg.n_near < 0 || cfg.r_near <= 0.0 || cfg.noise_stddev < 0.0 ||
      cfg.max_agents_flat < 1 || cfg.velocity_scale <= 0.0) {
    throw ConfigError("observer: n_near >= 0, r_near > 0, noise_stddev >= 0, "
                      "max_agents_flat >= 1, velocity_scale > 0 required");
  }
}

}  // namespace

std::vector<double> perturb_distances(const std::vector<double>& true_distances,
                                      double stddev, Rng& rng) {
  if (stddev < 0.0) throw ConfigError("perturb_distances: stddev must be >= 0");
  if (stddev == 0.0) return true_distances;
  std::vector<double> out(true_distances.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::max(0.0, true_distances[i] + stddev * rng.normal());
  }
  return out;
}

ObservationGraph observe_graph(const WorldState& world, const ObserverConfig& cfg,
                               Rng& noise_rng) {
  validate(cfg);
  const int ei = ego_index(world);
  const VehicleState& ego = world.vehicles[ei].state;

  ObservationGraph graph;
  // Ego is node 0; remaining in-radius vehicles keep world order.
  graph.ego_index = 0;
  graph.node_values.push_back(node_features(ego, ego, cfg));
  graph.vehicle_ids.push_back(world.vehicles[ei].id);
  std::vector<const VehicleState*> states = {&ego};
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    if (static_cast<int>(i) == ei) continue;
    const VehicleState& s = world.vehicles[i].state;
    if (true_distance(ego, s) > cfg.r_near) continue;
    graph.node_values.push_back(node_features(s, ego, cfg));
    graph.vehicle_ids.push_back(world.vehicles[i].id);
    states.push_back(&s);
  }

  const int n = static_cast<int>(states.size());
  const int fan_out = std::min(cfg.n_near, n - 1);
  if (fan_out <= 0) return graph;

  for (int u = 0; u < n; ++u) {
    // Sensed distances from u to everyone else, in node order.
    std::vector<int> others;
    std::vector<double> dist;
    others.reserve(n - 1);
    dist.reserve(n - 1);
    for (int w = 0; w < n; ++w) {
      if (w == u) continue;
      others.push_back(w);
      dist.push_back(true_distance(*states[u], *states[w]));
    }
    const std::vector<double> sensed =
        perturb_distances(dist, cfg.noise_stddev, noise_rng);
    // Ascending sensed distance, ties broken by vehicle id.
    std::vector<int> order(others.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (sensed[a] != sensed[b]) return sensed[a] < sensed[b];
      return graph.vehicle_ids[others[a]] < graph.vehicle_ids[others[b]];
    });
    for (int k = 0; k < fan_out; ++k) {
      const int w = others[order[k]];
      GraphEdge e;
      e.from = u;
      e.to = w;
      e.value = {(states[w]->x - states[u]->x) / cfg.r_near,
                 (states[w]->y - states[u]->y) / cfg.r_near};
      graph.edges.push_back(std::move(e));
    }
  }
  return graph;
}

FlatObservation observe_flat(const WorldState& world, const ObserverConfig& cfg,
                             Rng& noise_rng) {
  validate(cfg);
  const int ei = ego_index(world);
  const VehicleState& ego = world.vehicles[ei].state;

  struct Candidate {
    int id;
    const VehicleState* state;
    double dist;
  };
  std::vector<Candidate> in_radius;
  std::vector<double> dist;
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    if (static_cast<int>(i) == ei) continue;
    const VehicleState& s = world.vehicles[i].state;
    const double d = true_distance(ego, s);
    if (d > cfg.r_near) continue;
    in_radius.push_back(Candidate{world.vehicles[i].id, &s, d});
    dist.push_back(d);
  }
  const std::vector<double> sensed =
      perturb_distances(dist, cfg.noise_stddev, noise_rng);

  std::vector<int> order(in_radius.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sensed[a] != sensed[b]) return sensed[a] < sensed[b];
    return in_radius[a].id < in_radius[b].id;
  });

  FlatObservation obs;
  obs.reserve(flat_observation_dim(cfg));
  const auto ego_features = node_features(ego, ego, cfg);
  obs.insert(obs.end(), ego_features.begin(), ego_features.end());
  const int slots = cfg.max_agents_flat - 1;
  for (int k = 0; k < slots && k < static_cast<int>(order.size()); ++k) {
    const auto f = node_features(*in_radius[order[k]].state, ego, cfg);
    obs.insert(obs.end(), f.begin(), f.end());
  }
  obs.resize(flat_observation_dim(cfg), 0.0);
  return obs;
}

std::string dump_graph(const ObservationGraph& graph) {
  std::ostringstream out;
  char buf[64];
  auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return std::string(buf);
  };
  out << "graph nodes=" << graph.node_values.size()
      << " edges=" << graph.edges.size() << " ego=" << graph.ego_index << "\n";
  for (std::size_t i = 0; i < graph.node_values.size(); ++i) {
    out << "node " << i << " vehicle " << graph.vehicle_ids[i] << " [";
    for (std::size_t k = 0; k < graph.node_values[i].size(); ++k) {
      if (k) out << " ";
      out << fmt(graph.node_values[i][k]);
    }
    out << "]\n";
  }
  for (const GraphEdge& e : graph.edges) {
    out << "edge " << e.from << " -> " << e.to << " [";
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      if (k) out << " ";
      out << fmt(e.value[k]);
    }
    out << "]\n";
  }
  return out.str();
}

}  // namespace lanegnn
