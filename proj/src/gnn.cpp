#include "lanegnn/gnn.hpp"

namespace lanegnn {

GnnStack build_gnn(ParameterStore& store, const std::string& prefix,
                   int node_dim, int edge_dim, int hidden, int depth, Rng& rng) {
  if (node_dim <= 0 || edge_dim <= 0 || hidden <= 0 || depth <= 0) {
    throw ConfigError("build_gnn: node_dim, edge_dim, hidden, depth must be positive");
  }
  GnnStack stack;
  stack.hidden = hidden;
  for (int k = 0; k < depth; ++k) {
    const int h_in = k == 0 ? node_dim : hidden;
    const int e_in = k == 0 ? edge_dim : hidden;
    GnnLayer layer;
    layer.edge_net = add_dense(store, prefix + "/layer" + std::to_string(k) + "/edge_net",
                               2 * h_in + e_in, hidden, Activation::relu, rng);
    layer.node_net = add_dense(store, prefix + "/layer" + std::to_string(k) + "/node_net",
                               hidden + h_in, hidden, Activation::relu, rng);
    stack.layers.push_back(layer);
  }
  return stack;
}

GraphTopology topology_of(const ObservationGraph& graph) {
  GraphTopology topo;
  topo.n_nodes = static_cast<int>(graph.node_values.size());
  topo.edges.reserve(graph.edges.size());
  for (const GraphEdge& e : graph.edges) {
    topo.edges.emplace_back(e.from, e.to);
  }
  return topo;
}

void gnn_layer_forward(GradTape& tape, const GnnLayer& layer,
                       const GraphTopology& topo,
                       const std::vector<ValueId>& node_h,
                       const std::vector<ValueId>& edge_e,
                       std::vector<ValueId>& node_out,
                       std::vector<ValueId>& edge_out) {
  if (static_cast<int>(node_h.size()) != topo.n_nodes ||
      edge_e.size() != topo.edges.size()) {
    throw std::logic_error("gnn_layer_forward: value/topology size mismatch");
  }
  const int hidden = layer.edge_net.out_dim;

  edge_out.clear();
  edge_out.reserve(topo.edges.size());
  for (std::size_t k = 0; k < topo.edges.size(); ++k) {
    const auto [from, to] = topo.edges[k];
    if (from < 0 || from >= topo.n_nodes || to < 0 || to >= topo.n_nodes) {
      throw std::logic_error("gnn_layer_forward: edge endpoint out of range");
    }
    const ValueId in = tape.concat({node_h[from], edge_e[k], node_h[to]});
    edge_out.push_back(tape.dense(layer.edge_net, in));
  }

  node_out.clear();
  node_out.reserve(topo.n_nodes);
  for (int w = 0; w < topo.n_nodes; ++w) {
    std::vector<ValueId> incoming;
    for (std::size_t k = 0; k < topo.edges.size(); ++k) {
      if (topo.edges[k].second == w) incoming.push_back(edge_out[k]);
    }
    const ValueId agg = tape.sum(incoming, hidden);
    node_out.push_back(tape.dense(layer.node_net, tape.concat({agg, node_h[w]})));
  }
}

ValueId gnn_forward(GradTape& tape, const GnnStack& stack,
                    const ObservationGraph& graph,
                    std::vector<ValueId>* node_ids_out) {
  const int n = static_cast<int>(graph.node_values.size());
  if (n == 0) throw std::domain_error("gnn_forward: empty graph");
  if (graph.ego_index < 0 || graph.ego_index >= n) {
    throw std::domain_error("gnn_forward: ego index out of range");
  }
  if (stack.layers.empty()) throw std::logic_error("gnn_forward: empty stack");

  const GraphTopology topo = topology_of(graph);
  std::vector<ValueId> node_h, edge_e;
  node_h.reserve(n);
  for (const auto& f : graph.node_values) node_h.push_back(tape.input(f));
  edge_e.reserve(graph.edges.size());
  for (const GraphEdge& e : graph.edges) edge_e.push_back(tape.input(e.value));

  std::vector<ValueId> node_next, edge_next;
  for (const GnnLayer& layer : stack.layers) {
    gnn_layer_forward(tape, layer, topo, node_h, edge_e, node_next, edge_next);
    node_h = node_next;
    edge_e = edge_next;
  }
  if (node_ids_out) *node_ids_out = node_h;
  return node_h[graph.ego_index];
}

}  // namespace lanegnn
