#pragma once

// Message-passing network over the observation graph. Each layer applies,
// for every directed edge (u -> w) and node w:
//
//   e'_uw  = edge_net([h_u, e_uw, h_w])
//   agg_w  = sum of e' over edges arriving at w   (empty sum = zero vector)
//   h'_w   = node_net([agg_w, h_w])
//
// There is no global/graph-level update. Edge inputs are the observation's
// edge features in the first layer and the previous layer's edge outputs
// afterwards. The readout is the ego node's final embedding, so information
// from a node can only reach the readout if a directed path of length at
// most `depth` connects it to the ego node.

#include <vector>

#include "lanegnn/observers.hpp"
#include "lanegnn/tape.hpp"

namespace lanegnn {

struct GnnLayer {
  DenseLayer edge_net;
  DenseLayer node_net;
};

struct GnnStack {
  std::vector<GnnLayer> layers;
  int hidden = 0;
};

// Layer 0 consumes raw node/edge features; deeper layers consume hidden
// vectors. All layers use relu.
GnnStack build_gnn(ParameterStore& store, const std::string& prefix,
                   int node_dim, int edge_dim, int hidden, int depth, Rng& rng);

// Connectivity only; values travel separately as tape ids so tests can run
// layers over synthetic states (including duplicate edges).
struct GraphTopology {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // (from, to)
};

GraphTopology topology_of(const ObservationGraph& graph);

// One layer over the given values; fills node_out/edge_out (aggregation
// walks the edge list in order, so summation order is reproducible).
void gnn_layer_forward(GradTape& tape, const GnnLayer& layer,
                       const GraphTopology& topo,
                       const std::vector<ValueId>& node_h,
                       const std::vector<ValueId>& edge_e,
                       std::vector<ValueId>& node_out,
                       std::vector<ValueId>& edge_out);

// Full stack; returns the ego node's final embedding. If node_ids_out is
// non-null it receives the final embedding ids of every node.
ValueId gnn_forward(GradTape& tape, const GnnStack& stack,
                    const ObservationGraph& graph,
                    std::vector<ValueId>* node_ids_out = nullptr);

}  // namespace lanegnn
