#pragma once

// Reverse-mode autodiff over vector values. A GradTape records the primitive
// operations of one forward pass (with cached values); backward() replays
// them in exact reverse order, accumulating parameter gradients into the
// ParameterStore and input gradients onto the tape nodes. Ops only reference
// earlier nodes, so reverse creation order is a valid topological sweep.

#include <string>
#include <vector>

#include "lanegnn/params.hpp"

namespace lanegnn {

enum class Activation { identity, relu, tanh_act };

// Handles into a ParameterStore for one fully connected layer.
// weights has shape out_dim x in_dim, bias is out_dim x 1.
struct DenseLayer {
  int weights = -1;
  int bias = -1;
  Activation activation = Activation::identity;
  int in_dim = 0;
  int out_dim = 0;
};

// Adds a dense layer's tensors to the store. Weights are uniform in
// +/- sqrt(6 / (fan_in + fan_out)), biases zero.
DenseLayer add_dense(ParameterStore& store, const std::string& prefix, int in,
                     int out, Activation act, Rng& rng);

using ValueId = int;

class GradTape {
 public:
  explicit GradTape(ParameterStore& store) : store_(&store) {}

  ValueId input(std::vector<double> v);
  ValueId zeros(int dim);
  // activation(W x + b); caches the pre-activation for the backward sweep.
  ValueId dense(const DenseLayer& layer, ValueId in);
  ValueId concat(const std::vector<ValueId>& parts);
  // Elementwise sum; an empty term list yields a zero vector of width dim.
  ValueId sum(const std::vector<ValueId>& terms, int dim);
  ValueId slice(ValueId v, int offset, int len);

  const std::vector<double>& value(ValueId id) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Reverse sweep from `output` seeded with d(scalar loss)/d(output).
  // Parameter gradients accumulate into the store's grad buffers (callers
  // zero or merge across samples as they see fit). A tape supports exactly
  // one backward sweep; a second call is a usage error.
  void backward(ValueId output, const std::vector<double>& output_grad);

  bool consumed() const { return consumed_; }
  // Gradient w.r.t. any node's value; only valid after backward().
  const std::vector<double>& grad(ValueId id) const;

  // Smallest |pre-activation| over all relu nodes recorded so far. Tests use
  // this to keep finite-difference probes away from the relu kink.
  double min_abs_relu_preactivation() const;

 private:
  enum class Op { input, dense, concat, sum, slice };
  struct Node {
    Op op;
    std::vector<double> value;
    std::vector<double> pre;  // dense only: pre-activation
    std::vector<int> inputs;
    int weights = -1;
    int bias = -1;
    Activation act = Activation::identity;
    int offset = 0;  // slice only
    std::vector<double> grad;
  };

  ValueId push(Node n);
  const Node& node(ValueId id) const;

  ParameterStore* store_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace lanegnn
