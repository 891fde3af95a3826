#include "lanegnn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lanegnn/util.hpp"

namespace lanegnn {

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh_act: return std::tanh(z);
  }
  return z;
}

// Derivative in terms of the cached pre-activation. The relu subgradient at
// exactly zero is taken as zero.
double activate_deriv(Activation act, double z) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh_act: {
      double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

bool all_zero(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace

DenseLayer add_dense(ParameterStore& store, const std::string& prefix, int in,
                     int out, Activation act, Rng& rng) {
  if (in <= 0 || out <= 0) {
    throw std::logic_error("add_dense: bad dimensions for " + prefix);
  }
  DenseLayer layer;
  layer.weights = store.add(prefix + "/weights", out, in);
  layer.bias = store.add(prefix + "/bias", out, 1);
  layer.activation = act;
  layer.in_dim = in;
  layer.out_dim = out;
  const double lim = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix& w = store.value(layer.weights);
  for (double& x : w.data) x = rng.uniform(-lim, lim);
  return layer;
}

ValueId GradTape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

const GradTape::Node& GradTape::node(ValueId id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw std::logic_error("GradTape: invalid value id");
  }
  return nodes_[id];
}

ValueId GradTape::input(std::vector<double> v) {
  require_finite(v, "GradTape::input");
  Node n;
  n.op = Op::input;
  n.value = std::move(v);
  return push(std::move(n));
}

ValueId GradTape::zeros(int dim) {
  if (dim <= 0) throw std::logic_error("GradTape::zeros: bad dim");
  Node n;
  n.op = Op::input;
  n.value.assign(dim, 0.0);
  return push(std::move(n));
}

ValueId GradTape::dense(const DenseLayer& layer, ValueId in) {
  const Node& x = node(in);
  if (static_cast<int>(x.value.size()) != layer.in_dim) {
    throw std::logic_error("GradTape::dense: input width " +
                           std::to_string(x.value.size()) + " != layer in_dim " +
                           std::to_string(layer.in_dim));
  }
  const Matrix& w = store_->value(layer.weights);
  const Matrix& b = store_->value(layer.bias);
  Node n;
  n.op = Op::dense;
  n.inputs = {in};
  n.weights = layer.weights;
  n.bias = layer.bias;
  n.act = layer.activation;
  n.pre.resize(layer.out_dim);
  matvec(w, x.value.data(), b.data.data(), n.pre.data());
  n.value.resize(layer.out_dim);
  for (int i = 0; i < layer.out_dim; ++i) n.value[i] = activate(n.act, n.pre[i]);
  require_finite(n.value, "GradTape::dense output");
  return push(std::move(n));
}

ValueId GradTape::concat(const std::vector<ValueId>& parts) {
  if (parts.empty()) throw std::logic_error("GradTape::concat: no parts");
  Node n;
  n.op = Op::concat;
  n.inputs = parts;
  for (ValueId id : parts) {
    const auto& v = node(id).value;
    n.value.insert(n.value.end(), v.begin(), v.end());
  }
  return push(std::move(n));
}

ValueId GradTape::sum(const std::vector<ValueId>& terms, int dim) {
  if (terms.empty()) return zeros(dim);
  Node n;
  n.op = Op::sum;
  n.inputs = terms;
  n.value.assign(dim, 0.0);
  for (ValueId id : terms) {
    const auto& v = node(id).value;
    if (static_cast<int>(v.size()) != dim) {
      throw std::logic_error("GradTape::sum: width mismatch");
    }
    for (int i = 0; i < dim; ++i) n.value[i] += v[i];
  }
  return push(std::move(n));
}

ValueId GradTape::slice(ValueId v, int offset, int len) {
  const Node& x = node(v);
  if (offset < 0 || len <= 0 ||
      offset + len > static_cast<int>(x.value.size())) {
    throw std::logic_error("GradTape::slice: range out of bounds");
  }
  Node n;
  n.op = Op::slice;
  n.inputs = {v};
  n.offset = offset;
  n.value.assign(x.value.begin() + offset, x.value.begin() + offset + len);
  return push(std::move(n));
}

const std::vector<double>& GradTape::value(ValueId id) const {
  return node(id).value;
}

void GradTape::backward(ValueId output, const std::vector<double>& output_grad) {
  if (consumed_) {
    throw std::logic_error("GradTape::backward: tape already consumed");
  }
  const Node& out = node(output);
  if (out.value.size() != output_grad.size()) {
    throw std::logic_error("GradTape::backward: seed width mismatch");
  }
  consumed_ = true;
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[output].grad = output_grad;

  std::vector<double> gz;  // scratch: grad through the activation
  for (int i = output; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.op == Op::input || all_zero(n.grad)) continue;
    switch (n.op) {
      case Op::dense: {
        const int out_dim = static_cast<int>(n.value.size());
        gz.resize(out_dim);
        for (int k = 0; k < out_dim; ++k) {
          gz[k] = n.grad[k] * activate_deriv(n.act, n.pre[k]);
        }
        Node& x = nodes_[n.inputs[0]];
        outer_add(store_->grad(n.weights), gz.data(), x.value.data());
        auto& bg = store_->grad(n.bias).data;
        for (int k = 0; k < out_dim; ++k) bg[k] += gz[k];
        matvec_transpose_add(store_->value(n.weights), gz.data(), x.grad.data());
        break;
      }
      case Op::concat: {
        std::size_t off = 0;
        for (ValueId id : n.inputs) {
          auto& g = nodes_[id].grad;
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[off + k];
          off += g.size();
        }
        break;
      }
      case Op::sum: {
        for (ValueId id : n.inputs) {
          auto& g = nodes_[id].grad;
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
        }
        break;
      }
      case Op::slice: {
        auto& g = nodes_[n.inputs[0]].grad;
        for (std::size_t k = 0; k < n.grad.size(); ++k) g[n.offset + k] += n.grad[k];
        break;
      }
      case Op::input:
        break;
    }
  }
}

const std::vector<double>& GradTape::grad(ValueId id) const {
  if (!consumed_) {
    throw std::logic_error("GradTape::grad: backward has not run");
  }
  return node(id).grad;
}

double GradTape::min_abs_relu_preactivation() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : nodes_) {
    if (n.op != Op::dense || n.act != Activation::relu) continue;
    for (double z : n.pre) best = std::min(best, std::abs(z));
  }
  return best;
}

}  // namespace lanegnn
