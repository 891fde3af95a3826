#pragma once

// Flat store of named parameter tensors with matching gradient buffers.
// Networks hold integer handles into the store; the store is the single
// authority for checkpointing, optimizer state, and gradient plumbing.

#include <map>
#include <string>
#include <vector>

#include "lanegnn/matrix.hpp"
#include "lanegnn/rng.hpp"

namespace lanegnn {

class ParameterStore {
 public:
  // Adds a zero-initialized tensor; names must be unique.
  int add(const std::string& name, int rows, int cols);

  int find(const std::string& name) const;  // -1 if absent
  int count() const { return static_cast<int>(entries_.size()); }
  const std::string& name(int id) const { return entries_.at(id).name; }

  Matrix& value(int id) { return entries_.at(id).value; }
  const Matrix& value(int id) const { return entries_.at(id).value; }
  Matrix& grad(int id) { return entries_.at(id).grad; }
  const Matrix& grad(int id) const { return entries_.at(id).grad; }

  void zero_grads();
  double grad_norm() const;  // global L2 norm across all entries
  // Scales all gradients so the global norm is at most max_norm.
  void clip_grad_norm(double max_norm);

  int total_parameters() const;
  std::vector<double> flatten_values() const;
  std::vector<double> flatten_grads() const;

  // Text checkpoint; hex floats round-trip every double exactly, so a
  // save/load cycle restores bit-identical forward passes.
  void save(const std::string& path,
            const std::map<std::string, std::string>& meta) const;
  // Loads into this store's existing entries; the file must contain exactly
  // the same tensor names and shapes. Returns the meta key/value lines.
  std::map<std::string, std::string> load(const std::string& path);

 private:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
  };
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
};

// Reads only the metadata lines of a checkpoint, without needing a store of
// matching shapes; used to discover what kind of network a file holds.
std::map<std::string, std::string> read_checkpoint_meta(const std::string& path);

// First-order adaptive step; keeps per-parameter first/second moment buffers.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const ParameterStore& store, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  void step(ParameterStore& store, double lr);

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace lanegnn
