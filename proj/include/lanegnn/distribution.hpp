#pragma once

// Diagonal Gaussian action head. The network emits raw values; the head maps
// them to a mean squashed strictly inside the action bounds (tanh) and a
// positive stddev (softplus + floor). Backward passes through the head are
// hand-derived closed forms (see chain_to_raw) that seed the tape sweep.
//
// Convention: samples are clamped to the bounds after drawing, and
// log-probabilities are evaluated under the unclamped Gaussian density (no
// squash-correction term). Policy-gradient ratios stay consistent because
// old and new log-probabilities use the same convention on the same actions.

#include <vector>

#include "lanegnn/rng.hpp"

namespace lanegnn {

inline constexpr double kStddevFloor = 1e-5;

double softplus(double x);      // log(1 + e^x), overflow-safe
double softplus_inv(double y);  // inverse for y > 0
double logistic(double x);

// Per-dimension closed action bounds.
struct Bounds {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

struct DiagonalNormal {
  std::vector<double> mean, stddev;
  // Cached head inputs, needed to chain gradients back to the network.
  std::vector<double> mean_raw, stddev_raw;
  Bounds bounds;

  int dim() const { return static_cast<int>(mean.size()); }

  double log_prob(const std::vector<double>& action) const;
  double entropy() const;
  // mean + stddev * z, clamped to bounds; zero stddev returns the mean exactly.
  std::vector<double> sample(Rng& rng) const;

  // d log_prob / d mean and d log_prob / d stddev at `action` (accumulated).
  void log_prob_grad(const std::vector<double>& action, double scale,
                     std::vector<double>& dmean, std::vector<double>& dstddev) const;
  // d entropy / d stddev (accumulated).
  void entropy_grad(double scale, std::vector<double>& dstddev) const;
  // Chains (dL/dmean, dL/dstddev) through the squash/softplus to the raw head
  // outputs; the result matches the projection layout [mean_raw, stddev_raw].
  std::vector<double> chain_to_raw(const std::vector<double>& dmean,
                                   const std::vector<double>& dstddev) const;
};

// mean = lo + (hi - lo) * (tanh(mean_raw) + 1) / 2
// stddev = softplus(stddev_raw) + 1e-5
DiagonalNormal normal_head(const std::vector<double>& mean_raw,
                           const std::vector<double>& stddev_raw,
                           const Bounds& bounds);

}  // namespace lanegnn
