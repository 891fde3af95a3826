#include "lanegnn/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "lanegnn/util.hpp"

namespace lanegnn {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)
}

double softplus(double x) {
  if (x > 30.0) return x;          // log1p(e^x) == x to double precision
  return std::log1p(std::exp(x));  // fine for very negative x (tends to 0)
}

double softplus_inv(double y) {
  if (y <= 0.0) throw std::logic_error("softplus_inv: needs y > 0");
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

DiagonalNormal normal_head(const std::vector<double>& mean_raw,
                           const std::vector<double>& stddev_raw,
                           const Bounds& bounds) {
  const int k = bounds.dim();
  if (static_cast<int>(bounds.hi.size()) != k || k == 0) {
    throw ConfigError("normal_head: malformed bounds");
  }
  if (static_cast<int>(mean_raw.size()) != k ||
      static_cast<int>(stddev_raw.size()) != k) {
    throw std::logic_error("normal_head: raw widths do not match bounds");
  }
  for (int d = 0; d < k; ++d) {
    if (!(bounds.lo[d] < bounds.hi[d])) {
      throw ConfigError("normal_head: bounds must satisfy lo < hi per dimension");
    }
  }
  DiagonalNormal dist;
  dist.mean_raw = mean_raw;
  dist.stddev_raw = stddev_raw;
  dist.bounds = bounds;
  dist.mean.resize(k);
  dist.stddev.resize(k);
  for (int d = 0; d < k; ++d) {
    const double lo = bounds.lo[d];
    const double hi = bounds.hi[d];
    double m = lo + (hi - lo) * (std::tanh(mean_raw[d]) + 1.0) * 0.5;
    // tanh saturates to exactly +/-1 for |raw| beyond ~19, which would pin
    // the mean onto the bound itself; hold it one representable step inside.
    m = std::min(std::max(m, std::nextafter(lo, hi)), std::nextafter(hi, lo));
    dist.mean[d] = m;
    dist.stddev[d] = softplus(stddev_raw[d]) + kStddevFloor;
  }
  return dist;
}

double DiagonalNormal::log_prob(const std::vector<double>& action) const {
  if (action.size() != mean.size()) {
    throw std::logic_error("DiagonalNormal::log_prob: action width mismatch");
  }
  double lp = 0.0;
  for (int d = 0; d < dim(); ++d) {
    if (!(stddev[d] > 0.0)) {
      throw std::logic_error("DiagonalNormal::log_prob: non-positive stddev");
    }
    const double z = (action[d] - mean[d]) / stddev[d];
    lp += -kLogSqrt2Pi - std::log(stddev[d]) - 0.5 * z * z;
  }
  return lp;
}

double DiagonalNormal::entropy() const {
  double h = 0.0;
  for (int d = 0; d < dim(); ++d) {
    h += 0.5 + kLogSqrt2Pi + std::log(stddev[d]);
  }
  return h;
}

std::vector<double> DiagonalNormal::sample(Rng& rng) const {
  std::vector<double> a(dim());
  for (int d = 0; d < dim(); ++d) {
    a[d] = mean[d] + stddev[d] * rng.normal();
    if (!bounds.lo.empty()) {
      a[d] = std::clamp(a[d], bounds.lo[d], bounds.hi[d]);
    }
  }
  return a;
}

void DiagonalNormal::log_prob_grad(const std::vector<double>& action, double scale,
                                   std::vector<double>& dmean,
                                   std::vector<double>& dstddev) const {
  dmean.resize(dim(), 0.0);
  dstddev.resize(dim(), 0.0);
  for (int d = 0; d < dim(); ++d) {
    const double s = stddev[d];
    const double diff = action[d] - mean[d];
    dmean[d] += scale * diff / (s * s);
    dstddev[d] += scale * (diff * diff / (s * s * s) - 1.0 / s);
  }
}

void DiagonalNormal::entropy_grad(double scale, std::vector<double>& dstddev) const {
  dstddev.resize(dim(), 0.0);
  for (int d = 0; d < dim(); ++d) dstddev[d] += scale / stddev[d];
}

std::vector<double> DiagonalNormal::chain_to_raw(
    const std::vector<double>& dmean, const std::vector<double>& dstddev) const {
  const int k = dim();
  std::vector<double> raw(2 * k, 0.0);
  for (int d = 0; d < k; ++d) {
    const double t = std::tanh(mean_raw[d]);
    raw[d] = dmean[d] * (bounds.hi[d] - bounds.lo[d]) * 0.5 * (1.0 - t * t);
    raw[k + d] = dstddev[d] * logistic(stddev_raw[d]);
  }
  return raw;
}

}  // namespace lanegnn
