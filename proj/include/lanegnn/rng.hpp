#pragma once

// Deterministic random numbers. Everything that needs randomness takes an
// explicit Rng (or a seed) so runs are reproducible from a single root seed.
// Distribution sampling is implemented by hand on top of the raw engine:
// the standard library's <random> distributions are implementation-defined
// and would make recorded expectations fragile.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "lanegnn/util.hpp"

namespace lanegnn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Namespaced seed streams: one root seed fans out into independent purposes
// ("rollout", "eval-scenario", ...) plus an index within the purpose, so
// training and evaluation never share random draws.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                 std::uint64_t index = 0) {
  std::uint64_t h = fnv1a64(purpose);
  std::uint64_t s = splitmix64(root ^ h);
  return splitmix64(s ^ (index * 0x9e3779b97f4a7c15ull + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::logic_error("Rng::uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Standard normal via Box-Muller (cosine branch only, so the engine state
  // advances by exactly two draws per sample).
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Fisher-Yates; spelled out because std::shuffle's draw pattern is
  // implementation-defined.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lanegnn
