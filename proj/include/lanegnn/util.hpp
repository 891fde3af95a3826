#pragma once

// Small shared utilities: error types, angle/numeric helpers, a deterministic
// 64-bit content hash, and double formatting that round-trips exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lanegnn {

// Invalid user-supplied configuration (bad ranges, inconsistent choices).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Scenario generation could not satisfy its placement constraints.
struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss; message carries diagnostic context.
struct TrainingDivergedError : std::runtime_error {
  explicit TrainingDivergedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (config / checkpoint / CSV); message carries location.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  } else if (a > kPi) {
    a -= 2.0 * kPi;
  }
  return a;
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::logic_error(std::string("non-finite value in ") + what);
  }
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) require_finite(x, what);
}

// FNV-1a, used for namespaced seed derivation and content hashing of outputs.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Hex float form; exact and compact, used by the checkpoint format.
inline std::string format_double_hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

// Strict full-token double parse.
inline double parse_double(const std::string& tok, const std::string& where) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ParseError("cannot parse number '" + tok + "' in " + where);
  }
  return v;
}

}  // namespace lanegnn
