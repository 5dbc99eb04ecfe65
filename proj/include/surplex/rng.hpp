#pragma once

#include <cmath>
#include <cstdint>

namespace surplex {

/// Deterministic, platform-independent random generator (splitmix64 core).
/// std::random distributions are implementation-defined, which would break
/// byte-identical reports across compilers; this keeps every draw pinned to
/// the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0,n).
  std::uint64_t uniform_index(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Log-uniform in [lo,hi], lo > 0.
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  bool coin(double p = 0.5) { return uniform() < p; }

  /// Decorrelated child seed for worker `index`.
  static std::uint64_t split(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed ^ (0xd1342543de82ef95ULL * (index + 1)));
    return r.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace surplex
