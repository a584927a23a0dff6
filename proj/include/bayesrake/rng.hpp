#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bayesrake {

// Deterministic random stream. All variate transforms are implemented here
// (not via std::*_distribution, whose output is implementation-defined), so a
// given (seed, stream) pair produces the same sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Mixed seed for an independent stream (splitmix64 over the pair).
  static std::uint64_t derive(std::uint64_t base_seed, std::uint64_t stream_id) {
    std::uint64_t x = base_seed;
    x = mix(x + 0x9e3779b97f4a7c15ULL);
    x = mix(x ^ (stream_id + 0x9e3779b97f4a7c15ULL));
    return mix(x);
  }

  static Rng stream(std::uint64_t base_seed, std::uint64_t stream_id) {
    return Rng(derive(base_seed, stream_id));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0,1); never returns 0 or 1.
  double u01() {
    const double u = (next_u64() >> 11) * 0x1.0p-53;
    return u == 0.0 ? 0x1.0p-54 : u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Integer uniform on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller, caching the spare deviate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = u01();
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return u01() < p; }

  // Index in [0, probs.size()) with the given (normalized) probabilities.
  template <typename Vec>
  int categorical(const Vec& probs) {
    double u = u01();
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace bayesrake
