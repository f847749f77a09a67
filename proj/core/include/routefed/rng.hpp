#pragma once

#include <cstdint>

namespace routefed {

// xoshiro256** seeded through SplitMix64. Every distribution below is
// implemented here from raw 64-bit draws so that streams are reproducible
// across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be > 0. Uses rejection to avoid bias.
  std::uint64_t below(std::uint64_t n);

  // Box-Muller; one draw per call (the second variate is cached).
  double normal();
  double normal(double mean, double stddev);

  // Exact Poisson sampler (Knuth multiplication, λ split into chunks).
  std::uint64_t poisson(double lambda);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t s_[4];
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace routefed
