#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mdts {

// SplitMix64 finalizer. Used to derive independent per-stream seeds.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

// Portable random source: std::mt19937_64 (bit-exact by the C++ standard)
// with hand-written transforms, because the std:: distributions are
// implementation-defined and would make splits differ across toolchains.
//   uniform01:   top 53 bits / 2^53
//   uniform_int: rejection sampling on the low bits (no modulo bias)
//   normal:      Marsaglia polar method, spare value cached
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(MixSeed(seed, 0)) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform_int(std::uint64_t bound);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mdts
