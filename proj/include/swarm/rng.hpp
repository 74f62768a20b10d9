#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "swarm/bytes.hpp"

namespace swarm {

// xoshiro256** with splitmix64 seeding. The generator and every
// distribution helper below are spelled out explicitly so that a scenario
// seed produces the same draw sequence on every platform; the standard
// <random> distributions make no such guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent substream derived from a seed and a label. Changing one
  /// subsystem's consumption pattern never perturbs another stream.
  static Rng derive(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_u64(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  bool bernoulli(double p) { return uniform() < p; }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  /// Standard normal via Box-Muller (cosine branch only, stateless).
  double normal();

  /// Log-normal parameterized by its median and log-space sigma.
  double lognormal_median(double median, double sigma);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Identity permutation of size n, shuffled in place.
  std::vector<std::uint32_t> permutation(std::uint32_t n);

 private:
  std::uint64_t s_[4];
};

/// Pure function of (seed, label, payload) -> uniform in [0,1). Used for
/// quantities that must not depend on event ordering, e.g. pairwise link
/// latency draws that survive churn.
double hash_uniform(std::uint64_t seed, std::string_view label, const Bytes32& a,
                    const Bytes32& b);

}  // namespace swarm
