#pragma once

#include <cstdint>

namespace ffm {

/// Reproducible uniform random stream: xoshiro256++ seeded through
/// SplitMix64 from a (seed, stream_id) pair. Streams with distinct ids are
/// statistically independent, and a given (seed, stream_id) yields the same
/// sequence regardless of which thread consumes it. Single-owner: never
/// share one stream across threads; give each task its own stream_id.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform double in [0,1) with 53 random bits.
  double next_double();

  /// Uniform integer in [0, n), n >= 1. Unbiased (rejection on the boundary).
  std::uint64_t next_below(std::uint64_t n);

  /// Exponential holding time with the given rate (> 0).
  double exponential(double rate);

 private:
  std::uint64_t state_[4];
};

}  // namespace ffm
