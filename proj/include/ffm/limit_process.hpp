#pragma once

#include <cstdint>
#include <vector>

#include "ffm/characteristics.hpp"
#include "ffm/environment.hpp"
#include "ffm/jump_path.hpp"
#include "ffm/rng.hpp"
#include "ffm/stats.hpp"

namespace ffm {

/// Monte Carlo sampler of the limiting tagged-cluster process: from state k
/// it jumps at rate k, incrementing by a draw from the environment at the
/// jump time. Once the state passes `threshold` the explosion time is drawn
/// exactly from the survival law psi_y(s)^k via the curve family, the path
/// records an explosion and restarts from 1. Events above the threshold are
/// not resolved individually (they are all larger than any reported bucket).
class LimitSampler {
 public:
  /// `curves` may be null only when the environment never reaches gelation
  /// within its horizon (then no explosion can occur in range).
  LimitSampler(const Environment& env, const CurveFamily* curves, std::int64_t threshold = 100000);

  JumpPath sample_path(double horizon, RandomStream& rng) const;
  JumpPath sample_path_from(double start, SizeState state, double horizon,
                            RandomStream& rng) const;

  const Environment& environment() const { return *env_; }
  std::int64_t threshold() const { return threshold_; }

 private:
  const Environment* env_;
  const CurveFamily* curves_;
  std::int64_t threshold_;
};

struct EmpiricalLaw {
  double t = 0.0;
  std::size_t n_paths = 0;
  std::vector<double> masses;     // masses[k-1] = empirical P[C_t = k]
  std::vector<double> std_error;  // binomial, per bucket
  double overflow = 0.0;          // mass above the reported buckets
};

EmpiricalLaw empirical_law(const LimitSampler& sampler, double t, std::size_t n_paths,
                           std::uint64_t seed, std::int64_t bucket_cap = 1024);

struct ExplosionCountStats {
  MeanCi count;            // mean explosions per path on [0, T]
  double predicted = 0.0;  // integral of phi over [0, T]
  std::size_t pre_gel_explosions = 0;
  double bound = 0.0;      // the a priori bound 1 + T
};

ExplosionCountStats explosion_count_stats(const LimitSampler& sampler, double horizon,
                                          std::size_t n_paths, std::uint64_t seed);

struct ExplosionProbCheck {
  double empirical = 0.0;
  double predicted = 0.0;  // psi_y(s) from a dedicated curve solve
  double z = 0.0;
  std::size_t n_paths = 0;
};

/// No-explosion frequency of the process started at 1 at time s, over
/// (s, y], against the characteristic-curve prediction.
ExplosionProbCheck explosion_prob_check(const LimitSampler& sampler, double s, double y,
                                        std::size_t n_paths, std::uint64_t seed);

}  // namespace ffm
