#pragma once

#include <cstdint>
#include <vector>

#include "ffm/cluster_set.hpp"
#include "ffm/jump_path.hpp"
#include "ffm/mass_distribution.hpp"
#include "ffm/rng.hpp"

namespace ffm {

struct SimConfig {
  std::int64_t n = 1000;
  double lambda = 0.0;   // fire rate per vertex
  bool dagger = false;   // double the within-cluster growth clocks
  double horizon = 1.0;
  MassDistribution init = MassDistribution::monodisperse();
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Largest-remainder rounding of n * v_l / l to integer cluster counts;
/// residual vertices become singletons. Returns (size, count) pairs.
std::vector<std::pair<std::int64_t, std::int64_t>> partition_counts(const MassDistribution& init,
                                                                    std::int64_t n);

/// Growth-clock rate attached to a tagged cluster of size k: exactly k under
/// the doubled within-cluster clocks, (k(n-k) + k + C(k,2))/n without them.
double tagged_growth_rate(std::int64_t k, std::int64_t n, bool dagger);

/// Event-driven simulator of the n-vertex forest-fire multigraph. Growth
/// clocks ring per unordered vertex pair (loops included) at rate 1/n; fire
/// clocks per vertex at rate lambda; a fire resets the whole cluster to
/// singletons. Aggregate-rate scheme: one exponential for the system, then
/// a categorical pick. Single-threaded; replicate over stream ids.
class ForestFireModel {
 public:
  explicit ForestFireModel(const SimConfig& cfg, bool ordered_index = false);

  double time() const { return time_; }
  std::int64_t n() const { return cfg_.n; }
  const SimConfig& config() const { return cfg_; }

  /// System-wide growth-clock rate: (n+1)/2 over the unordered pair multiset
  /// including loops, plus the doubled within-cluster pairs when enabled.
  double total_growth_rate() const;
  double fire_rate() const;

  void step();
  void run_until(double t);

  MassDistribution snapshot() const { return clusters_.mass_snapshot(time_); }
  ClusterSet& clusters() { return clusters_; }
  const ClusterSet& clusters() const { return clusters_; }

  std::int64_t tagged_vertex() const { return tagged_; }
  SizeState tagged_size() { return clusters_.cluster_size(tagged_); }
  const JumpPath& tagged_path() const { return path_; }

  std::uint64_t steps_taken() const { return steps_; }
  RandomStream& rng() { return rng_; }

 private:
  std::pair<std::int64_t, std::int64_t> decode_pair(std::uint64_t m) const;
  void apply_growth();
  void apply_fire();
  void apply_event(double growth_rate, double total_rate);

  SimConfig cfg_;
  ClusterSet clusters_;
  RandomStream rng_;
  double time_ = 0.0;
  std::int64_t tagged_ = 0;
  JumpPath path_;
  std::uint64_t steps_ = 0;
};

}  // namespace ffm
