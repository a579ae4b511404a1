#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ffm/characteristics.hpp"
#include "ffm/environment.hpp"
#include "ffm/limit_process.hpp"
#include "ffm/mass_distribution.hpp"

namespace ffm {

enum class Region { E1, E2, E3, E4, E5, E6 };

/// Partition of (state bit, finite size, limit size) given the size
/// threshold K. E6 is the unreachable remainder; producing it is a bug in
/// the joint dynamics, not a model event.
Region classify_region(bool failed, SizeState cn, SizeState ctilde, std::int64_t K);

const char* region_name(Region r);

enum class FailureCause : std::uint8_t {
  none,       // coupled up to the horizon
  init,       // shared-uniform initial draws disagreed
  paintbox,   // growth increments disagreed while coupled
  self_edge,  // new edge landed inside the tagged cluster
  small_fire, // tagged cluster burned while at or below K
  e3_jump,    // limit side jumped out of state 1 before the finite side burned
  e4_jump,    // finite side jumped before the limit side finished exploding
};

const char* failure_cause_name(FailureCause c);

struct CouplingConfig {
  std::int64_t n = 10000;
  double lambda = 0.01;
  std::int64_t K = 64;     // region size threshold
  double horizon = 2.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::int64_t threshold = 100000;  // explosion threshold for the limit side
  MassDistribution init = MassDistribution::monodisperse();
  // The (dagger) doubled within-cluster clocks are always on here: the
  // construction needs the tagged growth rate to be exactly its size.
};

struct CouplingResult {
  double tau = 0.0;  // failure time; infinity when the coupling held to T
  FailureCause cause = FailureCause::none;
  double sup_distance = 0.0;
  std::array<double, 5> region_time{};  // occupation of E1..E5
  std::uint64_t events = 0;
  SizeState cn_at_horizon = 1;
  SizeState ctilde_at_horizon = 1;
};

/// One replica of the joint (S, C^n, C-tilde) evolution over [0, horizon].
/// Throws RegionE6Reached if the state ever leaves the allowed regions or a
/// region transition happens outside the E1 -> E2 -> (E3|E4) -> E1 cycle
/// while the state bit is still 0.
CouplingResult run_coupling(const CouplingConfig& cfg, const Environment& env,
                            const CurveFamily& curves);

struct FailureStats {
  std::size_t replicas = 0;
  double p_failed = 0.0;       // empirical P[tau <= T]
  double p_failed_se = 0.0;
  double eps = 0.1;
  double p_sup_exceeds = 0.0;  // empirical P[sup d_E > eps]
  double p_sup_se = 0.0;
  std::array<double, 5> mean_region_time{};
  std::array<std::size_t, 7> cause_counts{};  // indexed by FailureCause
  std::vector<SizeState> ctilde_at_horizon;   // pooled for marginal-law tests
  std::vector<double> sup_distances;
};

FailureStats failure_stats(const CouplingConfig& cfg, const Environment& env,
                           const CurveFamily& curves, std::size_t replicas, double eps = 0.1);

/// Aggregates already-run replicas into the same summary.
FailureStats aggregate_failure_stats(const std::vector<CouplingResult>& results, double eps = 0.1);

struct PaintboxCheck {
  double empirical = 0.0;
  double bound = 0.0;  // 6 * eta
  double std_error = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

/// Empirical shared-uniform mismatch rate of two close distributions against
/// the 6*eta bound. Hypotheses (per-bucket closeness eta/K^2 up to K, tail
/// mass <= eta) are verified first; HypothesisUnmet otherwise.
PaintboxCheck paintbox_mismatch_check(const MassDistribution& a, const MassDistribution& b,
                                      std::int64_t K, double eta, std::size_t trials,
                                      std::uint64_t seed);

}  // namespace ffm
