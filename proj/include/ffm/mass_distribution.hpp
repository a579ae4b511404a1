#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ffm {

/// Cluster size. The state space is the positive integers compactified so
/// that huge sizes sit next to 1 (an exploding cluster burns and re-enters
/// state 1); the compactification only ever enters through state_distance.
using SizeState = std::int64_t;

/// Metric on the compactified size space: |f(i)-f(j)| with f(1)=0 and
/// f(i)=1/i for i>=2. Range [0, 1/2].
double state_distance(SizeState i, SizeState j);

/// Power-law tail attached beyond a finite truncation: mass above any
/// k >= cutoff is amplitude * k^{-1/2}, i.e. density (amplitude/2) k^{-3/2}.
struct TailModel {
  std::int64_t cutoff = 0;
  double amplitude = 0.0;

  double mass() const;                    // total mass beyond cutoff
  double mass_above(double k) const;      // mass strictly above k (k >= cutoff)
  /// First moment of the tail: infinite whenever amplitude > 0.
  double first_moment() const;
};

/// Finite vector of cluster-size mass fractions v_1..v_K with an optional
/// power-law tail. Immutable by convention once built.
class MassDistribution {
 public:
  MassDistribution() = default;
  MassDistribution(std::vector<double> masses, std::optional<TailModel> tail = std::nullopt,
                   double as_of = 0.0);

  static MassDistribution monodisperse();
  static MassDistribution point_mass(std::int64_t size);

  std::int64_t max_size() const { return static_cast<std::int64_t>(masses_.size()); }
  double mass(std::int64_t k) const;
  std::span<const double> masses() const { return masses_; }
  const std::optional<TailModel>& tail() const { return tail_; }
  double as_of() const { return as_of_; }

  double finite_mass() const;  // sum of the stored entries
  double total_mass() const;   // including the tail
  double first_moment() const; // +inf when the tail carries mass

  /// True when total mass is within tol of 1.
  bool conservative(double tol = 1e-9) const;

  /// Throws NonConservative/usage errors when entries are negative or the
  /// total is not a sub-probability within tol.
  void validate(double tol = 1e-9) const;

 private:
  std::vector<double> masses_;  // masses_[k-1] = mass at size k
  std::optional<TailModel> tail_;
  double as_of_ = 0.0;
};

/// Inverse-CDF (paintbox) sample: smallest k with u < sum_{l<=k} masses_l,
/// falling through to the analytic tail inverse when u exceeds the finite
/// sum. Ties resolve upward. Throws NonConservative when u falls beyond all
/// representable mass.
std::int64_t sample_size(const MassDistribution& dist, double u);

/// Tail-only inverse CDF: smallest tail size consistent with residual mass
/// `remaining` in [0, tail.mass()). Rounds up to the next integer > cutoff.
std::int64_t sample_tail(const TailModel& tail, double remaining);

}  // namespace ffm
