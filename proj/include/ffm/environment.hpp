#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ffm/mass_distribution.hpp"

namespace ffm {

/// Output grid for the kinetic solvers: a fine window just past the gelation
/// time (where the control function moves fastest), coarser elsewhere. The
/// integrator may take internal sub-steps; these are the stored times.
struct GridSpec {
  double horizon = 3.0;
  double pre_step = 1e-3;
  double post_step = 5e-4;
  double post_window = 0.5;
  double late_step = 1e-3;
};

/// Time-gridded limiting medium t -> (mass distribution, burn rate phi).
/// Grid times are strictly increasing and include the gelation time exactly
/// (carrying the post-gel value of phi there). Immutable once built.
class Environment {
 public:
  Environment() = default;
  Environment(std::vector<double> times, std::size_t gel_index, double t_gel, std::int64_t trunc,
              std::vector<double> flat_masses, std::vector<double> phi,
              std::vector<double> phi_integral, std::vector<double> tail_amplitude,
              bool conservative);

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  double horizon() const { return times_.back(); }
  std::int64_t truncation() const { return trunc_; }
  double t_gel() const { return t_gel_; }
  bool conservative() const { return conservative_; }
  /// First grid index at or after the gelation time (== size() if the grid
  /// ends before gelation).
  std::size_t gel_index() const { return gel_index_; }

  std::span<const double> row(std::size_t i) const;  // row[k-1] = v_k at grid point i
  double phi(std::size_t i) const { return phi_[i]; }
  double phi_integral(std::size_t i) const { return phi_integral_[i]; }
  double tail_amplitude(std::size_t i) const { return tail_amplitude_[i]; }

  double phi_at(double t) const;           // exactly 0 strictly before t_gel
  double phi_integral_at(double t) const;
  double tail_amplitude_at(double t) const;

  /// Interpolated distribution (linear in t per bucket) with its tail model.
  MassDistribution distribution_at(double t) const;

  /// Paintbox draw from the interpolated distribution. Tail draws use the
  /// mass-exact amplitude (1 - finite mass) * sqrt(K); since the represented
  /// total is then exactly 1 the draw is total on u in [0,1).
  SizeState sample_increment(double t, double u) const;

  /// Probability generating function X_t(z) = sum_k z^k v_k(t) plus the
  /// analytic transform of the tail density. Cubic in t within a segment.
  double pgf(double t, double z) const;

  /// sum_{l>=k} v_l at grid point i, tail included (k from 1 to truncation).
  std::vector<double> suffix_masses(std::size_t i) const;

  /// sum_k v_k/k at grid point i, with the analytic tail contribution.
  double inverse_moment(std::size_t i) const;
  double inverse_moment_at(double t) const;

  /// (sum_k v_k + tail mass) - 1 at grid point i.
  double conservation_defect(std::size_t i) const;

  /// Truncated-plus-tail first moment; +infinity at and after gelation.
  double first_moment_at(double t) const;

  /// Index of the last grid time <= t (requires t within the grid range).
  std::size_t locate(double t) const;

 private:
  void check_range(double t) const;
  double lerp_weight(std::size_t i, double t) const;

  std::vector<double> times_;
  std::size_t gel_index_ = 0;
  double t_gel_ = 0.0;
  std::int64_t trunc_ = 0;
  std::vector<double> masses_;  // size() * trunc_, row-major
  std::vector<double> phi_;
  std::vector<double> phi_integral_;
  std::vector<double> tail_amplitude_;
  bool conservative_ = true;
};

/// Analytic generating-function transform of the power-law tail:
/// integral over (cutoff, inf) of z^x * (amplitude/2) x^{-3/2} dx.
double tail_pgf(double amplitude, double cutoff, double z);

}  // namespace ffm
