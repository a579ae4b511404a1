#pragma once

#include <cstddef>
#include <vector>

#include "ffm/environment.hpp"
#include "ffm/stats.hpp"

namespace ffm {

/// Scaled generating-function deficit (1 - X_t(1 - w^2)) / w together with
/// its continuous extensions: 1 for w > 1 and sqrt(2 phi(t)) for w <= 0.
/// Below `blend_width(env)` the middle branch is blended linearly into the
/// w -> 0 limit, since the truncated X cannot resolve the singularity there.
double gap_ratio(const Environment& env, double t, double w);

/// Width of the blending region: 10/K, ten size buckets at the cutoff edge
/// (calibrated so the raw evaluation is still defect-dominated below it).
double blend_width(const Environment& env);

/// Characteristic curve of the controlled generating-function PDE for one
/// horizon y > t_gel: psi(t) = 1 for t >= y, strictly increasing on [0, y],
/// d psi/dt = psi (1 - X_t(psi)). Solved backwards from y, through the gel
/// boundary in the de-singularized variable upsilon with psi = 1 - upsilon^2.
class CharacteristicCurve {
 public:
  double horizon() const { return y_; }
  double t_gel() const { return t_gel_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& psi() const { return psi_; }
  /// upsilon values on the post-gel part of the grid (empty pre-gel slots
  /// are not stored; index 0 corresponds to grid()[gel_offset()]).
  const std::vector<double>& upsilon() const { return upsilon_; }
  std::size_t gel_offset() const { return gel_offset_; }

  double psi_at(double t) const;      // 1 for t >= horizon
  double value_at_origin() const { return psi_.front(); }

  /// Survival of the tagged process: P[no explosion in (s, y] | state k at s]
  /// equals psi(s)^k.
  double survival(double s, std::int64_t k) const;

  /// max over interior grid points of |dpsi/dt - psi (1 - X_t(psi))| using
  /// centered differences; the quality metric for the backward solve.
  double ode_residual(const Environment& env) const;

  /// Rebuilds a curve from stored arrays (deserialization).
  static CharacteristicCurve from_parts(double y, double t_gel, std::vector<double> grid,
                                        std::vector<double> psi, std::vector<double> upsilon,
                                        std::size_t gel_offset);

 private:
  friend CharacteristicCurve solve_characteristic(const Environment&, double,
                                                  const struct CurveOptions&);
  double y_ = 0.0;
  double t_gel_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> psi_;
  std::vector<double> upsilon_;
  std::size_t gel_offset_ = 0;
  MonotoneCubic interp_;
};

struct CurveOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_halvings = 16;
};

/// Backward solve for one horizon. Throws HorizonBeforeGel when y <= t_gel
/// and EnvTooShort when the environment does not cover [0, y].
CharacteristicCurve solve_characteristic(const Environment& env, double y,
                                         const CurveOptions& opts = {});

double explosion_survival(const CharacteristicCurve& curve, double s, std::int64_t k);

/// Family of curves over geometrically spaced horizons, supporting the
/// inverse map y -> psi_y(s) needed to draw explosion times.
class CurveFamily {
 public:
  CurveFamily() = default;
  /// Horizons t_gel + span * ratio^{-i}: `count` of them, the largest at
  /// y_max >= the sampling horizon, the smallest y_min close to t_gel.
  CurveFamily(const Environment& env, double y_max, std::size_t count = 64,
              double y_min_offset = 5e-4);

  /// Wraps already-solved curves (e.g. loaded from disk); sorts by horizon.
  CurveFamily(const Environment& env, std::vector<CharacteristicCurve> curves);

  const std::vector<CharacteristicCurve>& curves() const { return curves_; }
  double t_gel() const { return t_gel_; }
  double max_horizon() const { return curves_.empty() ? 0.0 : curves_.back().horizon(); }

  /// psi_y(s) for arbitrary y via monotone interpolation over the family.
  double survival_probability(double s, double y) const;

  /// Smallest y with psi_y(s) <= target (the explosion-time quantile).
  /// Returns +infinity when even the largest stored horizon survives with
  /// probability above `target` (no explosion within the family's range);
  /// the caller must ensure max_horizon covers its sampling horizon.
  double invert_survival(double s, double target) const;

 private:
  MonotoneCubic survival_curve(double s) const;

  std::vector<CharacteristicCurve> curves_;
  double t_gel_ = 0.0;
};

}  // namespace ffm
