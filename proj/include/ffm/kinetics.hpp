#pragma once

#include <cstdint>

#include "ffm/environment.hpp"
#include "ffm/mass_distribution.hpp"

namespace ffm {

struct SolverOptions {
  double rel_tol = 1e-8;            // step-doubling error control, per component
  double abs_tol = 1e-11;
  double stability_fraction = 2.5;  // cap k_max * h for the explicit stepper
  int max_halvings = 14;
  bool richardson_phi = true;       // extrapolate the flux estimator in K
  double clamp_floor = -1e-12;      // negatives above this clamp to zero
  double phi_consistency_rel = 0.25;
  double phi_consistency_abs = 0.02;
};

/// Borel mass function: fraction of vertices in size-k clusters at time t for
/// the fire-free monodisperse system, k^{k-1}/k! e^{-kt} t^{k-1}. Evaluated
/// in extended precision; relative error ~1e-14 up to k = 10^4.
double borel_mass(std::int64_t k, double t);

/// Reciprocal first moment of the initial condition.
double gelation_time(const MassDistribution& init);

/// Truncated self-convolution c[k] = sum_{l=1}^{k-1} a[l] a[k-l], k <= n.
/// Arrays are size-indexed with [0] unused. Direct up to 4096, recursive
/// splitting above.
void self_convolution(const double* a, double* c, std::int64_t n);

/// Fire-free coagulation system, mass flowing monotonically to larger sizes
/// (and past the truncation). No control term; not conservative past gelation.
Environment solve_smoluchowski(const MassDistribution& init, std::int64_t K, const GridSpec& grid,
                               const SolverOptions& opts = {});

/// Conservative system: same coagulation for k >= 2, with the burn rate
/// phi(t) feeding mass back into size 1 after gelation. phi is estimated per
/// step as the mass flux past the truncation, Richardson-extrapolated in K.
Environment solve_cffe(const MassDistribution& init, std::int64_t K, const GridSpec& grid,
                       const SolverOptions& opts = {});

/// Truncated-plus-tail mean cluster size; +infinity at and after gelation.
double mean_cluster_size(const Environment& env, double t);

/// Characteristic curve of the fire-free generating-function PDE,
/// w e^{t(1 - S0(w))} for w in (0,1].
double smoluchowski_characteristic(double w, double t, const MassDistribution& init);

/// Residual of the average-burn-rate identity
/// |E[1/C_t] - E[1/C_0] - int_0^t phi + t/2|; a solver quality metric.
double burn_rate_residual(const Environment& env, double t);

}  // namespace ffm
