#include "ffm/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ffm/errors.hpp"

namespace ffm {

namespace {

constexpr std::int64_t kDirectConvCutoff = 4096;

// Truncated symmetric pass: c[l+m] += 2 a[l] a[m] for l < m, l+m <= n, plus
// the diagonal. Arrays size-indexed, [0] unused.
void conv_direct_trunc_add(const double* a, double* c, std::int64_t n) {
  for (std::int64_t l = 1; 2 * l < n; ++l) {
    const double al2 = 2.0 * a[l];
    const std::int64_t mmax = n - l;
    const double* am = a + l + 1;
    double* ck = c + 2 * l + 1;
    for (std::int64_t m = l + 1; m <= mmax; ++m) *ck++ += al2 * *am++;
  }
  for (std::int64_t l = 1; 2 * l <= n; ++l) c[2 * l] += a[l] * a[l];
}

// Full square of a[1..h] accumulated into c[2..2h].
void square_full_add(const double* a, std::int64_t h, double* c);

void square_full_direct_add(const double* a, std::int64_t h, double* c) {
  for (std::int64_t l = 1; l < h; ++l) {
    const double al2 = 2.0 * a[l];
    const double* am = a + l + 1;
    double* ck = c + 2 * l + 1;
    for (std::int64_t m = l + 1; m <= h; ++m) *ck++ += al2 * *am++;
  }
  for (std::int64_t l = 1; l <= h; ++l) c[2 * l] += a[l] * a[l];
}

void square_full_add(const double* a, std::int64_t h, double* c) {
  if (h <= kDirectConvCutoff) {
    square_full_direct_add(a, h, c);
    return;
  }
  // Karatsuba squaring: a = lo + x^q hi, cross term from (lo+hi)^2.
  const std::int64_t q = h / 2;
  const std::int64_t r = h - q;
  std::vector<double> s(static_cast<std::size_t>(r) + 1, 0.0);
  for (std::int64_t i = 1; i <= r; ++i) s[static_cast<std::size_t>(i)] = a[q + i];
  for (std::int64_t i = 1; i <= q; ++i) s[static_cast<std::size_t>(i)] += a[i];
  std::vector<double> lo2(2 * static_cast<std::size_t>(q) + 1, 0.0);
  std::vector<double> hi2(2 * static_cast<std::size_t>(r) + 1, 0.0);
  std::vector<double> s2(2 * static_cast<std::size_t>(r) + 1, 0.0);
  square_full_add(a, q, lo2.data());
  square_full_add(a + q, r, hi2.data());
  square_full_add(s.data(), r, s2.data());
  for (std::int64_t d = 2; d <= 2 * q; ++d) c[d] += lo2[static_cast<std::size_t>(d)];
  for (std::int64_t d = 2; d <= 2 * r; ++d) {
    double x = s2[static_cast<std::size_t>(d)] - hi2[static_cast<std::size_t>(d)];
    if (d <= 2 * q) x -= lo2[static_cast<std::size_t>(d)];
    c[q + d] += x;  // cross term shifted by q
  }
  for (std::int64_t d = 2; d <= 2 * r; ++d) c[2 * q + d] += hi2[static_cast<std::size_t>(d)];
}

// Truncated square with one divide-and-conquer split: degrees above n from
// the high half cannot contribute, so only lo^2 and the lo*hi band survive.
void square_trunc_add(const double* a, double* c, std::int64_t n) {
  if (n <= kDirectConvCutoff) {
    conv_direct_trunc_add(a, c, n);
    return;
  }
  const std::int64_t h = n / 2;
  square_full_add(a, h, c);
  for (std::int64_t l = 1; l <= h; ++l) {
    const std::int64_t mmax = n - l;
    if (mmax <= h) break;
    const double al2 = 2.0 * a[l];
    const double* am = a + h + 1;
    double* ck = c + l + h + 1;
    for (std::int64_t m = h + 1; m <= mmax; ++m) *ck++ += al2 * *am++;
  }
}

}  // namespace

void self_convolution(const double* a, double* c, std::int64_t n) {
  std::fill(c, c + n + 1, 0.0);
  square_trunc_add(a, c, n);
}

double borel_mass(std::int64_t k, double t) {
  if (k < 1 || t < 0.0) fail(Errc::usage_error, "borel_mass: need k >= 1, t >= 0");
  if (t == 0.0) return k == 1 ? 1.0 : 0.0;
  const auto kl = static_cast<long double>(k);
  const long double lv = (kl - 1.0L) * (std::log(kl) + std::log(static_cast<long double>(t))) -
                         kl * static_cast<long double>(t) - std::lgamma(kl + 1.0L);
  return static_cast<double>(std::exp(lv));
}

double gelation_time(const MassDistribution& init) {
  const double m1 = init.first_moment();
  if (!(m1 > 0.0)) fail(Errc::zero_moment, "gelation_time: initial first moment is zero");
  if (std::isinf(m1)) fail(Errc::usage_error, "gelation_time: initial first moment diverges");
  return 1.0 / m1;
}

double smoluchowski_characteristic(double w, double t, const MassDistribution& init) {
  if (!(w > 0.0) || w > 1.0) fail(Errc::usage_error, "smoluchowski_characteristic: w in (0,1]");
  double s0 = 0.0;
  const auto ms = init.masses();
  for (std::size_t i = ms.size(); i-- > 0;) s0 = s0 * w + ms[i];
  s0 *= w;
  return w * std::exp(t * (1.0 - s0));
}

namespace {

struct FluxEstimate {
  double phi = 0.0;          // extrapolated, clamped at zero
  double raw_flux = 0.0;     // flux at the full truncation
  double consistency = 0.0;  // |extrap(K,K/2) - extrap(K/2,K/4)|
};

class CoagulationSystem {
 public:
  CoagulationSystem(std::int64_t K, bool control, const SolverOptions& opts)
      : K_(K), control_(control), opts_(opts), conv_(static_cast<std::size_t>(K) + 1) {}

  std::int64_t truncation() const { return K_; }

  FluxEstimate flux_estimate(const std::vector<double>& v) {
    self_convolution(v.data(), conv_.data(), K_);
    return flux_from_conv(v);
  }

  // dv into `out`; returns the control rate used for this evaluation.
  double rhs(const std::vector<double>& v, std::vector<double>& out, bool post_gel) {
    self_convolution(v.data(), conv_.data(), K_);
    double phi = 0.0;
    if (control_ && post_gel) phi = flux_from_conv(v).phi;
    out[0] = 0.0;
    for (std::int64_t k = 1; k <= K_; ++k) {
      const auto kd = static_cast<double>(k);
      out[static_cast<std::size_t>(k)] =
          kd * (0.5 * conv_[static_cast<std::size_t>(k)] - v[static_cast<std::size_t>(k)]);
    }
    out[1] += phi;
    return phi;
  }

 private:
  FluxEstimate flux_from_conv(const std::vector<double>& v) {
    const std::int64_t k4 = K_ / 4, k2 = K_ / 2;
    double flux = 0.0, f4 = 0.0, f2 = 0.0;
    for (std::int64_t k = 1; k <= K_; ++k) {
      const auto kd = static_cast<double>(k);
      flux += kd * (v[static_cast<std::size_t>(k)] - 0.5 * conv_[static_cast<std::size_t>(k)]);
      if (k == k4) f4 = flux;
      if (k == k2) f2 = flux;
    }
    FluxEstimate est;
    est.raw_flux = flux;
    if (opts_.richardson_phi && k4 >= 2) {
      // Truncation error of the flux decays like K^{-1/2}.
      const double c = 1.0 / (std::sqrt(2.0) - 1.0);
      const double r1 = flux + (flux - f2) * c;
      const double r2 = f2 + (f2 - f4) * c;
      est.phi = std::max(r1, 0.0);
      est.consistency = std::fabs(r1 - r2);
    } else {
      est.phi = std::max(flux, 0.0);
    }
    return est;
  }

  std::int64_t K_;
  bool control_;
  SolverOptions opts_;
  std::vector<double> conv_;
};

struct OdeState {
  std::vector<double> v;      // size-indexed, [0] unused
  double phi_integral = 0.0;
};

class RK4Stepper {
 public:
  RK4Stepper(CoagulationSystem& sys, const SolverOptions& opts)
      : sys_(sys), opts_(opts) {
    const auto n = static_cast<std::size_t>(sys.truncation()) + 1;
    for (auto* b : {&k1_, &k2_, &k3_, &k4_, &tmp_, &k_start_}) b->assign(n, 0.0);
  }

  // One classical step of size h from `in` to `out`. The first stage can be
  // supplied by the caller (it is shared between a full step and the first
  // half step of the doubling pair).
  void step(const OdeState& in, double h, bool post_gel, OdeState& out,
            const std::vector<double>* shared_k1 = nullptr, double shared_p1 = 0.0) {
    const std::size_t n = in.v.size();
    double p1;
    if (shared_k1 != nullptr) {
      k1_ = *shared_k1;
      p1 = shared_p1;
    } else {
      p1 = sys_.rhs(in.v, k1_, post_gel);
    }
    axpy(in.v, 0.5 * h, k1_, tmp_);
    const double p2 = sys_.rhs(tmp_, k2_, post_gel);
    axpy(in.v, 0.5 * h, k2_, tmp_);
    const double p3 = sys_.rhs(tmp_, k3_, post_gel);
    axpy(in.v, h, k3_, tmp_);
    const double p4 = sys_.rhs(tmp_, k4_, post_gel);
    out.v.resize(n);
    const double w = h / 6.0;
    for (std::size_t i = 0; i < n; ++i)
      out.v[i] = in.v[i] + w * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
    out.phi_integral = in.phi_integral + w * (p1 + 2.0 * (p2 + p3) + p4);
  }

  // Advances `state` to t1 with step-doubling error control.
  void integrate(OdeState& state, double t0, double t1, bool post_gel) {
    if (t1 <= t0) return;
    const double h_stab = opts_.stability_fraction / static_cast<double>(sys_.truncation());
    double h = std::min(t1 - t0, h_stab);
    double t = t0;
    OdeState full, half, fine;
    while (t < t1 - 1e-15 * std::max(1.0, t1)) {
      double hh = std::min(h, t1 - t);
      int halvings = 0;
      const double p_start = sys_.rhs(state.v, k_start_, post_gel);
      for (;;) {
        step(state, hh, post_gel, full, &k_start_, p_start);
        step(state, 0.5 * hh, post_gel, half, &k_start_, p_start);
        step(half, 0.5 * hh, post_gel, fine);
        double ratio = 0.0;
        for (std::size_t i = 1; i < state.v.size(); ++i) {
          const double err = std::fabs(full.v[i] - fine.v[i]) / 15.0;
          const double scale =
              opts_.abs_tol + opts_.rel_tol * std::max(std::fabs(fine.v[i]), std::fabs(state.v[i]));
          ratio = std::max(ratio, err / scale);
        }
        if (ratio <= 1.0) {
          for (std::size_t i = 1; i < fine.v.size(); ++i) {
            double vi = fine.v[i] + (fine.v[i] - full.v[i]) / 15.0;
            if (vi < 0.0) {
              if (vi <= opts_.clamp_floor)
                fail(Errc::negative_mass, "solver: v_" + std::to_string(i) + " = " +
                                              std::to_string(vi) + " at t = " + std::to_string(t));
              vi = 0.0;
            }
            fine.v[i] = vi;
          }
          state.v.swap(fine.v);
          state.phi_integral = fine.phi_integral;
          t += hh;
          if (ratio < 0.25) h = std::min(h * 1.5, h_stab);
          break;
        }
        hh *= 0.5;
        h = hh;
        if (++halvings > opts_.max_halvings)
          fail(Errc::step_rejected,
               "solver: step-doubling error estimate exceeds tolerance at t = " + std::to_string(t));
      }
    }
  }

 private:
  static void axpy(const std::vector<double>& x, double a, const std::vector<double>& y,
                   std::vector<double>& out) {
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
  }

  CoagulationSystem& sys_;
  SolverOptions opts_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_, k_start_;
};

struct Grid {
  std::vector<double> times;
  std::size_t gel_index = 0;  // == times.size() when the grid ends pre-gel
};

Grid build_grid(double t_gel, const GridSpec& spec) {
  if (!(spec.horizon > 0.0)) fail(Errc::usage_error, "grid: horizon must be positive");
  for (double s : {spec.pre_step, spec.post_step, spec.late_step}) {
    if (!(s > 0.0)) fail(Errc::grid_too_coarse, "grid: steps must be positive");
    if (s > 0.05) fail(Errc::grid_too_coarse, "grid: step above 0.05 cannot resolve the kinetics");
  }
  Grid g;
  const double pre_end = std::min(spec.horizon, t_gel);
  const auto n1 = std::max<std::int64_t>(
      2, static_cast<std::int64_t>(std::ceil(pre_end / spec.pre_step - 1e-9)));
  for (std::int64_t i = 0; i < n1; ++i)
    g.times.push_back(pre_end * static_cast<double>(i) / static_cast<double>(n1));
  g.times.push_back(pre_end);
  if (spec.horizon <= t_gel) {
    g.gel_index = g.times.size();
    return g;
  }
  g.gel_index = g.times.size() - 1;  // pre_end == t_gel sits on the grid
  const double post_end = std::min(spec.horizon, t_gel + spec.post_window);
  const auto n2 = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil((post_end - t_gel) / spec.post_step - 1e-9)));
  for (std::int64_t i = 1; i < n2; ++i)
    g.times.push_back(t_gel + (post_end - t_gel) * static_cast<double>(i) / static_cast<double>(n2));
  g.times.push_back(post_end);
  if (spec.horizon > post_end) {
    const auto n3 = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil((spec.horizon - post_end) / spec.late_step - 1e-9)));
    for (std::int64_t i = 1; i < n3; ++i)
      g.times.push_back(post_end +
                        (spec.horizon - post_end) * static_cast<double>(i) / static_cast<double>(n3));
    g.times.push_back(spec.horizon);
  }
  return g;
}

Environment solve_impl(const MassDistribution& init, std::int64_t K, const GridSpec& grid_spec,
                       const SolverOptions& opts, bool control) {
  if (K < 8) fail(Errc::usage_error, "solver: truncation too small");
  init.validate(1e-9);
  if (init.tail() && init.tail()->amplitude > 0.0)
    fail(Errc::usage_error, "solver: initial condition must have finite support");
  const auto support = static_cast<std::int64_t>(init.masses().size());
  if (support > K) fail(Errc::usage_error, "solver: initial support exceeds truncation");
  if (control) {
    if (!init.conservative(1e-9))
      fail(Errc::non_conservative, "solver: initial condition must be conservative");
    if (support * 4 > K)
      fail(Errc::usage_error, "solver: initial support must be well below the truncation");
  }

  const double t_gel = gelation_time(init);
  Grid grid = build_grid(t_gel, grid_spec);
  const std::size_t n = grid.times.size();

  OdeState state;
  state.v.assign(static_cast<std::size_t>(K) + 1, 0.0);
  for (std::int64_t k = 1; k <= support; ++k)
    state.v[static_cast<std::size_t>(k)] = init.mass(k);

  CoagulationSystem sys(K, control, opts);
  RK4Stepper stepper(sys, opts);

  std::vector<double> flat(n * static_cast<std::size_t>(K));
  std::vector<double> phi(n, 0.0), phi_int(n, 0.0), amp(n, 0.0);

  const double root_k = std::sqrt(static_cast<double>(K));
  auto emit = [&](std::size_t i) {
    const bool post = control && i >= grid.gel_index;
    double total = 0.0;
    for (std::int64_t k = 1; k <= K; ++k) {
      const double vk = state.v[static_cast<std::size_t>(k)];
      flat[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k - 1)] = vk;
      total += vk;
    }
    phi_int[i] = state.phi_integral;
    if (post) {
      const FluxEstimate est = sys.flux_estimate(state.v);
      if (est.consistency >
          std::max(opts.phi_consistency_abs, opts.phi_consistency_rel * std::fabs(est.phi)))
        fail(Errc::non_converged_phi,
             "solver: flux estimator fails Richardson consistency at t = " +
                 std::to_string(grid.times[i]));
      phi[i] = est.phi;
      amp[i] = std::sqrt(2.0 * est.phi / M_PI);
    } else {
      phi[i] = 0.0;
      // Mass already past the truncation, spread with the critical profile.
      // At gelation this matches sqrt(2 phi / pi) continuously.
      const bool gelled_off = !control && grid.times[i] > t_gel + 1e-12;
      amp[i] = gelled_off ? 0.0 : std::max(0.0, 1.0 - total) * root_k;
    }
  };

  emit(0);
  for (std::size_t i = 1; i < n; ++i) {
    // The interval ending at the gel point still integrates with phi == 0;
    // the control switches on exactly at t_gel.
    const bool post = control && i > grid.gel_index;
    stepper.integrate(state, grid.times[i - 1], grid.times[i], post);
    emit(i);
  }

  const bool conservative = control || grid_spec.horizon <= t_gel;
  return Environment(std::move(grid.times), grid.gel_index, t_gel, K, std::move(flat),
                     std::move(phi), std::move(phi_int), std::move(amp), conservative);
}

}  // namespace

Environment solve_smoluchowski(const MassDistribution& init, std::int64_t K, const GridSpec& grid,
                               const SolverOptions& opts) {
  return solve_impl(init, K, grid, opts, false);
}

Environment solve_cffe(const MassDistribution& init, std::int64_t K, const GridSpec& grid,
                       const SolverOptions& opts) {
  return solve_impl(init, K, grid, opts, true);
}

double mean_cluster_size(const Environment& env, double t) { return env.first_moment_at(t); }

double burn_rate_residual(const Environment& env, double t) {
  const double im_t = env.inverse_moment_at(t);
  const double im_0 = env.inverse_moment(0);
  return std::fabs(im_t - im_0 - env.phi_integral_at(t) + 0.5 * t);
}

}  // namespace ffm
