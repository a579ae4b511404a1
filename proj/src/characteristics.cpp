#include "ffm/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "ffm/errors.hpp"
#include "ffm/parallel.hpp"

namespace ffm {

double blend_width(const Environment& env) {
  return 10.0 / static_cast<double>(env.truncation());
}

double gap_ratio(const Environment& env, double t, double w) {
  if (w > 1.0) return 1.0;
  const double limit = std::sqrt(2.0 * env.phi_at(t));
  if (w <= 0.0) return limit;
  const double wmin = blend_width(env);
  if (w >= wmin) return (1.0 - env.pgf(t, 1.0 - w * w)) / w;
  // Truncation noise dominates (1 - X)/w below the tail resolution; anchor
  // at wmin and blend linearly into the w -> 0 limit.
  const double anchor = (1.0 - env.pgf(t, 1.0 - wmin * wmin)) / wmin;
  const double lambda = w / wmin;
  return lambda * anchor + (1.0 - lambda) * limit;
}

namespace {

// Adaptive scalar RK4 with step-doubling control; h may be negative.
// `first_half` halves the very first sub-step (start-up at the horizon).
double integrate_scalar(const std::function<double(double, double)>& f, double x, double t0,
                        double t1, const CurveOptions& opts, bool first_half) {
  if (t0 == t1) return x;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  double span = std::fabs(t1 - t0);
  double h = first_half ? 0.5 * span : span;
  double t = t0;

  auto rk4 = [&f](double xx, double tt, double hh) {
    const double k1 = f(tt, xx);
    const double k2 = f(tt + 0.5 * hh, xx + 0.5 * hh * k1);
    const double k3 = f(tt + 0.5 * hh, xx + 0.5 * hh * k2);
    const double k4 = f(tt + hh, xx + hh * k3);
    return xx + hh / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
  };

  while (std::fabs(t1 - t) > 1e-15 * std::max(1.0, std::fabs(t1))) {
    double hh = std::min(h, std::fabs(t1 - t));
    int halvings = 0;
    for (;;) {
      const double signed_h = dir * hh;
      const double full = rk4(x, t, signed_h);
      const double mid = rk4(x, t, 0.5 * signed_h);
      const double fine = rk4(mid, t + 0.5 * signed_h, 0.5 * signed_h);
      const double err = std::fabs(full - fine) / 15.0;
      const double scale = opts.abs_tol + opts.rel_tol * std::max(std::fabs(x), std::fabs(fine));
      if (err <= scale) {
        x = fine + (fine - full) / 15.0;
        t += signed_h;
        if (err < 0.0625 * scale) h = std::min(h * 2.0, span);
        break;
      }
      hh *= 0.5;
      h = hh;
      if (++halvings > opts.max_halvings)
        fail(Errc::step_rejected, "characteristic solve: error control failed at t = " +
                                      std::to_string(t));
    }
  }
  return x;
}

}  // namespace

double CharacteristicCurve::psi_at(double t) const {
  if (t >= y_) return 1.0;
  if (t <= grid_.front()) return psi_.front();
  return std::min(1.0, interp_(t));
}

double CharacteristicCurve::survival(double s, std::int64_t k) const {
  if (k < 1) fail(Errc::usage_error, "survival: state must be >= 1");
  return std::pow(psi_at(s), static_cast<double>(k));
}

double CharacteristicCurve::ode_residual(const Environment& env) const {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < grid_.size(); ++i) {
    // The right-hand side is discontinuous in t at the gel time; differences
    // across it do not estimate either one-sided derivative.
    if (grid_[i - 1] < t_gel_ && grid_[i + 1] > t_gel_) continue;
    // three-point derivative, second order also on non-uniform spacing
    const double hm = grid_[i] - grid_[i - 1];
    const double hp = grid_[i + 1] - grid_[i];
    const double dpsi = (hm * hm * psi_[i + 1] - hp * hp * psi_[i - 1] +
                         (hp * hp - hm * hm) * psi_[i]) /
                        (hm * hp * (hm + hp));
    const double rhs = psi_[i] * (1.0 - env.pgf(grid_[i], psi_[i]));
    const double scale = std::max(1.0, std::sqrt(2.0 * env.phi_at(grid_[i])));
    worst = std::max(worst, std::fabs(dpsi - rhs) / scale);
  }
  return worst;
}

CharacteristicCurve solve_characteristic(const Environment& env, double y,
                                         const CurveOptions& opts) {
  const double t_gel = env.t_gel();
  if (!(y > t_gel)) fail(Errc::horizon_before_gel, "solve_characteristic: horizon y <= t_gel");
  if (y > env.horizon() + 1e-12)
    fail(Errc::env_too_short, "solve_characteristic: environment ends before y");

  CharacteristicCurve curve;
  curve.y_ = y;
  curve.t_gel_ = t_gel;

  const auto& times = env.times();
  for (double t : times) {
    if (t < y - 1e-12) curve.grid_.push_back(t);
  }
  curve.grid_.push_back(y);
  const std::size_t n = curve.grid_.size();
  curve.psi_.assign(n, 1.0);

  std::size_t gel_offset = 0;
  while (gel_offset < n && curve.grid_[gel_offset] < t_gel - 1e-15) ++gel_offset;
  curve.gel_offset_ = gel_offset;
  curve.upsilon_.assign(n - gel_offset, 0.0);

  // Post-gel sweep in the de-singularized variable, backwards from y.
  auto dupsilon = [&env](double t, double u) {
    return 0.5 * (u * u - 1.0) * gap_ratio(env, t, u);
  };
  double u = 0.0;
  curve.upsilon_.back() = 0.0;
  for (std::size_t i = n - 1; i > gel_offset; --i) {
    u = integrate_scalar(dupsilon, u, curve.grid_[i], curve.grid_[i - 1], opts, i == n - 1);
    u = std::clamp(u, 0.0, 1.0 - 1e-15);
    curve.upsilon_[i - 1 - gel_offset] = u;
    curve.psi_[i - 1] = 1.0 - u * u;
  }

  // Pre-gel sweep directly in psi, backwards from the gel value.
  auto dpsi = [&env](double t, double p) {
    if (p <= 0.0) return 0.0;
    return p * (1.0 - env.pgf(t, std::min(p, 1.0)));
  };
  double p = curve.psi_[gel_offset];
  for (std::size_t i = gel_offset; i > 0; --i) {
    p = integrate_scalar(dpsi, p, curve.grid_[i], curve.grid_[i - 1], opts, false);
    p = std::clamp(p, 0.0, 1.0);
    curve.psi_[i - 1] = p;
  }

  curve.interp_ = MonotoneCubic(curve.grid_, curve.psi_);
  return curve;
}

double explosion_survival(const CharacteristicCurve& curve, double s, std::int64_t k) {
  return curve.survival(s, k);
}

CharacteristicCurve CharacteristicCurve::from_parts(double y, double t_gel,
                                                    std::vector<double> grid,
                                                    std::vector<double> psi,
                                                    std::vector<double> upsilon,
                                                    std::size_t gel_offset) {
  if (grid.size() != psi.size() || grid.size() < 2)
    fail(Errc::schema_mismatch, "CharacteristicCurve: inconsistent arrays");
  CharacteristicCurve curve;
  curve.y_ = y;
  curve.t_gel_ = t_gel;
  curve.grid_ = std::move(grid);
  curve.psi_ = std::move(psi);
  curve.upsilon_ = std::move(upsilon);
  curve.gel_offset_ = gel_offset;
  curve.interp_ = MonotoneCubic(curve.grid_, curve.psi_);
  return curve;
}

CurveFamily::CurveFamily(const Environment& env, double y_max, std::size_t count,
                         double y_min_offset) {
  t_gel_ = env.t_gel();
  if (count < 2) fail(Errc::usage_error, "CurveFamily: need at least two horizons");
  if (!(y_max > t_gel_ + y_min_offset))
    fail(Errc::horizon_before_gel, "CurveFamily: y_max too close to t_gel");
  const double span = y_max - t_gel_;
  const double ratio = std::pow(span / y_min_offset, 1.0 / static_cast<double>(count - 1));
  std::vector<double> ys(count);
  for (std::size_t i = 0; i < count; ++i)
    ys[i] = t_gel_ + y_min_offset * std::pow(ratio, static_cast<double>(i));
  ys.back() = y_max;
  curves_.resize(count);
  parallel_for(count, [&](std::size_t i) { curves_[i] = solve_characteristic(env, ys[i]); });
}

// Monotone interpolant of y -> psi_y(s), anchored at psi = 1 on the left.
MonotoneCubic CurveFamily::survival_curve(double s) const {
  if (curves_.empty()) fail(Errc::curve_family_too_sparse, "CurveFamily: empty");
  const double y0 = std::max(s, t_gel_);
  std::vector<double> xs{y0}, vs{1.0};
  for (const auto& c : curves_) {
    if (c.horizon() <= y0 + 1e-15) continue;
    xs.push_back(c.horizon());
    vs.push_back(c.psi_at(s));
  }
  if (xs.size() < 2)
    fail(Errc::curve_family_too_sparse, "CurveFamily: no horizons beyond s");
  return MonotoneCubic(std::move(xs), std::move(vs));
}

CurveFamily::CurveFamily(const Environment& env, std::vector<CharacteristicCurve> curves)
    : curves_(std::move(curves)), t_gel_(env.t_gel()) {
  if (curves_.empty()) fail(Errc::curve_family_too_sparse, "CurveFamily: no curves");
  std::sort(curves_.begin(), curves_.end(),
            [](const CharacteristicCurve& a, const CharacteristicCurve& b) {
              return a.horizon() < b.horizon();
            });
}

double CurveFamily::survival_probability(double s, double y) const {
  if (y <= std::max(s, t_gel_)) return 1.0;
  if (!curves_.empty() && y >= curves_.back().horizon()) return curves_.back().psi_at(s);
  return survival_curve(s)(y);
}

double CurveFamily::invert_survival(double s, double target) const {
  if (curves_.empty()) fail(Errc::curve_family_too_sparse, "CurveFamily: empty");
  if (target >= 1.0) return std::max(s, t_gel_);
  const double tail_value = curves_.back().psi_at(s);
  if (target <= tail_value) return std::numeric_limits<double>::infinity();
  const MonotoneCubic curve = survival_curve(s);
  double lo = std::max(s, t_gel_);
  double hi = curves_.back().horizon();
  // survival is decreasing in y: bisect on the interpolated map.
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (curve(mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ffm
