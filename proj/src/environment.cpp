#include "ffm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ffm/errors.hpp"

namespace ffm {

Environment::Environment(std::vector<double> times, std::size_t gel_index, double t_gel,
                         std::int64_t trunc, std::vector<double> flat_masses,
                         std::vector<double> phi, std::vector<double> phi_integral,
                         std::vector<double> tail_amplitude, bool conservative)
    : times_(std::move(times)),
      gel_index_(gel_index),
      t_gel_(t_gel),
      trunc_(trunc),
      masses_(std::move(flat_masses)),
      phi_(std::move(phi)),
      phi_integral_(std::move(phi_integral)),
      tail_amplitude_(std::move(tail_amplitude)),
      conservative_(conservative) {
  const std::size_t n = times_.size();
  if (n < 2) fail(Errc::grid_too_coarse, "Environment: need at least two grid points");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(times_[i + 1] > times_[i])) fail(Errc::grid_too_coarse, "Environment: grid not increasing");
  if (masses_.size() != n * static_cast<std::size_t>(trunc_) || phi_.size() != n ||
      phi_integral_.size() != n || tail_amplitude_.size() != n)
    fail(Errc::schema_mismatch, "Environment: inconsistent array sizes");
  for (std::size_t i = 0; i < gel_index_ && i < n; ++i)
    if (phi_[i] != 0.0) fail(Errc::schema_mismatch, "Environment: nonzero phi before gelation");
}

std::span<const double> Environment::row(std::size_t i) const {
  return {masses_.data() + i * static_cast<std::size_t>(trunc_),
          static_cast<std::size_t>(trunc_)};
}

void Environment::check_range(double t) const {
  const double eps = 1e-12 * std::max(1.0, std::fabs(times_.back()));
  if (t < times_.front() - eps || t > times_.back() + eps)
    fail(Errc::env_too_short, "Environment: t=" + std::to_string(t) + " outside solved range");
}

std::size_t Environment::locate(double t) const {
  check_range(t);
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = (it == times_.begin()) ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  if (i + 1 >= times_.size()) i = times_.size() - 2;
  return i;
}

double Environment::lerp_weight(std::size_t i, double t) const {
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return std::clamp(w, 0.0, 1.0);
}

double Environment::phi_at(double t) const {
  check_range(t);
  if (t < t_gel_ || gel_index_ >= times_.size()) return 0.0;
  std::size_t i = locate(t);
  if (i < gel_index_) i = gel_index_;  // never blend across the jump
  if (i + 1 >= times_.size()) return phi_.back();
  const double w = lerp_weight(i, t);
  return (1.0 - w) * phi_[i] + w * phi_[i + 1];
}

double Environment::phi_integral_at(double t) const {
  check_range(t);
  if (t <= t_gel_) return 0.0;
  const std::size_t i = locate(t);
  const double w = lerp_weight(i, t);
  return (1.0 - w) * phi_integral_[i] + w * phi_integral_[i + 1];
}

double Environment::tail_amplitude_at(double t) const {
  const std::size_t i = locate(t);
  const double w = lerp_weight(i, t);
  return (1.0 - w) * tail_amplitude_[i] + w * tail_amplitude_[i + 1];
}

MassDistribution Environment::distribution_at(double t) const {
  const std::size_t i = locate(t);
  const double w = lerp_weight(i, t);
  const auto a = row(i), b = row(i + 1);
  std::vector<double> m(static_cast<std::size_t>(trunc_));
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = (1.0 - w) * a[k] + w * b[k];
  std::optional<TailModel> tail;
  const double amp = tail_amplitude_at(t);
  if (amp > 0.0) tail = TailModel{trunc_, amp};
  return MassDistribution(std::move(m), tail, t);
}

SizeState Environment::sample_increment(double t, double u) const {
  const std::size_t i = locate(t);
  const double w = lerp_weight(i, t);
  const auto a = row(i), b = row(i + 1);
  double cum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cum += (1.0 - w) * a[k] + w * b[k];
    if (u < cum) return static_cast<SizeState>(k + 1);
  }
  // Fall through to the tail with the mass-exact amplitude, so the draw is
  // total regardless of the truncation defect.
  const double leftover = 1.0 - cum;
  if (leftover <= 1e-14) return trunc_;  // roundoff corner, essentially u ~ 1
  const TailModel tail{trunc_, leftover * std::sqrt(static_cast<double>(trunc_))};
  return sample_tail(tail, u - cum);
}

double tail_pgf(double amplitude, double cutoff, double z) {
  if (amplitude <= 0.0 || z <= 0.0) return 0.0;
  if (z > 1.0) fail(Errc::usage_error, "tail_pgf: z must be in [0,1]");
  const double s = -std::log(z);
  const double root_k = std::sqrt(cutoff);
  if (s == 0.0) return amplitude / root_k;
  const double y = s * cutoff;
  if (y > 700.0) return 0.0;
  if (y < 25.0)
    return amplitude * (std::exp(-y) / root_k - std::sqrt(M_PI * s) * std::erfc(std::sqrt(y)));
  // Large-y form; the two terms above cancel to leading order.
  const double inv = 1.0 / (2.0 * y);
  const double series = inv * (1.0 - 3.0 * inv + 15.0 * inv * inv - 105.0 * inv * inv * inv);
  return amplitude * std::exp(-y) / root_k * series;
}

namespace {

double horner_pgf(std::span<const double> row, double z) {
  double acc = 0.0;
  for (std::size_t k = row.size(); k-- > 0;) acc = acc * z + row[k];
  return acc * z;
}

}  // namespace

double Environment::pgf(double t, double z) const {
  check_range(t);
  if (z < 0.0 || z > 1.0 + 1e-12) fail(Errc::usage_error, "pgf: z outside [0,1]");
  z = std::min(z, 1.0);
  if (z == 0.0) return 0.0;

  // Cubic (4-point Lagrange) in t, with the stencil confined to one side of
  // the gelation split; the masses are smooth there while they have a kink
  // at t_gel itself.
  const std::size_t n = times_.size();
  std::size_t lo_limit = 0, hi_limit = n - 1;
  if (gel_index_ < n) {
    if (t < t_gel_)
      hi_limit = gel_index_;  // masses at the gel point are shared by both sides
    else
      lo_limit = gel_index_;
  }
  std::size_t i = locate(t);
  i = std::clamp(i, lo_limit, hi_limit > 0 ? hi_limit - 1 : 0);

  std::size_t first = (i > lo_limit) ? i - 1 : lo_limit;
  std::size_t last = std::min(first + 3, hi_limit);
  first = (last >= 3 && last - 3 > lo_limit) ? last - 3 : lo_limit;
  const std::size_t count = last - first + 1;

  double value = 0.0;
  double amp = 0.0;
  for (std::size_t j = first; j <= last; ++j) {
    double wj = 1.0;
    for (std::size_t m = first; m <= last; ++m) {
      if (m == j) continue;
      wj *= (t - times_[m]) / (times_[j] - times_[m]);
    }
    if (count == 1) wj = 1.0;
    value += wj * horner_pgf(row(j), z);
    amp += wj * tail_amplitude_[j];
  }
  return value + tail_pgf(std::max(amp, 0.0), static_cast<double>(trunc_), z);
}

std::vector<double> Environment::suffix_masses(std::size_t i) const {
  const auto r = row(i);
  std::vector<double> s(r.size());
  double acc = tail_amplitude_[i] / std::sqrt(static_cast<double>(trunc_));
  for (std::size_t k = r.size(); k-- > 0;) {
    acc += r[k];
    s[k] = acc;
  }
  return s;
}

double Environment::inverse_moment(std::size_t i) const {
  const auto r = row(i);
  double s = 0.0;
  for (std::size_t k = r.size(); k-- > 0;) s += r[k] / static_cast<double>(k + 1);
  const double c = tail_amplitude_[i];
  s += c / (3.0 * std::pow(static_cast<double>(trunc_), 1.5));
  return s;
}

double Environment::inverse_moment_at(double t) const {
  const std::size_t i = locate(t);
  const double w = lerp_weight(i, t);
  return (1.0 - w) * inverse_moment(i) + w * inverse_moment(i + 1);
}

double Environment::conservation_defect(std::size_t i) const {
  const auto r = row(i);
  double s = 0.0;
  for (double v : r) s += v;
  s += tail_amplitude_[i] / std::sqrt(static_cast<double>(trunc_));
  return s - 1.0;
}

double Environment::first_moment_at(double t) const {
  check_range(t);
  if (t >= t_gel_) return std::numeric_limits<double>::infinity();
  const std::size_t i = locate(t);
  const double w = lerp_weight(i, t);
  const auto a = row(i), b = row(i + 1);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += static_cast<double>(k + 1) * ((1.0 - w) * a[k] + w * b[k]);
  // Mass beyond the truncation attributed at the cutoff: a lower bound that
  // is negligible wherever the pre-gel truncation is adequate.
  s += tail_amplitude_at(t) * std::sqrt(static_cast<double>(trunc_));
  return s;
}

}  // namespace ffm
