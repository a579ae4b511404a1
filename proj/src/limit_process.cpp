#include "ffm/limit_process.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ffm/errors.hpp"
#include "ffm/parallel.hpp"

namespace ffm {

SizeState JumpPath::state_at(double t) const {
  SizeState s = initial_size;
  for (const auto& e : events) {
    if (e.time > t) break;
    s = e.new_size;
  }
  return s;
}

std::size_t JumpPath::explosion_count(double t_max) const {
  std::size_t n = 0;
  for (const auto& e : events)
    if (e.kind == EventKind::explosion && e.time <= t_max) ++n;
  return n;
}

void JumpPath::validate() const {
  double t = start_time;
  SizeState s = initial_size;
  for (const auto& e : events) {
    if (!(e.time > t)) fail(Errc::schema_mismatch, "JumpPath: times not strictly increasing");
    switch (e.kind) {
      case EventKind::growth:
        if (e.new_size <= s) fail(Errc::schema_mismatch, "JumpPath: growth must increase the size");
        break;
      case EventKind::burn:
      case EventKind::explosion:
        if (e.new_size != 1) fail(Errc::schema_mismatch, "JumpPath: burn/explosion must reset to 1");
        break;
    }
    t = e.time;
    s = e.new_size;
  }
}

LimitSampler::LimitSampler(const Environment& env, const CurveFamily* curves,
                           std::int64_t threshold)
    : env_(&env), curves_(curves), threshold_(threshold) {
  if (threshold_ < 1000) fail(Errc::usage_error, "LimitSampler: threshold must be >= 1000");
  const bool gels_in_range = env.gel_index() < env.size();
  if (gels_in_range && curves_ == nullptr)
    fail(Errc::curve_family_too_sparse,
         "LimitSampler: a curve family is required once the environment gels");
}

JumpPath LimitSampler::sample_path(double horizon, RandomStream& rng) const {
  const SizeState initial = env_->sample_increment(0.0, rng.next_double());
  return sample_path_from(0.0, initial, horizon, rng);
}

JumpPath LimitSampler::sample_path_from(double start, SizeState state, double horizon,
                                        RandomStream& rng) const {
  if (horizon > env_->horizon() + 1e-9)
    fail(Errc::env_too_short, "sample_path: horizon beyond the solved environment");
  JumpPath path;
  path.start_time = start;
  path.initial_size = state;
  double t = start;
  SizeState k = state;
  for (;;) {
    if (k > threshold_) {
      // Above the threshold the process can only keep growing until it
      // explodes; draw the explosion time from its exact survival law.
      if (curves_ == nullptr) break;  // environment never gels in range
      if (curves_->max_horizon() < horizon - 1e-9)
        fail(Errc::curve_family_too_sparse, "sample_path: curve family ends before the horizon");
      const double u = rng.next_double();
      // target = u^{1/k}, evaluated stably for huge k
      const double target = std::exp(std::log(std::max(u, 1e-300)) / static_cast<double>(k));
      double tau = curves_->invert_survival(t, target);
      if (!(tau <= horizon)) break;  // survives past the window (or +inf)
      if (!(tau > t)) tau = std::nextafter(t, horizon + 1.0);  // degenerate quantile
      t = tau;
      k = 1;
      path.events.push_back({t, 1, EventKind::explosion});
      continue;
    }
    const double hold = rng.exponential(static_cast<double>(k));
    const double t_next = t + hold;
    if (t_next > horizon) break;
    t = t_next;
    const SizeState inc = env_->sample_increment(t, rng.next_double());
    k += inc;
    path.events.push_back({t, k, EventKind::growth});
  }
  return path;
}

EmpiricalLaw empirical_law(const LimitSampler& sampler, double t, std::size_t n_paths,
                           std::uint64_t seed, std::int64_t bucket_cap) {
  if (n_paths < 1000) fail(Errc::usage_error, "empirical_law: need at least 1e3 paths");
  std::vector<std::int32_t> finals(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    RandomStream rng(seed, i);
    const JumpPath path = sampler.sample_path(t, rng);
    const SizeState s = path.state_at(t);
    finals[i] = s > bucket_cap ? -1 : static_cast<std::int32_t>(s);
  });
  EmpiricalLaw law;
  law.t = t;
  law.n_paths = n_paths;
  law.masses.assign(static_cast<std::size_t>(bucket_cap), 0.0);
  for (const auto f : finals) {
    if (f < 0)
      law.overflow += 1.0;
    else
      law.masses[static_cast<std::size_t>(f - 1)] += 1.0;
  }
  const auto n = static_cast<double>(n_paths);
  law.overflow /= n;
  law.std_error.resize(law.masses.size());
  for (std::size_t i = 0; i < law.masses.size(); ++i) {
    const double p = law.masses[i] / n;
    law.masses[i] = p;
    law.std_error[i] = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
  }
  return law;
}

ExplosionCountStats explosion_count_stats(const LimitSampler& sampler, double horizon,
                                          std::size_t n_paths, std::uint64_t seed) {
  if (n_paths < 1000) fail(Errc::usage_error, "explosion_count_stats: need at least 1e3 paths");
  std::vector<double> counts(n_paths);
  std::vector<std::uint8_t> pre_gel(n_paths, 0);
  const double t_gel = sampler.environment().t_gel();
  parallel_for(n_paths, [&](std::size_t i) {
    RandomStream rng(seed, i);
    const JumpPath path = sampler.sample_path(horizon, rng);
    counts[i] = static_cast<double>(path.explosion_count(horizon));
    for (const auto& e : path.events)
      if (e.kind == EventKind::explosion && e.time <= t_gel) pre_gel[i] = 1;
  });
  ExplosionCountStats out;
  out.count = mean_ci(counts);
  out.predicted = sampler.environment().phi_integral_at(horizon);
  out.bound = 1.0 + horizon;
  for (auto b : pre_gel) out.pre_gel_explosions += b;
  return out;
}

ExplosionProbCheck explosion_prob_check(const LimitSampler& sampler, double s, double y,
                                        std::size_t n_paths, std::uint64_t seed) {
  const auto& env = sampler.environment();
  if (!(y > env.t_gel()))
    fail(Errc::horizon_before_gel, "explosion_prob_check: no explosion is possible before t_gel");
  if (!(s < y)) fail(Errc::usage_error, "explosion_prob_check: need s < y");
  const CharacteristicCurve exact = solve_characteristic(env, y);
  std::vector<std::uint8_t> survived(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    RandomStream rng(seed, i);
    const JumpPath path = sampler.sample_path_from(s, 1, y, rng);
    survived[i] = path.explosion_count(y) == 0 ? 1 : 0;
  });
  ExplosionProbCheck out;
  out.n_paths = n_paths;
  double hits = 0.0;
  for (auto b : survived) hits += b;
  out.empirical = hits / static_cast<double>(n_paths);
  out.predicted = exact.psi_at(s);
  const double se = std::sqrt(std::max(out.predicted * (1.0 - out.predicted), 1e-12) /
                              static_cast<double>(n_paths));
  out.z = (out.empirical - out.predicted) / se;
  return out;
}

}  // namespace ffm
