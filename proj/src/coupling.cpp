#include "ffm/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ffm/cluster_set.hpp"
#include "ffm/errors.hpp"
#include "ffm/finite_model.hpp"
#include "ffm/parallel.hpp"
#include "ffm/rng.hpp"

namespace ffm {

Region classify_region(bool failed, SizeState cn, SizeState ctilde, std::int64_t K) {
  if (failed) return Region::E5;
  if (cn == ctilde && cn <= K) return Region::E1;
  if (cn > K && ctilde > K) return Region::E2;
  if (cn > K && ctilde == 1) return Region::E3;
  if (cn == 1 && ctilde > K) return Region::E4;
  return Region::E6;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::E1: return "E1";
    case Region::E2: return "E2";
    case Region::E3: return "E3";
    case Region::E4: return "E4";
    case Region::E5: return "E5";
    case Region::E6: return "E6";
  }
  return "?";
}

const char* failure_cause_name(FailureCause c) {
  switch (c) {
    case FailureCause::none: return "none";
    case FailureCause::init: return "init";
    case FailureCause::paintbox: return "paintbox";
    case FailureCause::self_edge: return "self-edge";
    case FailureCause::small_fire: return "small-fire";
    case FailureCause::e3_jump: return "E3-jump";
    case FailureCause::e4_jump: return "E4-jump";
  }
  return "?";
}

namespace {

// Joint replica state machine. Single-threaded by construction; replicas
// parallelize over stream ids.
class CoupledPair {
 public:
  CoupledPair(const CouplingConfig& cfg, const Environment& env, const CurveFamily& curves)
      : cfg_(cfg),
        env_(&env),
        curves_(&curves),
        clusters_(cfg.n, /*ordered_index=*/true),
        rng_(cfg.seed, cfg.stream) {
    if (cfg.n < 10) fail(Errc::usage_error, "coupling: need n >= 10");
    if (cfg.K < 1) fail(Errc::usage_error, "coupling: need K >= 1");
    if (cfg.horizon > env.horizon() + 1e-9)
      fail(Errc::env_too_short, "coupling: environment ends before the horizon");
    if (curves.max_horizon() < cfg.horizon - 1e-9)
      fail(Errc::curve_family_too_sparse, "coupling: curve family ends before the horizon");
    clusters_.init_from_counts(partition_counts(cfg.init, cfg.n));
  }

  CouplingResult run() {
    initialize_shared();
    double t = 0.0;
    Region region = classify_checked(t);
    record_distance();
    const double horizon = cfg_.horizon;
    while (t < horizon) {
      const double model_rate = total_model_rate();
      const double dt_model = rng_.exponential(model_rate);
      double dt_limit = std::numeric_limits<double>::infinity();
      if (region != Region::E1) {
        if (exploding_)
          dt_limit = explosion_time_ - t;
        else
          dt_limit = rng_.exponential(static_cast<double>(ctilde_));
      }
      const double dt = std::min(dt_model, dt_limit);
      if (t + dt > horizon) break;
      t += dt;
      result_.region_time[static_cast<std::size_t>(region)] += dt;
      ++result_.events;
      if (dt_limit <= dt_model)
        limit_event(t, region);
      else
        model_event(t, region);
      region = transition_checked(region, t);
      record_distance();
    }
    const double leftover = horizon - std::min(horizon, [&] {
      double used = 0.0;
      for (double x : result_.region_time) used += x;
      return used;
    }());
    result_.region_time[static_cast<std::size_t>(region)] += leftover;
    result_.cn_at_horizon = cn_;
    result_.ctilde_at_horizon = ctilde_;
    if (!failed_) result_.tau = std::numeric_limits<double>::infinity();
    return result_;
  }

 private:
  void initialize_shared() {
    // One shared uniform drives both initial sizes (and pins the tagged
    // cluster through its slot within the size block).
    const double u = rng_.next_double();
    const auto slot = static_cast<std::int64_t>(u * static_cast<double>(cfg_.n));
    const std::int64_t size = clusters_.slot_size(slot);
    const std::int64_t index = (slot - clusters_.vertex_count_below(size)) / size;
    tagged_root_ = clusters_.root_of_size_at(size, index);
    cn_ = size;
    ctilde_ = env_->sample_increment(0.0, u);
    if (cn_ != ctilde_) declare_failure(0.0, FailureCause::init);
  }

  double total_model_rate() const {
    const double nd = static_cast<double>(cfg_.n);
    return 0.5 * (nd + 1.0) + static_cast<double>(clusters_.within_pair_sum()) / nd +
           nd * cfg_.lambda;
  }

  void declare_failure(double t, FailureCause cause) {
    if (failed_) return;
    failed_ = true;
    result_.tau = t;
    result_.cause = cause;
  }

  void record_distance() {
    result_.sup_distance = std::max(result_.sup_distance, state_distance(cn_, ctilde_));
  }

  Region classify_checked(double t) {
    const Region r = classify_region(failed_, cn_, ctilde_, cfg_.K);
    if (r == Region::E6)
      fail(Errc::region_e6_reached,
           "coupling: reached E6 at t = " + std::to_string(t) + " with (S,Cn,C~) = (" +
               std::to_string(failed_) + "," + std::to_string(cn_) + "," +
               std::to_string(ctilde_) + ")");
    if (!failed_) {
      // distance invariant while the state bit is 0
      const double d = state_distance(cn_, ctilde_);
      const double bound = (r == Region::E1) ? 0.0 : 1.0 / static_cast<double>(cfg_.K);
      if (d > bound + 1e-15)
        fail(Errc::region_e6_reached, "coupling: distance invariant violated in region " +
                                          std::string(region_name(r)));
    }
    return r;
  }

  Region transition_checked(Region before, double t) {
    const Region after = classify_checked(t);
    if (failed_) return after;
    auto ok = [&]() {
      if (before == after) return true;
      switch (before) {
        case Region::E1: return after == Region::E2;
        case Region::E2: return after == Region::E3 || after == Region::E4;
        case Region::E3: return after == Region::E1;
        case Region::E4: return after == Region::E1;
        default: return false;
      }
    }();
    if (!ok)
      fail(Errc::region_e6_reached, "coupling: region cycle violated: " +
                                        std::string(region_name(before)) + " -> " +
                                        std::string(region_name(after)));
    return after;
  }

  // --- limit-side channel -------------------------------------------------

  void limit_event(double t, Region region) {
    if (exploding_) {
      exploding_ = false;
      ctilde_ = 1;
      return;
    }
    const SizeState inc = env_->sample_increment(t, rng_.next_double());
    if (region == Region::E3) declare_failure(t, FailureCause::e3_jump);
    bump_ctilde(t, inc);
  }

  void bump_ctilde(double t, SizeState inc) {
    ctilde_ += inc;
    if (ctilde_ > cfg_.threshold) {
      const double u = rng_.next_double();
      const double target =
          std::exp(std::log(std::max(u, 1e-300)) / static_cast<double>(ctilde_));
      explosion_time_ = curves_->invert_survival(t, target);
      if (!(explosion_time_ > t)) explosion_time_ = std::nextafter(t, t + 1.0);
      exploding_ = true;
    }
  }

  // --- model-side channel ---------------------------------------------------

  void model_event(double t, Region region) {
    const double nd = static_cast<double>(cfg_.n);
    const double base = 0.5 * (nd + 1.0);
    const double within = static_cast<double>(clusters_.within_pair_sum()) / nd;
    const double x = rng_.next_double() * (base + within + nd * cfg_.lambda);
    if (x < base) {
      const auto pairs =
          static_cast<std::uint64_t>(cfg_.n) * (static_cast<std::uint64_t>(cfg_.n) + 1) / 2;
      const auto m = rng_.next_below(pairs);
      const auto [a, b] = decode_pair(m);
      const std::int64_t ra = clusters_.find(a), rb = clusters_.find(b);
      if (ra == tagged_root_ || rb == tagged_root_) {
        tagged_growth(t, region);
      } else if (ra != rb) {
        clusters_.merge(ra, rb);
      }
    } else if (x < base + within) {
      // doubled within-cluster clock: a partition no-op, but it counts as a
      // growth-clock ring of the owning cluster
      const auto wp = clusters_.within_pair_sum();
      const auto tagged_wp =
          static_cast<double>(cn_) * (static_cast<double>(cn_) - 1.0) / 2.0;
      if (wp > 0 && rng_.next_double() * static_cast<double>(wp) < tagged_wp)
        tagged_growth(t, region);
    } else {
      const auto v = static_cast<std::int64_t>(rng_.next_below(static_cast<std::uint64_t>(cfg_.n)));
      const std::int64_t r = clusters_.find(v);
      if (r == tagged_root_)
        tagged_fire(t, region);
      else
        clusters_.burn_root(r);
    }
  }

  // A growth-clock ring with an endpoint in the tagged cluster. Under the
  // doubled clocks these arrive at rate exactly cn; the outside endpoint is
  // re-drawn through the size-ordered paintbox, which is the same law.
  void tagged_growth(double t, Region region) {
    const double u = rng_.next_double();
    const auto slot = static_cast<std::int64_t>(u * static_cast<double>(cfg_.n));
    const std::int64_t size = clusters_.slot_size(slot);
    const std::int64_t index = (slot - clusters_.vertex_count_below(size)) / size;
    const std::int64_t other = clusters_.root_of_size_at(size, index);
    const bool self = other == tagged_root_;

    switch (region) {
      case Region::E1: {
        const SizeState linc = size;
        const SizeState ltilde = env_->sample_increment(t, u);  // shared uniform
        if (self) {
          declare_failure(t, FailureCause::self_edge);
          bump_ctilde(t, ltilde);
          return;
        }
        if (linc != ltilde) declare_failure(t, FailureCause::paintbox);
        merge_tagged(other);
        bump_ctilde(t, ltilde);
        return;
      }
      case Region::E4:
        declare_failure(t, FailureCause::e4_jump);
        if (!self) merge_tagged(other);
        return;
      case Region::E2:
      case Region::E3:
      case Region::E5:
        if (!self) merge_tagged(other);
        return;
      case Region::E6:
        break;
    }
    fail(Errc::region_e6_reached, "coupling: growth dispatched from E6");
  }

  void merge_tagged(std::int64_t other_root) {
    tagged_root_ = clusters_.merge(tagged_root_, other_root);
    cn_ = clusters_.size_of_root(tagged_root_);
  }

  void tagged_fire(double t, Region region) {
    switch (region) {
      case Region::E1:
        declare_failure(t, FailureCause::small_fire);
        burn_tagged();
        return;
      case Region::E2:
      case Region::E3:
      case Region::E5:
        burn_tagged();
        return;
      case Region::E4:
        // the tagged cluster is a singleton; the fire changes nothing
        return;
      case Region::E6:
        break;
    }
    fail(Errc::region_e6_reached, "coupling: fire dispatched from E6");
  }

  void burn_tagged() {
    clusters_.burn_root(tagged_root_);
    tagged_root_ = clusters_.find(tagged_root_);
    cn_ = 1;
  }

  std::pair<std::int64_t, std::int64_t> decode_pair(std::uint64_t m) const {
    auto i = static_cast<std::int64_t>(
        (std::sqrt(8.0 * static_cast<double>(m) + 1.0) - 1.0) / 2.0);
    while ((i + 1) * (i + 2) / 2 <= static_cast<std::int64_t>(m)) ++i;
    while (i * (i + 1) / 2 > static_cast<std::int64_t>(m)) --i;
    return {static_cast<std::int64_t>(m) - i * (i + 1) / 2, i};
  }

  CouplingConfig cfg_;
  const Environment* env_;
  const CurveFamily* curves_;
  ClusterSet clusters_;
  RandomStream rng_;
  CouplingResult result_;
  std::int64_t tagged_root_ = 0;
  SizeState cn_ = 1;
  SizeState ctilde_ = 1;
  bool failed_ = false;
  bool exploding_ = false;
  double explosion_time_ = 0.0;
};

}  // namespace

CouplingResult run_coupling(const CouplingConfig& cfg, const Environment& env,
                            const CurveFamily& curves) {
  return CoupledPair(cfg, env, curves).run();
}

FailureStats failure_stats(const CouplingConfig& cfg, const Environment& env,
                           const CurveFamily& curves, std::size_t replicas, double eps) {
  if (replicas < 30) fail(Errc::usage_error, "failure_stats: need at least 30 replicas");
  std::vector<CouplingResult> results(replicas);
  parallel_for(replicas, [&](std::size_t i) {
    CouplingConfig local = cfg;
    local.stream = cfg.stream + i;
    results[i] = run_coupling(local, env, curves);
  });
  return aggregate_failure_stats(results, eps);
}

FailureStats aggregate_failure_stats(const std::vector<CouplingResult>& results, double eps) {
  const std::size_t replicas = results.size();
  FailureStats out;
  out.replicas = replicas;
  out.eps = eps;
  out.ctilde_at_horizon.reserve(replicas);
  out.sup_distances.reserve(replicas);
  for (const auto& r : results) {
    const bool failed = std::isfinite(r.tau);
    out.p_failed += failed ? 1.0 : 0.0;
    out.p_sup_exceeds += r.sup_distance > eps ? 1.0 : 0.0;
    ++out.cause_counts[static_cast<std::size_t>(r.cause)];
    for (std::size_t j = 0; j < 5; ++j) out.mean_region_time[j] += r.region_time[j];
    out.ctilde_at_horizon.push_back(r.ctilde_at_horizon);
    out.sup_distances.push_back(r.sup_distance);
  }
  const auto n = static_cast<double>(replicas);
  out.p_failed /= n;
  out.p_sup_exceeds /= n;
  out.p_failed_se = std::sqrt(std::max(out.p_failed * (1.0 - out.p_failed), 1e-12) / n);
  out.p_sup_se = std::sqrt(std::max(out.p_sup_exceeds * (1.0 - out.p_sup_exceeds), 1e-12) / n);
  for (auto& x : out.mean_region_time) x /= n;
  return out;
}

PaintboxCheck paintbox_mismatch_check(const MassDistribution& a, const MassDistribution& b,
                                      std::int64_t K, double eta, std::size_t trials,
                                      std::uint64_t seed) {
  if (K < 1 || eta <= 0.0 || trials < 1000)
    fail(Errc::usage_error, "paintbox_mismatch_check: bad arguments");
  if (!a.conservative(1e-9) || !b.conservative(1e-9))
    fail(Errc::hypothesis_unmet, "paintbox_mismatch_check: inputs must be distributions");
  const double per_bucket = eta / (static_cast<double>(K) * static_cast<double>(K));
  double head_a = 0.0, head_b = 0.0;
  for (std::int64_t k = 1; k <= K; ++k) {
    const double xa = a.mass(k), xb = b.mass(k);
    head_a += xa;
    head_b += xb;
    if (std::fabs(xa - xb) >= per_bucket)
      fail(Errc::hypothesis_unmet, "paintbox_mismatch_check: bucket " + std::to_string(k) +
                                       " differs by >= eta/K^2");
  }
  if (a.total_mass() - head_a > eta + 1e-12)
    fail(Errc::hypothesis_unmet, "paintbox_mismatch_check: tail mass above eta");

  std::size_t mismatches = 0;
  RandomStream rng(seed, 0);
  for (std::size_t i = 0; i < trials; ++i) {
    const double u = rng.next_double();
    if (sample_size(a, u) != sample_size(b, u)) ++mismatches;
  }
  PaintboxCheck out;
  out.trials = trials;
  out.bound = 6.0 * eta;
  out.empirical = static_cast<double>(mismatches) / static_cast<double>(trials);
  out.std_error =
      std::sqrt(std::max(out.bound * (1.0 - out.bound), 1e-12) / static_cast<double>(trials));
  out.pass = out.empirical <= out.bound + 3.0 * out.std_error;
  return out;
}

}  // namespace ffm
