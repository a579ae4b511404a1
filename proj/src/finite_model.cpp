#include "ffm/finite_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ffm/errors.hpp"

namespace ffm {

std::vector<std::pair<std::int64_t, std::int64_t>> partition_counts(const MassDistribution& init,
                                                                    std::int64_t n) {
  init.validate(1e-9);
  if (init.tail() && init.tail()->amplitude > 0.0)
    fail(Errc::infeasible_init, "partition_counts: initial condition must have finite support");
  struct Item {
    std::int64_t size;
    std::int64_t count;
    double remainder;
  };
  std::vector<Item> items;
  std::int64_t assigned = 0;
  for (std::int64_t l = 1; l <= init.max_size(); ++l) {
    const double target = static_cast<double>(n) * init.mass(l) / static_cast<double>(l);
    const auto whole = static_cast<std::int64_t>(std::floor(target + 1e-12));
    if (whole > 0 || target > 0.0) items.push_back({l, whole, target - static_cast<double>(whole)});
    assigned += whole * l;
  }
  if (assigned > n)
    fail(Errc::infeasible_init, "partition_counts: rounded masses exceed the vertex budget");
  std::int64_t leftover = n - assigned;
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.remainder > b.remainder;
  });
  for (auto& item : items) {
    if (leftover >= item.size && item.remainder > 0.0) {
      ++item.count;
      leftover -= item.size;
    }
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> counts;
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.size < b.size; });
  for (const auto& item : items) {
    if (item.size == 1) {
      counts.emplace_back(1, item.count + leftover);
      leftover = 0;
    } else if (item.count > 0) {
      counts.emplace_back(item.size, item.count);
    }
  }
  if (leftover > 0) {
    if (!counts.empty() && counts.front().first == 1)
      counts.front().second += leftover;
    else
      counts.insert(counts.begin(), {1, leftover});
    leftover = 0;
  }
  std::int64_t total = 0;
  for (const auto& [size, count] : counts) total += size * count;
  if (total != n) fail(Errc::infeasible_init, "partition_counts: repair failed to cover n");
  return counts;
}

double tagged_growth_rate(std::int64_t k, std::int64_t n, bool dagger) {
  if (k < 1 || k > n) fail(Errc::usage_error, "tagged_growth_rate: need 1 <= k <= n");
  if (dagger) return static_cast<double>(k);
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  return (kd * (nd - kd) + kd + 0.5 * kd * (kd - 1.0)) / nd;
}

ForestFireModel::ForestFireModel(const SimConfig& cfg, bool ordered_index)
    : cfg_(cfg), clusters_(cfg.n, ordered_index), rng_(cfg.seed, cfg.stream) {
  if (cfg.n < 1) fail(Errc::usage_error, "ForestFireModel: need n >= 1");
  if (cfg.lambda < 0.0) fail(Errc::usage_error, "ForestFireModel: negative fire rate");
  clusters_.init_from_counts(partition_counts(cfg.init, cfg.n));
  tagged_ = static_cast<std::int64_t>(rng_.next_below(static_cast<std::uint64_t>(cfg.n)));
  path_.start_time = 0.0;
  path_.initial_size = clusters_.cluster_size(tagged_);
}

double ForestFireModel::total_growth_rate() const {
  const double nd = static_cast<double>(cfg_.n);
  double rate = 0.5 * (nd + 1.0);
  if (cfg_.dagger) rate += static_cast<double>(clusters_.within_pair_sum()) / nd;
  return rate;
}

double ForestFireModel::fire_rate() const {
  return static_cast<double>(cfg_.n) * cfg_.lambda;
}

std::pair<std::int64_t, std::int64_t> ForestFireModel::decode_pair(std::uint64_t m) const {
  // m indexes the unordered pairs {j, i} with j <= i as m = i(i+1)/2 + j.
  auto i = static_cast<std::int64_t>(
      (std::sqrt(8.0 * static_cast<double>(m) + 1.0) - 1.0) / 2.0);
  while ((i + 1) * (i + 2) / 2 <= static_cast<std::int64_t>(m)) ++i;
  while (i * (i + 1) / 2 > static_cast<std::int64_t>(m)) --i;
  const std::int64_t j = static_cast<std::int64_t>(m) - i * (i + 1) / 2;
  return {j, i};
}

void ForestFireModel::apply_growth() {
  const auto pairs = static_cast<std::uint64_t>(cfg_.n) *
                     (static_cast<std::uint64_t>(cfg_.n) + 1) / 2;
  const auto [a, b] = decode_pair(rng_.next_below(pairs));
  const std::int64_t ra = clusters_.find(a);
  const std::int64_t rb = clusters_.find(b);
  if (ra == rb) return;  // loops and within-cluster edges leave the partition alone
  const std::int64_t rt = clusters_.find(tagged_);
  const std::int64_t root = clusters_.merge(ra, rb);
  if (rt == ra || rt == rb)
    path_.events.push_back({time_, clusters_.size_of_root(root), EventKind::growth});
}

void ForestFireModel::apply_fire() {
  const auto v = static_cast<std::int64_t>(rng_.next_below(static_cast<std::uint64_t>(cfg_.n)));
  const std::int64_t r = clusters_.find(v);
  const bool tagged_hit = clusters_.find(tagged_) == r;
  clusters_.burn_root(r);
  if (tagged_hit) path_.events.push_back({time_, 1, EventKind::burn});
}

void ForestFireModel::apply_event(double growth_rate, double total_rate) {
  ++steps_;
  const double x = rng_.next_double() * total_rate;
  if (x < 0.5 * (static_cast<double>(cfg_.n) + 1.0)) {
    apply_growth();
  } else if (x < growth_rate) {
    // a doubled within-cluster clock: no effect on the partition
  } else {
    apply_fire();
  }
}

void ForestFireModel::step() {
  const double growth = total_growth_rate();
  const double rate = growth + fire_rate();
  time_ += rng_.exponential(rate);
  apply_event(growth, rate);
}

void ForestFireModel::run_until(double t) {
  if (t < time_) fail(Errc::usage_error, "run_until: cannot run backwards");
  for (;;) {
    const double growth = total_growth_rate();
    const double rate = growth + fire_rate();
    const double dt = rng_.exponential(rate);
    if (time_ + dt > t) {
      time_ = t;  // no event lands in (time, t]; memorylessness lets us stop here
      return;
    }
    time_ += dt;
    apply_event(growth, rate);
  }
}

}  // namespace ffm
