#include "ffm/cluster_set.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ffm/errors.hpp"

namespace ffm {

ClusterSet::ClusterSet(std::int64_t n, bool ordered_index) : n_(n), ordered_(ordered_index) {
  if (n < 1) fail(Errc::usage_error, "ClusterSet: need n >= 1");
  const auto un = static_cast<std::size_t>(n);
  parent_.resize(un);
  size_.assign(un, 1);
  members_.resize(un);
  histogram_.assign(un + 1, 0);
  histogram_[1] = n;
  cluster_count_ = n;
  largest_size_ = 1;
  within_pairs_ = 0;
  for (std::size_t v = 0; v < un; ++v) {
    parent_[v] = static_cast<std::int32_t>(v);
    members_[v] = {static_cast<std::int32_t>(v)};
  }
  if (ordered_) {
    fenwick_.assign(un + 1, 0);
    fenwick_add(1, n);
    roots_by_size_.resize(un + 1);
    root_pos_.assign(un, -1);
    auto& ones = roots_by_size_[1];
    ones.resize(un);
    for (std::size_t v = 0; v < un; ++v) {
      ones[v] = static_cast<std::int32_t>(v);
      root_pos_[v] = static_cast<std::int32_t>(v);
    }
  }
}

void ClusterSet::init_from_counts(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& counts) {
  std::vector<std::pair<std::int64_t, std::int64_t>> sorted(counts);
  std::sort(sorted.begin(), sorted.end());
  std::int64_t total = 0;
  for (const auto& [size, count] : sorted) total += size * count;
  if (total != n_)
    fail(Errc::infeasible_init, "ClusterSet: counts cover " + std::to_string(total) +
                                    " vertices out of " + std::to_string(n_));
  // Reset and rebuild in increasing size order with consecutive ids.
  *this = ClusterSet(n_, ordered_);
  std::int64_t next = 0;
  for (const auto& [size, count] : sorted) {
    for (std::int64_t c = 0; c < count; ++c) {
      const std::int64_t root = next;
      for (std::int64_t i = 1; i < size; ++i) merge(root, next + i);
      next += size;
    }
  }
}

std::int64_t ClusterSet::find(std::int64_t v) {
  auto x = static_cast<std::int32_t>(v);
  while (parent_[static_cast<std::size_t>(x)] != x) {
    parent_[static_cast<std::size_t>(x)] =
        parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
    x = parent_[static_cast<std::size_t>(x)];
  }
  return x;
}

void ClusterSet::hist_remove(std::int64_t size) {
  --histogram_[static_cast<std::size_t>(size)];
  --cluster_count_;
}

void ClusterSet::hist_add(std::int64_t size) {
  ++histogram_[static_cast<std::size_t>(size)];
  ++cluster_count_;
  if (size > largest_size_) largest_size_ = size;
}

void ClusterSet::bucket_remove(std::int64_t root, std::int64_t size) {
  if (!ordered_) return;
  auto& bucket = roots_by_size_[static_cast<std::size_t>(size)];
  const auto pos = root_pos_[static_cast<std::size_t>(root)];
  const auto last = bucket.back();
  bucket[static_cast<std::size_t>(pos)] = last;
  root_pos_[static_cast<std::size_t>(last)] = pos;
  bucket.pop_back();
}

void ClusterSet::bucket_add(std::int64_t root, std::int64_t size) {
  if (!ordered_) return;
  auto& bucket = roots_by_size_[static_cast<std::size_t>(size)];
  root_pos_[static_cast<std::size_t>(root)] = static_cast<std::int32_t>(bucket.size());
  bucket.push_back(static_cast<std::int32_t>(root));
}

void ClusterSet::fenwick_add(std::int64_t size, std::int64_t delta) {
  if (!ordered_ || delta == 0) return;
  for (auto i = static_cast<std::size_t>(size); i < fenwick_.size(); i += i & (~i + 1))
    fenwick_[i] += delta;
}

std::int64_t ClusterSet::fenwick_search(std::int64_t target) const {
  // smallest s with prefix(s) > target
  std::size_t pos = 0;
  std::size_t mask = 1;
  while ((mask << 1) < fenwick_.size()) mask <<= 1;
  std::int64_t rest = target;
  for (; mask; mask >>= 1) {
    const std::size_t next = pos + mask;
    if (next < fenwick_.size() && fenwick_[next] <= rest) {
      pos = next;
      rest -= fenwick_[next];
    }
  }
  return static_cast<std::int64_t>(pos) + 1;
}

std::int64_t ClusterSet::merge(std::int64_t a, std::int64_t b) {
  std::int64_t ra = find(a), rb = find(b);
  if (ra == rb) return ra;
  if (size_[static_cast<std::size_t>(ra)] < size_[static_cast<std::size_t>(rb)]) std::swap(ra, rb);
  const std::int64_t sa = size_[static_cast<std::size_t>(ra)];
  const std::int64_t sb = size_[static_cast<std::size_t>(rb)];
  hist_remove(sa);
  hist_remove(sb);
  bucket_remove(ra, sa);
  bucket_remove(rb, sb);
  fenwick_add(sa, -sa);
  fenwick_add(sb, -sb);
  within_pairs_ += sa * sb;  // C(sa+sb,2) - C(sa,2) - C(sb,2)

  parent_[static_cast<std::size_t>(rb)] = static_cast<std::int32_t>(ra);
  size_[static_cast<std::size_t>(ra)] = static_cast<std::int32_t>(sa + sb);
  auto& big = members_[static_cast<std::size_t>(ra)];
  auto& small = members_[static_cast<std::size_t>(rb)];
  big.insert(big.end(), small.begin(), small.end());
  small.clear();
  small.shrink_to_fit();

  hist_add(sa + sb);
  bucket_add(ra, sa + sb);
  fenwick_add(sa + sb, sa + sb);
  return ra;
}

void ClusterSet::burn_root(std::int64_t r) {
  const std::int64_t s = size_[static_cast<std::size_t>(r)];
  if (s == 1) return;  // burning a singleton does not change the partition
  hist_remove(s);
  bucket_remove(r, s);
  fenwick_add(s, -s);
  within_pairs_ -= s * (s - 1) / 2;
  auto members = std::move(members_[static_cast<std::size_t>(r)]);
  members_[static_cast<std::size_t>(r)].clear();
  for (const auto v : members) {
    parent_[static_cast<std::size_t>(v)] = v;
    size_[static_cast<std::size_t>(v)] = 1;
    members_[static_cast<std::size_t>(v)] = {v};
    hist_add(1);
    bucket_add(v, 1);
  }
  fenwick_add(1, s);
}

MassDistribution ClusterSet::mass_snapshot(double as_of) const {
  std::vector<double> masses(static_cast<std::size_t>(largest_size_), 0.0);
  for (std::int64_t s = 1; s <= largest_size_; ++s) {
    const std::int64_t c = histogram_[static_cast<std::size_t>(s)];
    if (c > 0)
      masses[static_cast<std::size_t>(s - 1)] =
          static_cast<double>(s * c) / static_cast<double>(n_);
  }
  while (masses.size() > 1 && masses.back() == 0.0) masses.pop_back();
  return MassDistribution(std::move(masses), std::nullopt, as_of);
}

std::int64_t ClusterSet::slot_size(std::int64_t m) const {
  if (!ordered_) fail(Errc::usage_error, "ClusterSet: ordered index not enabled");
  if (m < 0 || m >= n_) fail(Errc::usage_error, "ClusterSet: slot out of range");
  return fenwick_search(m);
}

std::int64_t ClusterSet::vertex_count_below(std::int64_t size) const {
  if (!ordered_) fail(Errc::usage_error, "ClusterSet: ordered index not enabled");
  std::int64_t sum = 0;
  for (auto i = static_cast<std::size_t>(size - 1); i > 0; i -= i & (~i + 1)) sum += fenwick_[i];
  return sum;
}

std::int64_t ClusterSet::root_of_size_at(std::int64_t s, std::int64_t index) const {
  if (!ordered_) fail(Errc::usage_error, "ClusterSet: ordered index not enabled");
  const auto& bucket = roots_by_size_[static_cast<std::size_t>(s)];
  if (index < 0 || index >= static_cast<std::int64_t>(bucket.size()))
    fail(Errc::usage_error, "ClusterSet: root index out of range");
  return bucket[static_cast<std::size_t>(index)];
}

std::int64_t ClusterSet::pick_root_of_size(std::int64_t s, RandomStream& rng) const {
  if (!ordered_) fail(Errc::usage_error, "ClusterSet: ordered index not enabled");
  const auto& bucket = roots_by_size_[static_cast<std::size_t>(s)];
  if (bucket.empty()) fail(Errc::usage_error, "ClusterSet: no cluster of the requested size");
  return bucket[static_cast<std::size_t>(rng.next_below(bucket.size()))];
}

void ClusterSet::validate() {
  std::vector<std::int64_t> recount(static_cast<std::size_t>(n_) + 1, 0);
  std::vector<std::int64_t> root_size(static_cast<std::size_t>(n_), 0);
  for (std::int64_t v = 0; v < n_; ++v) ++root_size[static_cast<std::size_t>(find(v))];
  std::int64_t total = 0, pairs = 0, clusters = 0;
  for (std::int64_t r = 0; r < n_; ++r) {
    const std::int64_t s = root_size[static_cast<std::size_t>(r)];
    if (s == 0) continue;
    if (s != size_[static_cast<std::size_t>(r)])
      fail(Errc::schema_mismatch, "ClusterSet: stored size disagrees with recount");
    if (static_cast<std::int64_t>(members_[static_cast<std::size_t>(r)].size()) != s)
      fail(Errc::schema_mismatch, "ClusterSet: member list disagrees with recount");
    ++recount[static_cast<std::size_t>(s)];
    total += s;
    pairs += s * (s - 1) / 2;
    ++clusters;
  }
  if (total != n_) fail(Errc::schema_mismatch, "ClusterSet: sizes do not sum to n");
  if (pairs != within_pairs_) fail(Errc::schema_mismatch, "ClusterSet: pair sum drifted");
  if (clusters != cluster_count_) fail(Errc::schema_mismatch, "ClusterSet: cluster count drifted");
  for (std::int64_t s = 1; s <= n_; ++s)
    if (recount[static_cast<std::size_t>(s)] != histogram_[static_cast<std::size_t>(s)])
      fail(Errc::schema_mismatch, "ClusterSet: histogram disagrees at size " + std::to_string(s));
}

}  // namespace ffm
