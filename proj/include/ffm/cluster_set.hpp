#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ffm/mass_distribution.hpp"
#include "ffm/rng.hpp"

namespace ffm {

/// Burnable union-find over n vertices with explicit member lists, a
/// cluster-size histogram, and (optionally) a size-ordered index: a Fenwick
/// tree over vertex counts by size plus per-size root buckets, which
/// together give the O(log n) paintbox used by the coupling.
class ClusterSet {
 public:
  explicit ClusterSet(std::int64_t n, bool ordered_index = false);

  /// Lays out clusters in increasing size order with consecutive vertex ids:
  /// counts[i] = (size, how many clusters of that size). Total must equal n.
  void init_from_counts(const std::vector<std::pair<std::int64_t, std::int64_t>>& counts);

  std::int64_t n() const { return n_; }
  std::int64_t find(std::int64_t v);
  std::int64_t size_of_root(std::int64_t r) const { return size_[static_cast<std::size_t>(r)]; }
  std::int64_t cluster_size(std::int64_t v) { return size_of_root(find(v)); }

  /// Union of the clusters of a and b; no-op when already joined.
  /// Returns the surviving root.
  std::int64_t merge(std::int64_t a, std::int64_t b);

  /// Splits the cluster of root r back into singletons.
  void burn_root(std::int64_t r);

  std::int64_t count_of_size(std::int64_t s) const {
    return histogram_[static_cast<std::size_t>(s)];
  }
  std::int64_t largest_size() const { return largest_size_; }
  std::int64_t cluster_count() const { return cluster_count_; }

  /// sum over clusters of size*(size-1)/2, maintained incrementally.
  std::int64_t within_pair_sum() const { return within_pairs_; }

  /// Mass fractions l * count_l / n for l up to the largest occupied size.
  MassDistribution mass_snapshot(double as_of = 0.0) const;

  // Size-ordered paintbox (ordered_index only): the size of the cluster
  // owning slot m when vertices are sorted by cluster size, m in [0, n).
  std::int64_t slot_size(std::int64_t m) const;
  /// Number of vertices in clusters strictly smaller than `size`.
  std::int64_t vertex_count_below(std::int64_t size) const;
  /// The index-th cluster root within the size-s block (index < count_of_size(s)).
  std::int64_t root_of_size_at(std::int64_t s, std::int64_t index) const;
  /// A uniformly random root among clusters of size s.
  std::int64_t pick_root_of_size(std::int64_t s, RandomStream& rng) const;

  /// Full recount of sizes, histogram, and pair sum; throws on mismatch.
  void validate();

 private:
  void hist_remove(std::int64_t size);
  void hist_add(std::int64_t size);
  void bucket_remove(std::int64_t root, std::int64_t size);
  void bucket_add(std::int64_t root, std::int64_t size);
  void fenwick_add(std::int64_t size, std::int64_t delta);
  std::int64_t fenwick_search(std::int64_t target) const;  // smallest s with prefix(s) > target

  std::int64_t n_;
  bool ordered_;
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> size_;
  std::vector<std::vector<std::int32_t>> members_;  // valid at roots
  std::vector<std::int64_t> histogram_;             // count of clusters per size
  std::int64_t largest_size_ = 1;
  std::int64_t cluster_count_ = 0;
  std::int64_t within_pairs_ = 0;

  std::vector<std::int64_t> fenwick_;               // vertex counts by size
  std::vector<std::vector<std::int32_t>> roots_by_size_;
  std::vector<std::int32_t> root_pos_;
};

}  // namespace ffm
