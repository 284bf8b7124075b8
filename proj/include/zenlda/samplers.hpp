#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zenlda/rng.hpp"
#include "zenlda/types.hpp"

namespace zenlda {

// Walker alias table over a discrete weight vector. Construction keeps only
// the queue of above-average topics; below-average topics are written into
// bins sequentially in input order, so the layout is deterministic.
//
// In integer mode the weights are integer counts pre-multiplied by the bin
// count, which keeps the per-bin capacity and every split point integral.
class AliasTable {
 public:
  struct Bin {
    TopicId low = 0;
    TopicId high = 0;
    double split = 1.0;  // fraction of the bin owned by `low`
  };

  // Reusable construction buffers, so per-word rebuilds in the sweep hot
  // path stay allocation-free.
  struct Workspace {
    std::vector<std::size_t> smalls;
    std::vector<std::size_t> highs;
    std::vector<double> residual;
  };

  AliasTable() = default;

  // Dense weights over topics 0..K-1.
  static AliasTable build(std::span<const double> weights);
  // Sparse support: ids[i] receives weights[i].
  static AliasTable build(std::span<const TopicId> ids, std::span<const double> weights);
  // Integer mode over counts (>= 0, at least one positive).
  static AliasTable build_integer(std::span<const TopicId> ids, std::span<const Count> counts);

  // In-place float-mode rebuild reusing this table's bin storage.
  void assign(std::span<const TopicId> ids, std::span<const double> weights, Workspace& ws);

  // u1 in [0, bins()), u2 in [0, 1). Picks the bin from the integer part of
  // u1 and the side from u2 against the split point.
  TopicId sample(double u1, double u2) const;

  // One pre-drawn uniform in [0, 1) supplies the bin (integer part after
  // scaling) and the split test (fractional part).
  TopicId sample_unit(double u01) const {
    const double u1 = u01 * static_cast<double>(bins_.size());
    const double floor_u1 = static_cast<double>(static_cast<std::size_t>(u1));
    return sample(u1, u1 - floor_u1);
  }

  // Default draw: one uniform supplies both the bin (integer part) and the
  // split test (fractional part).
  TopicId sample(Rng& rng) const { return sample_unit(rng.uniform()); }

  // Two independent draws, for statistical audits of the reuse shortcut.
  TopicId sample_two_draws(Rng& rng) const {
    return sample(rng.uniform() * static_cast<double>(bins_.size()), rng.uniform());
  }

  double total() const { return total_; }
  std::size_t bins() const { return bins_.size(); }
  bool integer_mode() const { return integer_mode_; }
  const std::vector<Bin>& bin_table() const { return bins_; }

  // Integer-mode internals for exact mass accounting: each bin holds
  // bin_capacity() mass, of which split_int()[b] belongs to the low topic.
  std::int64_t bin_capacity() const { return capacity_int_; }
  const std::vector<std::int64_t>& split_int() const { return split_int_; }

 private:
  static AliasTable construct(std::span<const TopicId> ids, std::span<const double> weights,
                              std::span<const std::int64_t> int_weights);

  std::vector<Bin> bins_;
  double total_ = 0.0;
  bool integer_mode_ = false;
  std::int64_t capacity_int_ = 0;
  std::vector<std::int64_t> split_int_;
};

// Complete binary tree of partial sums over K leaves. The root holds the
// total; sampling walks down with "left if u < left-sum" so the result is
// the smallest t with cumsum(t) > u. Updates touch the leaf-to-root path.
class FPlusTree {
 public:
  FPlusTree() = default;
  explicit FPlusTree(std::span<const double> weights);

  void update(TopicId k, double delta);
  TopicId sample(double u) const;  // u in [0, total())

  // Samples as if weight[excluded] were reduced by `delta`, without touching
  // the tree; u must lie in [0, total() - delta).
  TopicId sample_excluding(TopicId excluded, double delta, double u) const;

  double total() const { return leaf_count_ == 0 ? 0.0 : nodes_[1]; }
  double weight(TopicId k) const { return nodes_[base_ + static_cast<std::size_t>(k)]; }
  std::size_t size() const { return leaf_count_; }

  // Leaf-up rebuild of the internal sums, for verifying update consistency.
  std::vector<double> rebuilt_nodes() const;
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::size_t leaf_count_ = 0;
  std::size_t base_ = 0;  // index of leaf 0
  std::vector<double> nodes_;
};

// Prefix sums over a sparse support, sampled by binary search: the draw is
// the smallest support entry whose cumulative weight exceeds u.
class CumulativeTable {
 public:
  CumulativeTable() = default;

  static CumulativeTable build(std::span<const TopicId> ids, std::span<const double> weights);

  // Rebuilds in place, reusing capacity; for hot loops that construct one
  // table per (word, doc) pair.
  void assign(std::span<const TopicId> ids, std::span<const double> weights);

  // Incremental rebuild for single-pass construction.
  void clear_keep_capacity() {
    ids_.clear();
    cumulative_.clear();
  }
  void push(TopicId id, double weight) {
    ids_.push_back(id);
    cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + weight);
  }

  TopicId sample(double u) const;  // u in [0, total())

  // Draw one topic per pre-sorted uniform in a single forward sweep;
  // equivalent to calling sample() on each value.
  std::vector<TopicId> sample_batch(std::span<const double> sorted_us) const;

  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  std::size_t support_size() const { return ids_.size(); }

 private:
  std::vector<TopicId> ids_;
  std::vector<double> cumulative_;
};

// Linear scan returning the smallest t with running sum > u.
TopicId linear_sample(std::span<const double> weights, double u);
TopicId linear_sample(std::span<const TopicId> ids, std::span<const double> weights, double u);

}  // namespace zenlda
