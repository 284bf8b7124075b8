#include "zenlda/samplers.hpp"

#include <algorithm>
#include <cstddef>
#include <deque>
#include <numeric>

namespace zenlda {

AliasTable AliasTable::build(std::span<const double> weights) {
  std::vector<TopicId> ids(weights.size());
  std::iota(ids.begin(), ids.end(), 0);
  AliasTable table;
  Workspace ws;
  table.assign(ids, weights, ws);
  return table;
}

AliasTable AliasTable::build(std::span<const TopicId> ids, std::span<const double> weights) {
  AliasTable table;
  Workspace ws;
  table.assign(ids, weights, ws);
  return table;
}

void AliasTable::assign(std::span<const TopicId> ids, std::span<const double> weights,
                        Workspace& ws) {
  const std::size_t n = weights.size();
  if (n == 0) throw InvariantError("alias table: empty weight vector");
  integer_mode_ = false;
  capacity_int_ = 0;
  split_int_.clear();

  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InvariantError("alias table: negative weight");
    total += w;
  }
  if (total <= 0.0) throw InvariantError("alias table: all weights are zero");
  total_ = total;
  const double avg = total / static_cast<double>(n);

  ws.residual.assign(weights.begin(), weights.end());
  ws.smalls.clear();
  ws.highs.clear();
  for (std::size_t i = 0; i < n; ++i) {
    (ws.residual[i] > avg ? ws.highs : ws.smalls).push_back(i);
  }
  std::size_t small_head = 0;
  std::size_t high_head = 0;
  bins_.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    Bin& bin = bins_[b];
    if (small_head >= ws.smalls.size()) {
      const std::size_t h = ws.highs[high_head];
      bin.low = ids[h];
      bin.high = ids[h];
      bin.split = 1.0;
      ws.residual[h] -= avg;
      if (ws.residual[h] <= avg) {
        ++high_head;
        if (ws.residual[h] > 0.0) ws.smalls.push_back(h);
      }
      continue;
    }
    const std::size_t s = ws.smalls[small_head++];
    bin.low = ids[s];
    if (ws.residual[s] >= avg || high_head >= ws.highs.size()) {
      bin.high = ids[s];
      bin.split = 1.0;
    } else {
      bin.split = ws.residual[s] / avg;
      const std::size_t h = ws.highs[high_head];
      bin.high = ids[h];
      ws.residual[h] -= avg - ws.residual[s];
      if (ws.residual[h] <= avg) {
        ++high_head;
        ws.smalls.push_back(h);
      }
    }
  }
}

AliasTable AliasTable::build_integer(std::span<const TopicId> ids, std::span<const Count> counts) {
  // Pre-multiply each count by the bin count so the average stays integral.
  const std::int64_t n = static_cast<std::int64_t>(counts.size());
  std::vector<std::int64_t> scaled(counts.size());
  std::vector<double> as_double(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    scaled[i] = static_cast<std::int64_t>(counts[i]) * n;
    as_double[i] = static_cast<double>(scaled[i]);
  }
  return construct(ids, as_double, scaled);
}

AliasTable AliasTable::construct(std::span<const TopicId> ids, std::span<const double> weights,
                                 std::span<const std::int64_t> int_weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw InvariantError("alias table: empty weight vector");

  AliasTable table;
  table.integer_mode_ = true;

  std::int64_t total = 0;
  for (std::int64_t w : int_weights) total += w;
  if (total <= 0) throw InvariantError("alias table: all weights are zero");
  table.total_ = static_cast<double>(total) / static_cast<double>(n);
  table.capacity_int_ = total / static_cast<std::int64_t>(n);  // exact: weights were scaled by n
  table.split_int_.resize(n);

  std::vector<std::int64_t> residual(int_weights.begin(), int_weights.end());
  std::deque<std::size_t> smalls;
  std::deque<std::size_t> highs;
  const std::int64_t avg = table.capacity_int_;
  for (std::size_t i = 0; i < n; ++i) {
    (residual[i] > avg ? highs : smalls).push_back(i);
  }
  table.bins_.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    Bin& bin = table.bins_[b];
    if (smalls.empty()) {
      const std::size_t h = highs.front();
      bin.low = ids[h];
      bin.high = ids[h];
      bin.split = 1.0;
      table.split_int_[b] = avg;
      residual[h] -= avg;
      if (residual[h] <= avg) {
        highs.pop_front();
        if (residual[h] > 0) smalls.push_back(h);
      }
      continue;
    }
    const std::size_t s = smalls.front();
    smalls.pop_front();
    bin.low = ids[s];
    table.split_int_[b] = residual[s];
    bin.split = static_cast<double>(residual[s]) / static_cast<double>(avg);
    if (residual[s] >= avg || highs.empty()) {
      bin.high = ids[s];
      bin.split = 1.0;
      table.split_int_[b] = avg;
    } else {
      const std::size_t h = highs.front();
      bin.high = ids[h];
      residual[h] -= avg - residual[s];
      if (residual[h] <= avg) {
        highs.pop_front();
        smalls.push_back(h);
      }
    }
  }
  return table;
}

TopicId AliasTable::sample(double u1, double u2) const {
  std::size_t b = static_cast<std::size_t>(u1);
  if (b >= bins_.size()) b = bins_.size() - 1;
  const Bin& bin = bins_[b];
  return u2 >= bin.split ? bin.high : bin.low;
}

FPlusTree::FPlusTree(std::span<const double> weights) {
  leaf_count_ = weights.size();
  if (leaf_count_ == 0) return;
  base_ = 1;
  while (base_ < leaf_count_) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
  for (std::size_t i = 0; i < leaf_count_; ++i) {
    if (weights[i] < 0.0) throw InvariantError("F+ tree: negative weight");
    nodes_[base_ + i] = weights[i];
  }
  for (std::size_t i = base_ - 1; i >= 1; --i) {
    nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
  }
}

void FPlusTree::update(TopicId k, double delta) {
  std::size_t i = base_ + static_cast<std::size_t>(k);
  if (nodes_[i] + delta < 0.0) {
    throw InvariantError("F+ tree: update drives leaf negative");
  }
  for (; i >= 1; i /= 2) nodes_[i] += delta;
}

TopicId FPlusTree::sample(double u) const {
  std::size_t i = 1;
  while (i < base_) {
    const double left = nodes_[2 * i];
    if (u < left) {
      i = 2 * i;
    } else {
      u -= left;
      i = 2 * i + 1;
    }
  }
  std::size_t leaf = i - base_;
  if (leaf >= leaf_count_) leaf = leaf_count_ - 1;  // float edge at the padded tail
  return static_cast<TopicId>(leaf);
}

TopicId FPlusTree::sample_excluding(TopicId excluded, double delta, double u) const {
  std::size_t i = 1;
  std::size_t lo = 0;
  std::size_t span = base_;
  const std::size_t excl = static_cast<std::size_t>(excluded);
  while (i < base_) {
    const std::size_t half = span / 2;
    double left = nodes_[2 * i];
    if (excl >= lo && excl < lo + half) left -= delta;
    if (u < left) {
      i = 2 * i;
    } else {
      u -= left;
      i = 2 * i + 1;
      lo += half;
    }
    span = half;
  }
  std::size_t leaf = i - base_;
  if (leaf >= leaf_count_) leaf = leaf_count_ - 1;
  return static_cast<TopicId>(leaf);
}

std::vector<double> FPlusTree::rebuilt_nodes() const {
  std::vector<double> fresh(nodes_);
  if (base_ == 0) return fresh;
  for (std::size_t i = base_ - 1; i >= 1; --i) {
    fresh[i] = fresh[2 * i] + fresh[2 * i + 1];
  }
  return fresh;
}

CumulativeTable CumulativeTable::build(std::span<const TopicId> ids,
                                       std::span<const double> weights) {
  CumulativeTable table;
  table.assign(ids, weights);
  return table;
}

void CumulativeTable::assign(std::span<const TopicId> ids, std::span<const double> weights) {
  if (ids.empty()) throw InvariantError("cumulative table: empty support");
  ids_.assign(ids.begin(), ids.end());
  cumulative_.resize(ids.size());
  double running = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw InvariantError("cumulative table: negative weight");
    running += weights[i];
    cumulative_[i] = running;
  }
}

TopicId CumulativeTable::sample(double u) const {
  // smallest entry with cumulative > u
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;  // float edge at the total
  return ids_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::vector<TopicId> CumulativeTable::sample_batch(std::span<const double> sorted_us) const {
  std::vector<TopicId> out;
  out.reserve(sorted_us.size());
  std::size_t pos = 0;
  for (double u : sorted_us) {
    while (pos + 1 < cumulative_.size() && cumulative_[pos] <= u) ++pos;
    out.push_back(ids_[pos]);
  }
  return out;
}

TopicId linear_sample(std::span<const double> weights, double u) {
  double running = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    if (running > u) return static_cast<TopicId>(i);
    if (weights[i] > 0.0) last = i;
  }
  return static_cast<TopicId>(last);  // float edge at the total
}

TopicId linear_sample(std::span<const TopicId> ids, std::span<const double> weights, double u) {
  double running = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    if (running > u) return ids[i];
    if (weights[i] > 0.0) last = i;
  }
  return ids[last];
}

}  // namespace zenlda
