#include "zenlda/counts.hpp"

#include <algorithm>
#include <string>

namespace zenlda {

Count SparseCounts::get(std::int32_t i) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), i);
  if (it == indices.end() || *it != i) return 0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

std::int64_t SparseCounts::sum() const {
  std::int64_t total = 0;
  for (Count v : values) total += v;
  return total;
}

SparseCounts to_sparse(const DenseCounts& dense) {
  SparseCounts out;
  out.length = static_cast<std::int32_t>(dense.size());
  for (std::int32_t i = 0; i < out.length; ++i) {
    if (dense[static_cast<std::size_t>(i)] != 0) {
      out.indices.push_back(i);
      out.values.push_back(dense[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

DenseCounts to_dense(const SparseCounts& sparse) {
  DenseCounts out(static_cast<std::size_t>(sparse.length), 0);
  for (std::size_t i = 0; i < sparse.indices.size(); ++i) {
    out[static_cast<std::size_t>(sparse.indices[i])] = sparse.values[i];
  }
  return out;
}

CompactVector CompactVector::from_dense(const DenseCounts& dense) {
  CompactVector out;
  out.length_ = static_cast<std::int32_t>(dense.size());
  std::int32_t i = 0;
  while (i < out.length_) {
    if (dense[static_cast<std::size_t>(i)] == 0) {
      out.runs_.push_back({i, static_cast<std::int32_t>(out.values_.size())});
      while (i < out.length_ && dense[static_cast<std::size_t>(i)] == 0) ++i;
    } else {
      out.values_.push_back(dense[static_cast<std::size_t>(i)]);
      ++i;
    }
  }
  return out;
}

DenseCounts CompactVector::to_dense() const {
  DenseCounts out(static_cast<std::size_t>(length_), 0);
  std::size_t vi = 0;
  std::size_t ri = 0;
  std::int32_t pos = 0;
  while (pos < length_) {
    if (ri < runs_.size() && runs_[ri].start == pos) {
      // run of zeros extends until the values preceding the next run resume
      std::int32_t next_start = ri + 1 < runs_.size() ? runs_[ri + 1].start : length_;
      std::int32_t next_before =
          ri + 1 < runs_.size() ? runs_[ri + 1].before : static_cast<std::int32_t>(values_.size());
      std::int32_t resume = next_start - (next_before - runs_[ri].before);
      pos = resume;
      ++ri;
    } else {
      out[static_cast<std::size_t>(pos)] = values_[vi++];
      ++pos;
    }
  }
  return out;
}

Count CompactVector::get(std::int32_t x) const {
  std::size_t probes = 0;
  return get(x, probes);
}

Count CompactVector::get(std::int32_t x, std::size_t& probes) const {
  if (x < 0 || x >= length_) {
    throw InvariantError("CompactVector::get: index " + std::to_string(x) + " out of range [0, " +
                         std::to_string(length_) + ")");
  }
  probes = 0;
  // First run-index entry with start > x; the bounding pair is (lo-1, lo)
  // with sentinels standing in at either end.
  std::size_t lo = 0;
  std::size_t hi = runs_.size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    ++probes;
    if (runs_[mid].start > x) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::int32_t total = static_cast<std::int32_t>(values_.size());
  const std::int32_t s_i = lo > 0 ? runs_[lo - 1].start : -1;
  const std::int32_t n_i = lo > 0 ? runs_[lo - 1].before : 0;
  const std::int32_t s_j = lo < runs_.size() ? runs_[lo].start : length_;
  const std::int32_t n_j = lo < runs_.size() ? runs_[lo].before : total;
  if (x == s_i) return 0;
  // Non-zero values between the two runs occupy [s_j - (n_j - n_i), s_j).
  const std::int32_t first_value_pos = s_j - (n_j - n_i);
  if (x < first_value_pos) return 0;
  return values_[static_cast<std::size_t>(n_i + (x - first_value_pos))];
}

CompactVector CompactVector::insert(std::int32_t x, Count v) const {
  if (x < 0 || x >= length_) {
    throw InvariantError("CompactVector::insert: index out of range");
  }
  if (v < 1) {
    throw InvariantError("CompactVector::insert: value must be >= 1");
  }
  // Run-level rebuild: walk the run index once, splitting or shrinking the
  // run that covers x, and splice the value into position order.
  CompactVector out;
  out.length_ = length_;
  out.runs_.reserve(runs_.size() + 1);
  out.values_.reserve(values_.size() + 1);

  bool was_zero = false;
  std::int32_t value_pos = -1;  // insertion index into values_
  for (std::size_t ri = 0; ri <= runs_.size(); ++ri) {
    // extent of run ri: [start, resume)
    if (ri == runs_.size()) break;
    const Run run = runs_[ri];
    const std::int32_t next_start = ri + 1 < runs_.size() ? runs_[ri + 1].start : length_;
    const std::int32_t next_before =
        ri + 1 < runs_.size() ? runs_[ri + 1].before : static_cast<std::int32_t>(values_.size());
    const std::int32_t resume = next_start - (next_before - run.before);
    if (x >= run.start && x < resume) {
      was_zero = true;
      value_pos = run.before;
      // rebuild run list with this run shrunk/split/removed
      for (std::size_t rj = 0; rj < runs_.size(); ++rj) {
        if (rj != ri) {
          Run r = runs_[rj];
          if (r.start > x) r.before += 1;
          out.runs_.push_back(r);
          continue;
        }
        const std::int32_t len = resume - run.start;
        if (len == 1) continue;  // run disappears
        if (x == run.start) {
          out.runs_.push_back({run.start + 1, run.before + 1});
        } else if (x == resume - 1) {
          out.runs_.push_back(run);
        } else {
          out.runs_.push_back(run);
          out.runs_.push_back({x + 1, run.before + 1});
        }
      }
      break;
    }
  }

  if (was_zero) {
    out.values_.assign(values_.begin(), values_.begin() + value_pos);
    out.values_.push_back(v);
    out.values_.insert(out.values_.end(), values_.begin() + value_pos, values_.end());
    return out;
  }

  // Position already non-zero: overwrite in place. Its value index is the
  // number of non-zeros before x, recoverable through get() arithmetic.
  out.runs_ = runs_;
  out.values_ = values_;
  std::size_t lo = 0;
  std::size_t hi = runs_.size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (runs_[mid].start > x) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::int32_t n_i = lo > 0 ? runs_[lo - 1].before : 0;
  const std::int32_t s_j = lo < runs_.size() ? runs_[lo].start : length_;
  const std::int32_t n_j =
      lo < runs_.size() ? runs_[lo].before : static_cast<std::int32_t>(values_.size());
  const std::int32_t first_value_pos = s_j - (n_j - n_i);
  out.values_[static_cast<std::size_t>(n_i + (x - first_value_pos))] = v;
  return out;
}

bool CompactVector::operator==(const CompactVector& other) const {
  return length_ == other.length_ && values_ == other.values_ &&
         runs_.size() == other.runs_.size() &&
         std::equal(runs_.begin(), runs_.end(), other.runs_.begin(),
                    [](const Run& a, const Run& b) {
                      return a.start == b.start && a.before == b.before;
                    });
}

}  // namespace zenlda
