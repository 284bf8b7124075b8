#pragma once

#include <cstddef>
#include <vector>

#include "zenlda/types.hpp"

namespace zenlda {

// Plain array of non-negative counts, length K.
using DenseCounts = std::vector<Count>;

// Index/value pair representation. Indices are strictly increasing, values
// are >= 1; positions not listed are zero.
struct SparseCounts {
  std::int32_t length = 0;
  std::vector<std::int32_t> indices;
  std::vector<Count> values;

  std::int32_t nnz() const { return static_cast<std::int32_t>(indices.size()); }
  Count get(std::int32_t i) const;
  std::int64_t sum() const;
};

SparseCounts to_sparse(const DenseCounts& dense);
DenseCounts to_dense(const SparseCounts& sparse);

// Run-compressed count vector. The run index stores one (start, before) pair
// per maximal run of zeros: `start` is the first position of the run and
// `before` is the number of non-zero elements strictly before it. Lookup is
// a binary search over the run index; front (-1, 0) and back (K, E)
// sentinels make the bounding-pair search total at the vector boundaries.
class CompactVector {
 public:
  struct Run {
    std::int32_t start;
    std::int32_t before;
  };

  CompactVector() = default;

  static CompactVector from_dense(const DenseCounts& dense);
  DenseCounts to_dense() const;

  // Value at position x; 0 when x falls inside an empty run.
  Count get(std::int32_t x) const;
  // Same, reporting how many run-index entries the search touched.
  Count get(std::int32_t x, std::size_t& probes) const;

  // New vector equal to this one with position x set to v (v >= 1). Existing
  // non-zero values are overwritten. Rebuild cost is linear in the number of
  // runs and stored values.
  CompactVector insert(std::int32_t x, Count v) const;

  std::int32_t length() const { return length_; }
  std::int32_t nnz() const { return static_cast<std::int32_t>(values_.size()); }
  const std::vector<Run>& runs() const { return runs_; }
  const std::vector<Count>& values() const { return values_; }

  // Total stored cells: two per run plus one per non-zero value.
  std::size_t stored_cells() const { return 2 * runs_.size() + values_.size(); }

  bool operator==(const CompactVector& other) const;

 private:
  std::int32_t length_ = 0;
  std::vector<Run> runs_;
  std::vector<Count> values_;
};

}  // namespace zenlda
