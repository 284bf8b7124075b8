#pragma once

#include <cstdint>
#include <vector>

#include "zenlda/corpus.hpp"
#include "zenlda/counts.hpp"
#include "zenlda/types.hpp"

namespace zenlda {

// The count triple of the model. At every iteration boundary the word and
// doc counts both recount the edge topic assignments exactly, and the topic
// totals are the word-side aggregate.
struct ModelState {
  std::vector<SparseCounts> word_counts;   // N_w|k per word
  std::vector<SparseCounts> doc_counts;    // N_k|d per doc
  std::vector<std::int64_t> topic_totals;  // N_k
  std::int32_t topics = 0;
  std::int32_t iteration = 0;

  std::int32_t vocab() const { return static_cast<std::int32_t>(word_counts.size()); }
  std::int32_t docs() const { return static_cast<std::int32_t>(doc_counts.size()); }
  std::int64_t total_tokens() const {
    std::int64_t n = 0;
    for (std::int64_t v : topic_totals) n += v;
    return n;
  }
};

// Recounts all three count structures from the graph's edge topics.
ModelState state_from_graph(const TokenGraph& graph, std::int32_t topics,
                            std::int32_t iteration = 0);

// Conservation checks against the graph: per-word and per-doc count sums
// equal the degrees, topic totals equal the word-side aggregate, and the
// grand total equals the token count. Throws InvariantError with a
// diagnostic on the first violation.
void validate_state(const ModelState& state, const TokenGraph& graph);

bool states_equal(const ModelState& a, const ModelState& b);

}  // namespace zenlda
