#include "zenlda/model.hpp"

#include <algorithm>
#include <string>

namespace zenlda {

ModelState state_from_graph(const TokenGraph& graph, std::int32_t topics,
                            std::int32_t iteration) {
  ModelState state;
  state.topics = topics;
  state.iteration = iteration;
  state.topic_totals.assign(static_cast<std::size_t>(topics), 0);
  state.word_counts.assign(static_cast<std::size_t>(graph.vocab_size), SparseCounts{});
  state.doc_counts.assign(static_cast<std::size_t>(graph.doc_count), SparseCounts{});
  for (auto& c : state.word_counts) c.length = topics;
  for (auto& c : state.doc_counts) c.length = topics;

  DenseCounts scratch(static_cast<std::size_t>(topics), 0);
  // Word side: edges of one word are contiguous, so the scratch array can be
  // filled and drained per group.
  for (const auto& [first, last] : graph.word_ranges) {
    const WordId word = graph.edges[first].word;
    for (std::size_t e = first; e < last; ++e) {
      for (TopicId t : graph.edge_topics(graph.edges[e])) {
        ++scratch[static_cast<std::size_t>(t)];
        ++state.topic_totals[static_cast<std::size_t>(t)];
      }
    }
    SparseCounts& wc = state.word_counts[static_cast<std::size_t>(word)];
    for (std::int32_t k = 0; k < topics; ++k) {
      if (scratch[static_cast<std::size_t>(k)] != 0) {
        wc.indices.push_back(k);
        wc.values.push_back(scratch[static_cast<std::size_t>(k)]);
        scratch[static_cast<std::size_t>(k)] = 0;
      }
    }
  }

  // Doc side: edges of a doc are scattered across word groups, so collect
  // topic lists per doc first, then drain the scratch per doc.
  std::vector<std::vector<TopicId>> doc_acc(static_cast<std::size_t>(graph.doc_count));
  for (const Edge& edge : graph.edges) {
    auto& acc = doc_acc[static_cast<std::size_t>(edge.doc)];
    for (TopicId t : graph.edge_topics(edge)) acc.push_back(t);
  }
  for (DocId d = 0; d < graph.doc_count; ++d) {
    auto& acc = doc_acc[static_cast<std::size_t>(d)];
    std::vector<TopicId> seen;
    for (TopicId t : acc) {
      if (scratch[static_cast<std::size_t>(t)] == 0) seen.push_back(t);
      ++scratch[static_cast<std::size_t>(t)];
    }
    std::sort(seen.begin(), seen.end());
    SparseCounts& dc = state.doc_counts[static_cast<std::size_t>(d)];
    for (TopicId t : seen) {
      dc.indices.push_back(t);
      dc.values.push_back(scratch[static_cast<std::size_t>(t)]);
      scratch[static_cast<std::size_t>(t)] = 0;
    }
  }
  return state;
}

void validate_state(const ModelState& state, const TokenGraph& graph) {
  if (state.vocab() != graph.vocab_size || state.docs() != graph.doc_count) {
    throw InvariantError("model/graph shape mismatch");
  }
  for (WordId w = 0; w < graph.vocab_size; ++w) {
    const std::int64_t sum = state.word_counts[static_cast<std::size_t>(w)].sum();
    if (sum != graph.word_degree[static_cast<std::size_t>(w)]) {
      throw InvariantError("word " + std::to_string(w) + ": count sum " + std::to_string(sum) +
                           " != degree " +
                           std::to_string(graph.word_degree[static_cast<std::size_t>(w)]));
    }
  }
  for (DocId d = 0; d < graph.doc_count; ++d) {
    const std::int64_t sum = state.doc_counts[static_cast<std::size_t>(d)].sum();
    if (sum != graph.doc_degree[static_cast<std::size_t>(d)]) {
      throw InvariantError("doc " + std::to_string(d) + ": count sum " + std::to_string(sum) +
                           " != degree " +
                           std::to_string(graph.doc_degree[static_cast<std::size_t>(d)]));
    }
  }
  std::vector<std::int64_t> word_side(static_cast<std::size_t>(state.topics), 0);
  for (const SparseCounts& wc : state.word_counts) {
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      word_side[static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)])] +=
          wc.values[static_cast<std::size_t>(i)];
    }
  }
  std::int64_t grand = 0;
  for (std::int32_t k = 0; k < state.topics; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    if (word_side[ki] != state.topic_totals[ki]) {
      throw InvariantError("topic " + std::to_string(k) + ": total " +
                           std::to_string(state.topic_totals[ki]) +
                           " != word-side aggregate " + std::to_string(word_side[ki]));
    }
    grand += state.topic_totals[ki];
  }
  if (grand != graph.total_tokens()) {
    throw InvariantError("topic totals sum " + std::to_string(grand) + " != token count " +
                         std::to_string(graph.total_tokens()));
  }
}

namespace {

bool sparse_equal(const SparseCounts& a, const SparseCounts& b) {
  return a.length == b.length && a.indices == b.indices && a.values == b.values;
}

}  // namespace

bool states_equal(const ModelState& a, const ModelState& b) {
  if (a.topics != b.topics || a.iteration != b.iteration) return false;
  if (a.topic_totals != b.topic_totals) return false;
  if (a.word_counts.size() != b.word_counts.size()) return false;
  if (a.doc_counts.size() != b.doc_counts.size()) return false;
  for (std::size_t i = 0; i < a.word_counts.size(); ++i) {
    if (!sparse_equal(a.word_counts[i], b.word_counts[i])) return false;
  }
  for (std::size_t i = 0; i < a.doc_counts.size(); ++i) {
    if (!sparse_equal(a.doc_counts[i], b.doc_counts[i])) return false;
  }
  return true;
}

}  // namespace zenlda
