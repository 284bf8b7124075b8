#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zenlda/corpus.hpp"
#include "zenlda/kernels.hpp"
#include "zenlda/metrics.hpp"
#include "zenlda/model.hpp"

namespace zenlda {

// Checkpoint file layout (plain text, diff-friendly):
//   line 1            JSON header {format, version, topics, vocab, docs,
//                     tokens, alpha, beta, alpha_as, iteration, seed}
//   "#words"          tab-separated rows: wordId <TAB> topic:count ...
//   "#edges"          run-length encoded edge topics in canonical edge order,
//                     space-separated topic*runLength entries
//   "#history"        one metric record JSON per line
struct CheckpointHeader {
  std::int32_t version = 1;
  std::int32_t topics = 0;
  std::int32_t vocab = 0;
  std::int32_t docs = 0;
  std::int64_t tokens = 0;
  HyperParams hyper;
  std::int32_t iteration = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const ModelState& state, const TokenGraph& graph,
                     const MetricHistory& history, const HyperParams& hyper, std::uint64_t seed,
                     const std::string& path);

struct LoadedCheckpoint {
  CheckpointHeader header;
  std::vector<SparseCounts> word_counts;  // as stored, validated against the edges
  std::vector<TopicId> edge_topics;       // canonical edge order
  MetricHistory history;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Applies checkpoint topics to a graph rebuilt from the training corpus and
// reconstructs the full model state. New documents beyond the checkpoint's
// doc count get random topics; a grown vocabulary is fine, a shrunk one is
// an error. Validates all conservation invariants.
ModelState restore_state(const LoadedCheckpoint& checkpoint, TokenGraph& graph,
                         std::uint64_t init_seed);

// Greedy single-linkage merge of topics whose smoothed word distributions
// are closer than the L1 threshold. Merged groups collapse onto the lowest
// topic id; edge topics are relabeled, counts are summed, and K stays fixed
// (drained topics become empty).
struct DedupReport {
  std::vector<std::vector<TopicId>> groups;  // merged groups, size >= 2
  std::int32_t topics_removed = 0;
};

DedupReport dedup_topics(ModelState& state, TokenGraph& graph, const HyperParams& hyper,
                         double l1_threshold);

enum class InferMode { kGibbs, kRtlda };

InferMode parse_infer_mode(const std::string& name);

// Fold-in inference over a trained state: word-topic counts stay frozen,
// doc-topic counts are local to the query. Gibbs mode samples the
// conditional; rtlda mode replaces the draw with an argmax (ties to the
// lowest topic id). Unknown word ids are skipped with a warning. Returns
// theta_d = (N_k|d + alpha_k) / (N_d + sum alpha_k).
std::vector<double> infer_document(const ModelState& state, const HyperParams& hyper,
                                   const std::vector<DocEntry>& doc, std::int32_t iterations,
                                   InferMode mode, std::uint64_t seed);

}  // namespace zenlda
