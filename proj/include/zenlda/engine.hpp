#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zenlda/corpus.hpp"
#include "zenlda/kernels.hpp"
#include "zenlda/metrics.hpp"
#include "zenlda/model.hpp"
#include "zenlda/partition.hpp"
#include "zenlda/rng.hpp"

namespace zenlda {

enum class SparseInit { kNone, kWord, kDoc };

SparseInit parse_sparse_init(const std::string& name);

struct TrainConfig {
  HyperParams hyper;
  KernelKind kernel = KernelKind::kZen;
  PartitionStrategy partitioner = PartitionStrategy::kRandom;
  std::int32_t parts = 1;
  std::int64_t dbh_threshold = 0;
  std::int32_t workers = 1;  // per partition; > 1 uses word-granularity stealing
  std::int32_t max_iterations = 0;
  std::optional<double> target_perplexity;
  SparseInit sparse_init = SparseInit::kNone;
  double sparse_degree = 1.0;
  std::optional<std::int32_t> exclusion_start;  // token exclusion from this iteration on
  bool delta_aggregation = false;
  double beta_boost = 0.0;
  std::uint64_t seed = 0;
  std::int32_t checkpoint_every = 10;
  std::int32_t mh_steps = 8;
  bool compute_metrics = true;

  void validate() const;
};

// Per-occurrence exclusion bookkeeping: `skipped` counts iterations the token
// was not processed, `unchanged` counts consecutive processed draws that kept
// the topic. Both reset to zero when a draw changes the topic.
struct TokenMeta {
  std::uint16_t skipped = 0;
  std::uint16_t unchanged = 0;
  bool changed = false;
};

bool exclusion_active(const TrainConfig& config, std::int32_t iteration);

// min(1, 2^(skipped - unchanged)), clamped below at 2^-20 so no token is
// starved forever.
double sample_probability(const TokenMeta& meta);

// Draws the inclusion test; on a skip, increments `skipped`.
bool should_sample(TokenMeta& meta, Rng& rng);

// Bookkeeping after a processed draw.
void record_draw(TokenMeta& meta, bool changed);

struct IterationStats {
  std::int32_t iteration = 0;
  double step_seconds[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  std::int64_t tokens_sampled = 0;
  std::int64_t tokens_skipped = 0;
  std::int64_t topics_changed = 0;
  double llh_total = 0.0;
  double llh_word = 0.0;
  double llh_doc = 0.0;
  double perplexity = 0.0;
  // Synchronization volume in count cells, per vertex side. In delta mode
  // this is the number of aggregated non-zero per-vertex topic deltas.
  std::int64_t transfer_cells_word = 0;
  std::int64_t transfer_cells_doc = 0;

  std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Initialization: assigns topics to every occurrence and aggregates counts.

ModelState init_random(TokenGraph& graph, std::int32_t topics, std::uint64_t seed);

// Per word, draws a topic subset of ceil(degree * K) and assigns that word's
// occurrences uniformly within it. supports_out, when non-null, receives the
// sorted subset per word (used by the beta-boost option).
ModelState init_sparse_word(TokenGraph& graph, std::int32_t topics, double degree,
                            std::uint64_t seed,
                            std::vector<std::vector<std::int32_t>>* supports_out = nullptr);

ModelState init_sparse_doc(TokenGraph& graph, std::int32_t topics, double degree,
                           std::uint64_t seed);

// Applies a sorted (topic, +/-count) delta to a sparse count vector; throws
// if any resulting count would be negative.
SparseCounts apply_delta(const SparseCounts& counts,
                         std::span<const std::pair<TopicId, Count>> sorted_deltas);

// ---------------------------------------------------------------------------

class Trainer {
 public:
  // Fresh run: initializes topics per the config and aggregates the state.
  Trainer(TokenGraph graph, const TrainConfig& config);

  // Resume: the graph's topics are already populated; `state` must validate
  // against them.
  Trainer(TokenGraph graph, const TrainConfig& config, ModelState state,
          MetricHistory history);

  // One pass of the five-step workflow: freeze terms, ship slave copies,
  // sample all partitions, merge deltas into the masters, re-aggregate the
  // topic totals. Metrics fields are filled by train(); callers of
  // run_iteration() get the structural stats only.
  IterationStats run_iteration();

  // Runs until max_iterations or the perplexity target. on_iteration fires
  // after metrics are attached; on_checkpoint fires every checkpoint_every
  // iterations and after the final one.
  using IterationCallback = std::function<void(const IterationStats&)>;
  using CheckpointCallback = std::function<void(const Trainer&, std::int32_t)>;
  void train(const IterationCallback& on_iteration = nullptr,
             const CheckpointCallback& on_checkpoint = nullptr);

  const ModelState& state() const { return state_; }
  const TokenGraph& graph() const { return graph_; }
  TokenGraph& mutable_graph() { return graph_; }
  const PartitionAssignment& assignment() const { return assignment_; }
  const MetricHistory& history() const { return history_; }
  const TrainConfig& config() const { return config_; }
  const std::vector<IterationStats>& stats_log() const { return stats_log_; }

 private:
  struct PartitionPlan {
    std::vector<std::uint32_t> edge_ids;  // word-major
    std::vector<std::pair<std::size_t, std::size_t>> word_ranges;
    std::vector<DocId> docs;                 // touched docs
    std::vector<std::int32_t> doc_local;     // doc id -> local index, -1 if absent
    std::vector<std::vector<std::int64_t>> doc_token_offsets;  // per local doc
  };

  struct TokenChange {
    WordId word;
    DocId doc;
    TopicId prev;
    TopicId next;
  };

  struct WorkerResult {
    std::vector<TokenChange> changes;
    std::int64_t sampled = 0;
    std::int64_t skipped = 0;
  };

  struct PartitionCounts;  // per-iteration slave copies

  void build_plans();
  void init_state();
  void sweep_partition(std::int32_t partition, const IterationTerms& terms,
                       const AliasTable& smooth_table, PartitionCounts& counts,
                       std::int32_t worker, WorkerResult& result,
                       std::atomic<std::size_t>& next_word, std::int32_t iteration);
  void merge_full(IterationStats& stats);
  void merge_delta(const std::vector<WorkerResult>& results, IterationStats& stats);

  TokenGraph graph_;
  TrainConfig config_;
  ModelState state_;
  PartitionAssignment assignment_;
  MetricHistory history_;
  std::vector<IterationStats> stats_log_;
  std::vector<TokenMeta> meta_;
  std::vector<PartitionPlan> plans_;
  std::vector<std::vector<std::int32_t>> word_init_supports_;  // beta-boost source
};

// Runs `iters` iterations per kernel on identical initial states and reports
// the step-3 sampling time of each iteration.
struct BenchRow {
  KernelKind kernel;
  std::int32_t iteration;
  double sampling_seconds;
};

std::vector<BenchRow> run_bench(const Corpus& corpus, TrainConfig base,
                                std::span<const KernelKind> kernels, std::int32_t iterations);

}  // namespace zenlda
