#include "zenlda/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "json.hpp"
#include "zenlda/log.hpp"

namespace zenlda {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kInitSalt = 0x494e4954ULL;
constexpr std::uint64_t kWordInitSalt = 0x57494e49ULL;
constexpr std::uint64_t kDocInitSalt = 0x44494e49ULL;
constexpr std::uint64_t kDocOccSalt = 0x444f4343ULL;

// Floyd's subset sampling: m distinct values from [0, n).
std::vector<std::int32_t> sample_subset(std::int32_t m, std::int32_t n, Rng& rng) {
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(m));
  for (std::int32_t j = n - m; j < n; ++j) {
    const std::int32_t t = rng.below_i32(j + 1);
    if (std::find(out.begin(), out.end(), t) != out.end()) {
      out.push_back(j);
    } else {
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Dense counts plus a sorted support list, kept in step under mutation.
struct VertexScratch {
  DenseCounts dense;
  std::vector<std::int32_t> support;
  std::vector<Count> packed;  // values parallel to support; valid until mutated

  void init(std::int32_t topics) { dense.assign(static_cast<std::size_t>(topics), 0); }

  void load(const SparseCounts& sc) {
    support.assign(sc.indices.begin(), sc.indices.end());
    packed.assign(sc.values.begin(), sc.values.end());
    for (std::size_t i = 0; i < support.size(); ++i) {
      dense[static_cast<std::size_t>(support[i])] = packed[i];
    }
  }

  void clear() {
    for (std::int32_t k : support) dense[static_cast<std::size_t>(k)] = 0;
    support.clear();
    packed.clear();
  }
};

void counts_add(DenseCounts& dense, std::vector<std::int32_t>& support, TopicId k, Count delta) {
  Count& cell = dense[static_cast<std::size_t>(k)];
  const Count before = cell;
  cell += delta;
  if (cell < 0) {
    throw InvariantError("count driven negative during sweep (topic " + std::to_string(k) + ")");
  }
  if (before == 0 && cell > 0) {
    support.insert(std::lower_bound(support.begin(), support.end(), k), k);
  } else if (before > 0 && cell == 0) {
    support.erase(std::lower_bound(support.begin(), support.end(), k));
  }
}

}  // namespace

SparseInit parse_sparse_init(const std::string& name) {
  if (name == "none") return SparseInit::kNone;
  if (name == "word") return SparseInit::kWord;
  if (name == "doc") return SparseInit::kDoc;
  throw ConfigError("unknown sparse-init mode: " + name + " (expected none|word|doc)");
}

void TrainConfig::validate() const {
  hyper.validate();
  if (parts < 1) throw ConfigError("parts must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (max_iterations < 0) throw ConfigError("iterations must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint-every must be >= 0");
  if (mh_steps < 1) throw ConfigError("mh steps must be >= 1");
  if (sparse_init != SparseInit::kNone && (sparse_degree <= 0.0 || sparse_degree > 1.0)) {
    throw ConfigError("sparse-deg must lie in (0, 1]");
  }
  if (exclusion_start && *exclusion_start < 1) {
    throw ConfigError("exclude-start must be >= 1");
  }
  if (exclusion_start && delta_aggregation) {
    throw ConfigError("token exclusion and delta aggregation are mutually exclusive");
  }
  if (beta_boost < 0.0) throw ConfigError("beta-boost must be >= 0");
  const bool fresh_kernel = kernel == KernelKind::kStandard || kernel == KernelKind::kSparse ||
                            kernel == KernelKind::kLight;
  if (fresh_kernel && workers > 1) {
    throw ConfigError("kernel '" + kernel_name(kernel) +
                      "' updates counts within the sweep and runs single-worker per partition");
  }
}

bool exclusion_active(const TrainConfig& config, std::int32_t iteration) {
  return config.exclusion_start && iteration >= *config.exclusion_start;
}

double sample_probability(const TokenMeta& meta) {
  const int exponent = static_cast<int>(meta.skipped) - static_cast<int>(meta.unchanged);
  if (exponent >= 0) return 1.0;
  return std::exp2(static_cast<double>(std::max(exponent, -20)));
}

bool should_sample(TokenMeta& meta, Rng& rng) {
  const double p = sample_probability(meta);
  if (p >= 1.0 || rng.uniform() < p) return true;
  if (meta.skipped < 0xffff) ++meta.skipped;
  return false;
}

void record_draw(TokenMeta& meta, bool changed) {
  if (changed) {
    meta.skipped = 0;
    meta.unchanged = 0;
    meta.changed = true;
  } else {
    if (meta.unchanged < 0xffff) ++meta.unchanged;
    meta.changed = false;
  }
}

std::string IterationStats::to_json() const {
  nlohmann::ordered_json j;
  j["iter"] = iteration;
  j["seconds_per_step"] = {step_seconds[0], step_seconds[1], step_seconds[2], step_seconds[3],
                           step_seconds[4]};
  j["tokens_sampled"] = tokens_sampled;
  j["tokens_skipped"] = tokens_skipped;
  j["topics_changed"] = topics_changed;
  j["llh_total"] = llh_total;
  j["llh_word"] = llh_word;
  j["llh_doc"] = llh_doc;
  j["perplexity"] = perplexity;
  return j.dump();
}

ModelState init_random(TokenGraph& graph, std::int32_t topics, std::uint64_t seed) {
  if (topics < 1) throw ConfigError("topic count must be >= 1");
  Rng rng = Rng::derive(seed, {kInitSalt});
  for (TopicId& t : graph.topics) t = rng.below_i32(topics);
  return state_from_graph(graph, topics);
}

ModelState init_sparse_word(TokenGraph& graph, std::int32_t topics, double degree,
                            std::uint64_t seed,
                            std::vector<std::vector<std::int32_t>>* supports_out) {
  if (topics < 1) throw ConfigError("topic count must be >= 1");
  if (degree <= 0.0 || degree > 1.0) throw ConfigError("sparse degree must lie in (0, 1]");
  const std::int32_t m = std::max<std::int32_t>(
      1, static_cast<std::int32_t>(std::ceil(degree * static_cast<double>(topics))));
  if (supports_out != nullptr) {
    supports_out->assign(static_cast<std::size_t>(graph.vocab_size), {});
  }
  for (const auto& [first, last] : graph.word_ranges) {
    const WordId word = graph.edges[first].word;
    Rng rng = Rng::derive(seed, {kWordInitSalt, static_cast<std::uint64_t>(word)});
    std::vector<std::int32_t> subset = sample_subset(m, topics, rng);
    for (std::size_t e = first; e < last; ++e) {
      for (TopicId& t : graph.edge_topics(graph.edges[e])) {
        t = subset[static_cast<std::size_t>(rng.below_i32(m))];
      }
    }
    if (supports_out != nullptr) {
      (*supports_out)[static_cast<std::size_t>(word)] = std::move(subset);
    }
  }
  return state_from_graph(graph, topics);
}

ModelState init_sparse_doc(TokenGraph& graph, std::int32_t topics, double degree,
                           std::uint64_t seed) {
  if (topics < 1) throw ConfigError("topic count must be >= 1");
  if (degree <= 0.0 || degree > 1.0) throw ConfigError("sparse degree must lie in (0, 1]");
  const std::int32_t m = std::max<std::int32_t>(
      1, static_cast<std::int32_t>(std::ceil(degree * static_cast<double>(topics))));
  std::vector<std::vector<std::int32_t>> subsets(static_cast<std::size_t>(graph.doc_count));
  for (DocId d = 0; d < graph.doc_count; ++d) {
    Rng rng = Rng::derive(seed, {kDocInitSalt, static_cast<std::uint64_t>(d)});
    subsets[static_cast<std::size_t>(d)] = sample_subset(m, topics, rng);
  }
  Rng occ_rng = Rng::derive(seed, {kDocOccSalt});
  for (const Edge& edge : graph.edges) {
    const auto& subset = subsets[static_cast<std::size_t>(edge.doc)];
    for (TopicId& t : graph.edge_topics(edge)) {
      t = subset[static_cast<std::size_t>(occ_rng.below_i32(m))];
    }
  }
  return state_from_graph(graph, topics);
}

SparseCounts apply_delta(const SparseCounts& counts,
                         std::span<const std::pair<TopicId, Count>> sorted_deltas) {
  SparseCounts out;
  out.length = counts.length;
  out.indices.reserve(counts.indices.size() + sorted_deltas.size());
  out.values.reserve(counts.values.size() + sorted_deltas.size());
  std::size_t ci = 0;
  std::size_t di = 0;
  while (ci < counts.indices.size() || di < sorted_deltas.size()) {
    std::int32_t idx;
    std::int64_t value = 0;
    if (di >= sorted_deltas.size() ||
        (ci < counts.indices.size() && counts.indices[ci] < sorted_deltas[di].first)) {
      idx = counts.indices[ci];
      value = counts.values[ci];
      ++ci;
    } else if (ci >= counts.indices.size() || sorted_deltas[di].first < counts.indices[ci]) {
      idx = sorted_deltas[di].first;
      value = sorted_deltas[di].second;
      ++di;
    } else {
      idx = counts.indices[ci];
      value = static_cast<std::int64_t>(counts.values[ci]) + sorted_deltas[di].second;
      ++ci;
      ++di;
    }
    if (value < 0) {
      throw InvariantError("merge produced negative count at topic " + std::to_string(idx));
    }
    if (value > 0) {
      out.indices.push_back(idx);
      out.values.push_back(static_cast<Count>(value));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Trainer::PartitionCounts {
  std::vector<DenseCounts> doc_dense;
  std::vector<std::vector<std::int32_t>> doc_support;
  std::vector<std::int64_t> topic_totals;
  std::int64_t prior_total = 0;
  SmoothingCache smooth_cache;
  std::vector<HybridDocTree> doc_trees;  // zen-hybrid only, read-only in the sweep
};

Trainer::Trainer(TokenGraph graph, const TrainConfig& config)
    : graph_(std::move(graph)), config_(config) {
  config_.validate();
  init_state();
  assignment_ = assign_edges(graph_, config_.partitioner, config_.parts, config_.dbh_threshold,
                             config_.seed);
  build_plans();
  meta_.assign(graph_.topics.size(), TokenMeta{});
}

Trainer::Trainer(TokenGraph graph, const TrainConfig& config, ModelState state,
                 MetricHistory history)
    : graph_(std::move(graph)), config_(config), state_(std::move(state)),
      history_(std::move(history)) {
  config_.validate();
  if (state_.topics != config_.hyper.topics) {
    throw ConfigError("checkpoint topic count " + std::to_string(state_.topics) +
                      " does not match configured K " + std::to_string(config_.hyper.topics));
  }
  validate_state(state_, graph_);
  assignment_ = assign_edges(graph_, config_.partitioner, config_.parts, config_.dbh_threshold,
                             config_.seed);
  build_plans();
  meta_.assign(graph_.topics.size(), TokenMeta{});
}

void Trainer::init_state() {
  switch (config_.sparse_init) {
    case SparseInit::kNone:
      state_ = init_random(graph_, config_.hyper.topics, config_.seed);
      break;
    case SparseInit::kWord:
      state_ = init_sparse_word(graph_, config_.hyper.topics, config_.sparse_degree,
                                config_.seed,
                                config_.beta_boost > 0.0 ? &word_init_supports_ : nullptr);
      break;
    case SparseInit::kDoc:
      state_ = init_sparse_doc(graph_, config_.hyper.topics, config_.sparse_degree,
                               config_.seed);
      break;
  }
  if (config_.beta_boost > 0.0 && config_.sparse_init != SparseInit::kWord) {
    log::warn("beta-boost has no effect without word-side sparse initialization");
  }
}

void Trainer::build_plans() {
  plans_.assign(static_cast<std::size_t>(config_.parts), {});
  for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
    plans_[assignment_.edge_partition[e]].edge_ids.push_back(static_cast<std::uint32_t>(e));
  }
  for (PartitionPlan& plan : plans_) {
    plan.doc_local.assign(static_cast<std::size_t>(graph_.doc_count), -1);
    WordId current_word = -1;
    for (std::size_t i = 0; i < plan.edge_ids.size(); ++i) {
      const Edge& edge = graph_.edges[plan.edge_ids[i]];
      if (edge.word != current_word) {
        if (current_word >= 0) plan.word_ranges.back().second = i;
        plan.word_ranges.push_back({i, i});
        current_word = edge.word;
      }
      std::int32_t& local = plan.doc_local[static_cast<std::size_t>(edge.doc)];
      if (local < 0) {
        local = static_cast<std::int32_t>(plan.docs.size());
        plan.docs.push_back(edge.doc);
        plan.doc_token_offsets.push_back({});
      }
      auto& offsets = plan.doc_token_offsets[static_cast<std::size_t>(local)];
      for (Count occ = 0; occ < edge.count; ++occ) {
        offsets.push_back(edge.topic_begin + occ);
      }
    }
    if (current_word >= 0) plan.word_ranges.back().second = plan.edge_ids.size();
  }
}

void Trainer::sweep_partition(std::int32_t partition, const IterationTerms& terms,
                              const AliasTable& smooth_table, PartitionCounts& counts,
                              std::int32_t worker, WorkerResult& result,
                              std::atomic<std::size_t>& next_word, std::int32_t iteration) {
  const PartitionPlan& plan = plans_[static_cast<std::size_t>(partition)];
  Rng rng = Rng::for_worker(config_.seed, iteration, partition, worker);
  const bool excl = exclusion_active(config_, iteration);
  const KernelKind kernel = config_.kernel;
  const std::int32_t k_count = config_.hyper.topics;

  VertexScratch word_scratch;
  word_scratch.init(k_count);
  std::vector<double> prob_scratch(static_cast<std::size_t>(k_count));
  ZenPairCdf zen_pair;
  HybridWordCdf hybrid_pair;
  ZenWordTables zen_word;
  AliasTable::Workspace alias_ws;
  std::vector<double> word_weight_scratch;

  while (true) {
    const std::size_t g = next_word.fetch_add(1);
    if (g >= plan.word_ranges.size()) break;
    const auto [first, last] = plan.word_ranges[g];
    const WordId word = graph_.edges[plan.edge_ids[first]].word;
    word_scratch.load(state_.word_counts[static_cast<std::size_t>(word)]);

    LightWordProposal light_word;
    if (kernel == KernelKind::kZen || kernel == KernelKind::kZenHybrid) {
      zen_build_word_table_into(zen_word, alias_ws, word_weight_scratch, word_scratch.support,
                                word_scratch.packed, terms);
    } else if (kernel == KernelKind::kLight) {
      light_word = light_build_word_proposal(word_scratch.dense, terms);
    }
    const std::vector<std::int32_t>* boost =
        (config_.beta_boost > 0.0 && !word_init_supports_.empty())
            ? &word_init_supports_[static_cast<std::size_t>(word)]
            : nullptr;

    for (std::size_t ei = first; ei < last; ++ei) {
      const Edge& edge = graph_.edges[plan.edge_ids[ei]];
      const std::int32_t ld = plan.doc_local[static_cast<std::size_t>(edge.doc)];
      const std::size_t ldi = static_cast<std::size_t>(ld);
      auto topics = graph_.edge_topics(edge);

      // Pair-level tables are built lazily so fully-excluded pairs cost nothing.
      bool pair_built = false;
      HybridMode mode = HybridMode::kDocSide;

      for (Count occ = 0; occ < edge.count; ++occ) {
        const TopicId z_prev = topics[static_cast<std::size_t>(occ)];
        TokenMeta* meta = nullptr;
        if (excl) {
          meta = &meta_[static_cast<std::size_t>(edge.topic_begin + occ)];
          if (!should_sample(*meta, rng)) {
            ++result.skipped;
            continue;
          }
        }
        ++result.sampled;

        TopicId z_new = z_prev;
        switch (kernel) {
          case KernelKind::kZen:
          case KernelKind::kZenHybrid: {
            const TopicId exclude_prev = edge.count == 1 ? z_prev : -1;
            if (!pair_built) {
              pair_built = true;
              if (kernel == KernelKind::kZenHybrid) {
                mode = hybrid_select(
                    static_cast<std::int32_t>(counts.doc_support[ldi].size()),
                    static_cast<std::int32_t>(word_scratch.support.size()));
              }
              if (kernel == KernelKind::kZen || mode == HybridMode::kDocSide) {
                zen_build_doc_cdf_into(zen_pair, counts.doc_support[ldi],
                                       counts.doc_dense[ldi], word_scratch.dense, terms,
                                       exclude_prev, boost, config_.beta_boost);
              } else {
                hybrid_pair = hybrid_build_word_cdf(word_scratch.support, word_scratch.packed,
                                                    counts.doc_dense[ldi], terms, exclude_prev);
              }
            }
            ZenTokenInfo info;
            info.prev = z_prev;
            info.word_count_prev = word_scratch.dense[static_cast<std::size_t>(z_prev)];
            info.doc_count_prev = counts.doc_dense[ldi][static_cast<std::size_t>(z_prev)];
            if (kernel == KernelKind::kZen || mode == HybridMode::kDocSide) {
              z_new = zen_sample_token(smooth_table, terms.smooth_mass, zen_word, zen_pair,
                                       info, true, rng);
            } else {
              z_new = hybrid_word_side_sample(smooth_table, terms.smooth_mass,
                                              counts.doc_trees[ldi], hybrid_pair, terms, info,
                                              true, rng);
            }
            break;
          }
          case KernelKind::kStandard:
          case KernelKind::kSparse:
          case KernelKind::kLight: {
            counts_add(word_scratch.dense, word_scratch.support, z_prev, -1);
            counts_add(counts.doc_dense[ldi], counts.doc_support[ldi], z_prev, -1);
            --counts.topic_totals[static_cast<std::size_t>(z_prev)];
            if (kernel == KernelKind::kSparse) {
              counts.smooth_cache.on_change(z_prev,
                                            counts.topic_totals[static_cast<std::size_t>(z_prev)]);
            }
            FreshView view;
            view.word_dense = word_scratch.dense;
            view.word_support = word_scratch.support;
            view.doc_dense = counts.doc_dense[ldi];
            view.doc_support = counts.doc_support[ldi];
            view.topic_totals = counts.topic_totals;
            view.prior_total = counts.prior_total;
            view.vocab = graph_.vocab_size;
            if (kernel == KernelKind::kStandard) {
              z_new = standard_fresh_sample(view, config_.hyper, prob_scratch, rng);
            } else if (kernel == KernelKind::kSparse) {
              z_new = sparse_lda_sample_token(view, counts.smooth_cache, config_.hyper, rng);
            } else {
              LightDocView doc_view{graph_.topics.data(), plan.doc_token_offsets[ldi]};
              z_new = light_lda_sample_token(light_word, doc_view, view, config_.hyper, z_prev,
                                             config_.mh_steps, rng);
            }
            counts_add(word_scratch.dense, word_scratch.support, z_new, 1);
            counts_add(counts.doc_dense[ldi], counts.doc_support[ldi], z_new, 1);
            ++counts.topic_totals[static_cast<std::size_t>(z_new)];
            if (kernel == KernelKind::kSparse) {
              counts.smooth_cache.on_change(z_new,
                                            counts.topic_totals[static_cast<std::size_t>(z_new)]);
            }
            break;
          }
        }

        const bool changed = z_new != z_prev;
        if (changed) {
          topics[static_cast<std::size_t>(occ)] = z_new;
          result.changes.push_back({edge.word, edge.doc, z_prev, z_new});
        }
        if (meta != nullptr) record_draw(*meta, changed);
      }
    }
    word_scratch.clear();
  }
}

IterationStats Trainer::run_iteration() {
  IterationStats stats;
  const std::int32_t iteration = state_.iteration + 1;
  stats.iteration = iteration;

  // Step 1: freeze topic totals and derive the shared per-iteration terms.
  auto t0 = Clock::now();
  const IterationTerms terms =
      precompute_terms(state_.topic_totals, graph_.vocab_size, config_.hyper);
  AliasTable smooth_table;
  if (config_.kernel == KernelKind::kZen || config_.kernel == KernelKind::kZenHybrid) {
    smooth_table = AliasTable::build(terms.smooth);
  }
  stats.step_seconds[0] = seconds_since(t0);

  // Step 2: ship each partition its slave copies of the counts it touches.
  t0 = Clock::now();
  const std::size_t parts = plans_.size();
  std::vector<PartitionCounts> counts(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    const PartitionPlan& plan = plans_[p];
    PartitionCounts& pc = counts[p];
    pc.doc_dense.resize(plan.docs.size());
    pc.doc_support.resize(plan.docs.size());
    for (std::size_t i = 0; i < plan.docs.size(); ++i) {
      const SparseCounts& dc = state_.doc_counts[static_cast<std::size_t>(plan.docs[i])];
      pc.doc_dense[i].assign(static_cast<std::size_t>(config_.hyper.topics), 0);
      pc.doc_support[i].assign(dc.indices.begin(), dc.indices.end());
      for (std::int32_t j = 0; j < dc.nnz(); ++j) {
        pc.doc_dense[i][static_cast<std::size_t>(dc.indices[static_cast<std::size_t>(j)])] =
            dc.values[static_cast<std::size_t>(j)];
      }
    }
    pc.topic_totals.assign(state_.topic_totals.begin(), state_.topic_totals.end());
    pc.prior_total = graph_.total_tokens() - 1;  // fresh kernels draw in the excluded state
    if (config_.kernel == KernelKind::kSparse) {
      pc.smooth_cache.init(pc.topic_totals, pc.prior_total, config_.hyper, graph_.vocab_size);
    }
    if (config_.kernel == KernelKind::kZenHybrid) {
      pc.doc_trees.resize(plan.docs.size());
      std::vector<Count> packed;
      for (std::size_t i = 0; i < plan.docs.size(); ++i) {
        packed.resize(pc.doc_support[i].size());
        for (std::size_t j = 0; j < pc.doc_support[i].size(); ++j) {
          packed[j] = pc.doc_dense[i][static_cast<std::size_t>(pc.doc_support[i][j])];
        }
        pc.doc_trees[i] = hybrid_build_doc_tree(pc.doc_support[i], packed, terms);
      }
    }
  }
  stats.step_seconds[1] = seconds_since(t0);

  // Step 3: all partitions sample in parallel against the frozen snapshot.
  t0 = Clock::now();
  const std::int32_t workers = config_.workers;
  std::vector<WorkerResult> results(parts * static_cast<std::size_t>(workers));
  std::vector<std::atomic<std::size_t>> cursors(parts);
  for (auto& c : cursors) c.store(0);
  {
    std::vector<std::thread> threads;
    threads.reserve(results.size());
    for (std::size_t p = 0; p < parts; ++p) {
      for (std::int32_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, p, w] {
          sweep_partition(static_cast<std::int32_t>(p), terms, smooth_table, counts[p], w,
                          results[p * static_cast<std::size_t>(workers) +
                                  static_cast<std::size_t>(w)],
                          cursors[p], iteration);
        });
      }
    }
    for (auto& t : threads) t.join();
  }
  for (const WorkerResult& r : results) {
    stats.tokens_sampled += r.sampled;
    stats.tokens_skipped += r.skipped;
    stats.topics_changed += static_cast<std::int64_t>(r.changes.size());
  }
  stats.step_seconds[2] = seconds_since(t0);

  // Step 4: masters merge the partition results.
  t0 = Clock::now();
  if (config_.delta_aggregation) {
    merge_delta(results, stats);
  } else {
    merge_full(stats);
  }
  stats.step_seconds[3] = seconds_since(t0);

  // Step 5: re-aggregate topic totals from the word side and check the
  // conservation invariants.
  t0 = Clock::now();
  std::fill(state_.topic_totals.begin(), state_.topic_totals.end(), 0);
  for (const SparseCounts& wc : state_.word_counts) {
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      state_.topic_totals[static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)])] +=
          wc.values[static_cast<std::size_t>(i)];
    }
  }
  state_.iteration = iteration;
  validate_state(state_, graph_);
  stats.step_seconds[4] = seconds_since(t0);
  return stats;
}

void Trainer::merge_full(IterationStats& stats) {
  // Every replica recounts its local edges and ships the whole slice; the
  // masters sum the slices.
  std::vector<SparseCounts> new_word(static_cast<std::size_t>(graph_.vocab_size));
  std::vector<SparseCounts> new_doc(static_cast<std::size_t>(graph_.doc_count));
  for (auto& c : new_word) c.length = config_.hyper.topics;
  for (auto& c : new_doc) c.length = config_.hyper.topics;

  DenseCounts scratch(static_cast<std::size_t>(config_.hyper.topics), 0);
  std::vector<std::pair<TopicId, Count>> slice;
  auto drain_scratch = [&](const std::vector<TopicId>& seen) {
    slice.clear();
    for (TopicId t : seen) {
      slice.push_back({t, scratch[static_cast<std::size_t>(t)]});
      scratch[static_cast<std::size_t>(t)] = 0;
    }
  };

  for (const PartitionPlan& plan : plans_) {
    for (const auto& [first, last] : plan.word_ranges) {
      const WordId word = graph_.edges[plan.edge_ids[first]].word;
      std::vector<TopicId> seen;
      for (std::size_t ei = first; ei < last; ++ei) {
        for (TopicId t : graph_.edge_topics(graph_.edges[plan.edge_ids[ei]])) {
          if (scratch[static_cast<std::size_t>(t)] == 0) seen.push_back(t);
          ++scratch[static_cast<std::size_t>(t)];
        }
      }
      std::sort(seen.begin(), seen.end());
      drain_scratch(seen);
      stats.transfer_cells_word += static_cast<std::int64_t>(slice.size());
      new_word[static_cast<std::size_t>(word)] =
          apply_delta(new_word[static_cast<std::size_t>(word)], slice);
    }
    for (std::size_t i = 0; i < plan.docs.size(); ++i) {
      std::vector<TopicId> seen;
      for (std::int64_t offset : plan.doc_token_offsets[i]) {
        const TopicId t = graph_.topics[static_cast<std::size_t>(offset)];
        if (scratch[static_cast<std::size_t>(t)] == 0) seen.push_back(t);
        ++scratch[static_cast<std::size_t>(t)];
      }
      std::sort(seen.begin(), seen.end());
      drain_scratch(seen);
      stats.transfer_cells_doc += static_cast<std::int64_t>(slice.size());
      new_doc[static_cast<std::size_t>(plan.docs[i])] =
          apply_delta(new_doc[static_cast<std::size_t>(plan.docs[i])], slice);
    }
  }
  state_.word_counts = std::move(new_word);
  state_.doc_counts = std::move(new_doc);
}

void Trainer::merge_delta(const std::vector<WorkerResult>& results, IterationStats& stats) {
  // Only changed tokens contribute; aggregate (old -1, new +1) per vertex.
  std::vector<TokenChange> changes;
  for (const WorkerResult& r : results) {
    changes.insert(changes.end(), r.changes.begin(), r.changes.end());
  }

  DenseCounts scratch(static_cast<std::size_t>(config_.hyper.topics), 0);
  std::vector<std::pair<TopicId, Count>> delta;
  auto aggregate = [&](auto begin, auto end, auto vertex_of) {
    std::vector<TopicId> seen;
    delta.clear();
    for (auto it = begin; it != end; ++it) {
      for (auto [t, d] : {std::pair<TopicId, Count>{it->prev, -1},
                          std::pair<TopicId, Count>{it->next, +1}}) {
        if (scratch[static_cast<std::size_t>(t)] == 0) seen.push_back(t);
        scratch[static_cast<std::size_t>(t)] += d;
      }
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (TopicId t : seen) {
      if (scratch[static_cast<std::size_t>(t)] != 0) {
        delta.push_back({t, scratch[static_cast<std::size_t>(t)]});
      }
      scratch[static_cast<std::size_t>(t)] = 0;
    }
    (void)vertex_of;
  };

  std::stable_sort(changes.begin(), changes.end(),
                   [](const TokenChange& a, const TokenChange& b) { return a.word < b.word; });
  for (std::size_t i = 0; i < changes.size();) {
    std::size_t j = i;
    while (j < changes.size() && changes[j].word == changes[i].word) ++j;
    aggregate(changes.begin() + static_cast<std::ptrdiff_t>(i),
              changes.begin() + static_cast<std::ptrdiff_t>(j),
              [](const TokenChange& c) { return c.word; });
    stats.transfer_cells_word += static_cast<std::int64_t>(delta.size());
    const std::size_t w = static_cast<std::size_t>(changes[i].word);
    state_.word_counts[w] = apply_delta(state_.word_counts[w], delta);
    i = j;
  }

  std::stable_sort(changes.begin(), changes.end(),
                   [](const TokenChange& a, const TokenChange& b) { return a.doc < b.doc; });
  for (std::size_t i = 0; i < changes.size();) {
    std::size_t j = i;
    while (j < changes.size() && changes[j].doc == changes[i].doc) ++j;
    aggregate(changes.begin() + static_cast<std::ptrdiff_t>(i),
              changes.begin() + static_cast<std::ptrdiff_t>(j),
              [](const TokenChange& c) { return c.doc; });
    stats.transfer_cells_doc += static_cast<std::int64_t>(delta.size());
    const std::size_t d = static_cast<std::size_t>(changes[i].doc);
    state_.doc_counts[d] = apply_delta(state_.doc_counts[d], delta);
    i = j;
  }
}

void Trainer::train(const IterationCallback& on_iteration,
                    const CheckpointCallback& on_checkpoint) {
  while (state_.iteration < config_.max_iterations) {
    IterationStats stats = run_iteration();
    if (config_.compute_metrics) {
      stats.llh_total = log_likelihood_total(state_, graph_, config_.hyper);
      const SplitLikelihood split = log_likelihood_split(state_, config_.hyper);
      stats.llh_word = split.word;
      stats.llh_doc = split.doc;
      stats.perplexity = perplexity(stats.llh_total, graph_.total_tokens());
      history_.push_back({stats.iteration, stats.llh_total, stats.llh_word, stats.llh_doc,
                          stats.perplexity});
    }
    stats_log_.push_back(stats);
    if (on_iteration) on_iteration(stats);
    if (on_checkpoint && config_.checkpoint_every > 0 &&
        stats.iteration % config_.checkpoint_every == 0) {
      on_checkpoint(*this, stats.iteration);
    }
    if (config_.compute_metrics &&
        check_termination(history_, config_.max_iterations, config_.target_perplexity)) {
      break;
    }
  }
}

std::vector<BenchRow> run_bench(const Corpus& corpus, TrainConfig base,
                                std::span<const KernelKind> kernels, std::int32_t iterations) {
  base.max_iterations = iterations;
  base.compute_metrics = false;
  std::vector<BenchRow> rows;
  for (KernelKind kind : kernels) {
    TrainConfig config = base;
    config.kernel = kind;
    if (kind == KernelKind::kStandard || kind == KernelKind::kSparse ||
        kind == KernelKind::kLight) {
      config.workers = 1;
    }
    Trainer trainer(build_graph(corpus), config);
    trainer.train([&](const IterationStats& stats) {
      rows.push_back({kind, stats.iteration, stats.step_seconds[2]});
    });
  }
  return rows;
}

}  // namespace zenlda
