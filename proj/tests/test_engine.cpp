#include <cmath>
#include <set>

#include "doctest.h"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "zenlda/engine.hpp"

using namespace zenlda;

namespace {

TrainConfig base_config(std::int32_t topics, std::uint64_t seed) {
  TrainConfig config;
  config.hyper.topics = topics;
  config.hyper.alpha = 0.1;
  config.hyper.beta = 0.01;
  config.hyper.alpha_as = 1.0;
  config.seed = seed;
  config.compute_metrics = false;
  return config;
}

}  // namespace

TEST_CASE("random initialization") {
  const Corpus corpus = testsupport::random_corpus(30, 20, 3, 10, 77);
  SUBCASE("one topic absorbs everything") {
    TokenGraph graph = build_graph(corpus);
    const ModelState state = init_random(graph, 1, 5);
    CHECK(state.topic_totals[0] == corpus.total_tokens);
    for (TopicId t : graph.topics) CHECK(t == 0);
  }
  SUBCASE("counts equal a recount and seeds reproduce") {
    TokenGraph a = build_graph(corpus);
    TokenGraph b = build_graph(corpus);
    const ModelState sa = init_random(a, 7, 5);
    const ModelState sb = init_random(b, 7, 5);
    CHECK(a.topics == b.topics);
    CHECK(states_equal(sa, sb));
    validate_state(sa, a);
    CHECK(states_equal(sa, state_from_graph(a, 7)));

    TokenGraph c = build_graph(corpus);
    init_random(c, 7, 6);
    CHECK(a.topics != c.topics);
  }
}

TEST_CASE("sparse initialization") {
  const Corpus corpus = testsupport::random_corpus(40, 30, 4, 14, 13);
  SUBCASE("word-side support size is capped") {
    TokenGraph graph = build_graph(corpus);
    std::vector<std::vector<std::int32_t>> supports;
    const ModelState state = init_sparse_word(graph, 50, 0.1, 3, &supports);
    validate_state(state, graph);
    for (WordId w = 0; w < graph.vocab_size; ++w) {
      const SparseCounts& wc = state.word_counts[static_cast<std::size_t>(w)];
      CHECK(wc.nnz() <= 5);
      // every assigned topic lies inside the word's drawn subset
      if (graph.word_degree[static_cast<std::size_t>(w)] > 0) {
        REQUIRE(supports[static_cast<std::size_t>(w)].size() == 5);
        for (std::int32_t i = 0; i < wc.nnz(); ++i) {
          CHECK(std::binary_search(supports[static_cast<std::size_t>(w)].begin(),
                                   supports[static_cast<std::size_t>(w)].end(),
                                   wc.indices[static_cast<std::size_t>(i)]));
        }
      }
    }
  }
  SUBCASE("degree one is a full support") {
    TokenGraph graph = build_graph(corpus);
    const ModelState state = init_sparse_word(graph, 6, 1.0, 3);
    validate_state(state, graph);
  }
  SUBCASE("doc-side mirrors word-side") {
    TokenGraph graph = build_graph(corpus);
    const ModelState state = init_sparse_doc(graph, 50, 0.1, 9);
    validate_state(state, graph);
    for (DocId d = 0; d < graph.doc_count; ++d) {
      CHECK(state.doc_counts[static_cast<std::size_t>(d)].nnz() <= 5);
    }
  }
  SUBCASE("invalid degree is rejected") {
    TokenGraph graph = build_graph(corpus);
    CHECK_THROWS_AS(init_sparse_word(graph, 10, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(init_sparse_word(graph, 10, 1.5, 1), ConfigError);
  }
}

TEST_CASE("token exclusion bookkeeping") {
  TokenMeta meta;
  meta.unchanged = 2;
  CHECK(sample_probability(meta) == doctest::Approx(0.25));
  meta.skipped = 2;
  CHECK(sample_probability(meta) == doctest::Approx(1.0));
  meta.skipped = 5;
  CHECK(sample_probability(meta) == doctest::Approx(1.0));
  meta.skipped = 0;
  meta.unchanged = 40;
  CHECK(sample_probability(meta) == doctest::Approx(std::exp2(-20.0)));

  // a skip bumps the skipped counter
  TokenMeta skip_meta;
  skip_meta.unchanged = 30;  // probability 2^-20
  Rng rng(4);
  int skips = 0;
  for (int i = 0; i < 50; ++i) {
    if (!should_sample(skip_meta, rng)) ++skips;
  }
  CHECK(skips > 0);
  CHECK(skip_meta.skipped >= static_cast<std::uint16_t>(skips));

  TokenMeta draw_meta;
  record_draw(draw_meta, false);
  CHECK(draw_meta.unchanged == 1);
  CHECK(!draw_meta.changed);
  record_draw(draw_meta, true);
  CHECK(draw_meta.unchanged == 0);
  CHECK(draw_meta.skipped == 0);
  CHECK(draw_meta.changed);

  TrainConfig config = base_config(2, 1);
  CHECK(!exclusion_active(config, 100));
  config.exclusion_start = 30;
  CHECK(!exclusion_active(config, 29));
  CHECK(exclusion_active(config, 30));
}

TEST_CASE("sorted delta application") {
  SparseCounts counts;
  counts.length = 6;
  counts.indices = {1, 4};
  counts.values = {3, 2};
  const std::vector<std::pair<TopicId, Count>> delta{{0, 2}, {1, -3}, {4, 1}};
  const SparseCounts merged = apply_delta(counts, delta);
  CHECK(merged.indices == std::vector<std::int32_t>{0, 4});
  CHECK(merged.values == std::vector<Count>{2, 3});

  const std::vector<std::pair<TopicId, Count>> negative{{4, -5}};
  CHECK_THROWS_AS(apply_delta(counts, negative), InvariantError);
}

TEST_CASE("config validation rejects bad combinations") {
  TrainConfig config = base_config(4, 1);
  config.exclusion_start = 10;
  config.delta_aggregation = true;
  CHECK_THROWS_AS(config.validate(), ConfigError);

  TrainConfig fresh = base_config(4, 1);
  fresh.kernel = KernelKind::kSparse;
  fresh.workers = 2;
  CHECK_THROWS_AS(fresh.validate(), ConfigError);

  TrainConfig zen_multi = base_config(4, 1);
  zen_multi.workers = 4;
  CHECK_NOTHROW(zen_multi.validate());
}

TEST_CASE("standard kernel is lockstep with the serial transcription") {
  const Corpus corpus = testsupport::random_corpus(25, 18, 3, 12, 404);
  TrainConfig config = base_config(4, 11);
  config.kernel = KernelKind::kStandard;
  config.max_iterations = 3;
  Trainer trainer(build_graph(corpus), config);

  testsupport::SerialStandardCgs oracle(trainer.graph(), config.hyper);
  for (std::int32_t iteration = 1; iteration <= 3; ++iteration) {
    trainer.run_iteration();
    oracle.sweep(config.seed, iteration);
    REQUIRE(trainer.graph().topics == oracle.topics());
  }
}

TEST_CASE("conservation invariants hold across kernels and partition counts") {
  const Corpus corpus = testsupport::random_corpus(60, 40, 4, 16, 31);
  for (KernelKind kernel : {KernelKind::kZen, KernelKind::kZenHybrid, KernelKind::kSparse,
                            KernelKind::kLight, KernelKind::kStandard}) {
    for (std::int32_t parts : {1, 4}) {
      TrainConfig config = base_config(6, 9);
      config.kernel = kernel;
      config.parts = parts;
      config.partitioner = PartitionStrategy::kDbhPlus;
      Trainer trainer(build_graph(corpus), config);
      for (int i = 0; i < 3; ++i) {
        const IterationStats stats = trainer.run_iteration();
        validate_state(trainer.state(), trainer.graph());
        CHECK(stats.tokens_sampled == corpus.total_tokens);
        CHECK(stats.tokens_skipped == 0);
      }
    }
  }
}

TEST_CASE("multi-worker zen runs keep the invariants") {
  const Corpus corpus = testsupport::random_corpus(50, 30, 4, 14, 99);
  TrainConfig config = base_config(5, 2);
  config.workers = 3;
  config.parts = 2;
  Trainer trainer(build_graph(corpus), config);
  for (int i = 0; i < 3; ++i) {
    const IterationStats stats = trainer.run_iteration();
    validate_state(trainer.state(), trainer.graph());
    CHECK(stats.tokens_sampled == corpus.total_tokens);
  }
}

TEST_CASE("more partitions than edges leaves some partitions empty") {
  const Corpus corpus = parse_libsvm(std::string("1 1:1 2:1\n1 3:1"));
  TrainConfig config = base_config(3, 5);
  config.parts = 8;
  Trainer trainer(build_graph(corpus), config);
  const IterationStats stats = trainer.run_iteration();
  CHECK(stats.tokens_sampled == 3);
  validate_state(trainer.state(), trainer.graph());
}

TEST_CASE("delta aggregation reproduces the full merge bit for bit") {
  const Corpus corpus = testsupport::random_corpus(45, 35, 4, 12, 123);
  TrainConfig full = base_config(5, 77);
  TrainConfig delta = full;
  delta.delta_aggregation = true;
  Trainer a(build_graph(corpus), full);
  Trainer b(build_graph(corpus), delta);
  for (int i = 0; i < 3; ++i) {
    const IterationStats sa = a.run_iteration();
    const IterationStats sb = b.run_iteration();
    REQUIRE(states_equal(a.state(), b.state()));
    REQUIRE(a.graph().topics == b.graph().topics);
    // delta volume is bounded by two cells per changed token per side
    CHECK(sb.transfer_cells_word <= 2 * sb.topics_changed);
    CHECK(sb.transfer_cells_doc <= 2 * sb.topics_changed);
    CHECK(sa.topics_changed == sb.topics_changed);
  }
}

TEST_CASE("no topic changes means empty deltas") {
  // K=1 forces every draw back to topic 0
  const Corpus corpus = testsupport::random_corpus(10, 8, 2, 6, 5);
  TrainConfig config = base_config(1, 3);
  config.delta_aggregation = true;
  Trainer trainer(build_graph(corpus), config);
  const IterationStats stats = trainer.run_iteration();
  CHECK(stats.topics_changed == 0);
  CHECK(stats.transfer_cells_word == 0);
  CHECK(stats.transfer_cells_doc == 0);
  validate_state(trainer.state(), trainer.graph());
}

TEST_CASE("single-partition single-worker runs are bit deterministic") {
  const Corpus corpus = testsupport::random_corpus(30, 22, 3, 10, 50);
  for (KernelKind kernel : {KernelKind::kZen, KernelKind::kLight}) {
    TrainConfig config = base_config(4, 8);
    config.kernel = kernel;
    config.max_iterations = 3;
    Trainer a(build_graph(corpus), config);
    Trainer b(build_graph(corpus), config);
    a.train();
    b.train();
    CHECK(a.graph().topics == b.graph().topics);
    CHECK(states_equal(a.state(), b.state()));
  }
}

TEST_CASE("zero iterations returns the initialized state with no history") {
  const Corpus corpus = testsupport::random_corpus(10, 10, 2, 5, 1);
  TrainConfig config = base_config(3, 4);
  config.max_iterations = 0;
  config.compute_metrics = true;
  Trainer trainer(build_graph(corpus), config);
  trainer.train();
  CHECK(trainer.history().empty());
  CHECK(trainer.state().iteration == 0);
  CHECK(states_equal(trainer.state(), state_from_graph(trainer.graph(), 3)));
}

TEST_CASE("token exclusion skips tokens and decays the change rate") {
  const Corpus corpus = testsupport::lda_corpus(150, 80, 4, 10, 25, 0.2, 0.1, 62);
  TrainConfig config = base_config(4, 15);
  config.exclusion_start = 4;
  config.max_iterations = 12;
  Trainer trainer(build_graph(corpus), config);
  std::vector<IterationStats> all;
  trainer.train([&](const IterationStats& s) { all.push_back(s); });
  REQUIRE(all.size() == 12);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(all[i].tokens_skipped == 0);
    CHECK(all[i].tokens_sampled == corpus.total_tokens);
  }
  std::int64_t skipped_later = 0;
  for (std::size_t i = 3; i < all.size(); ++i) {
    CHECK(all[i].tokens_sampled + all[i].tokens_skipped == corpus.total_tokens);
    skipped_later += all[i].tokens_skipped;
  }
  CHECK(skipped_later > 0);
  validate_state(trainer.state(), trainer.graph());
}

TEST_CASE("change rate trends down on a converging exclusion run") {
  const Corpus corpus = testsupport::lda_corpus(200, 100, 4, 15, 30, 0.1, 0.05, 77);
  TrainConfig config = base_config(4, 21);
  config.exclusion_start = 5;
  config.max_iterations = 30;
  Trainer trainer(build_graph(corpus), config);
  std::vector<double> change_rate;
  trainer.train([&](const IterationStats& s) {
    change_rate.push_back(static_cast<double>(s.topics_changed) /
                          static_cast<double>(corpus.total_tokens));
  });
  double first10 = 0.0, last10 = 0.0;
  for (int i = 0; i < 10; ++i) {
    first10 += change_rate[static_cast<std::size_t>(i)];
    last10 += change_rate[change_rate.size() - 10 + static_cast<std::size_t>(i)];
  }
  CHECK(last10 < first10);
}

TEST_CASE("beta boost with word-sparse initialization keeps invariants") {
  const Corpus corpus = testsupport::random_corpus(30, 25, 3, 10, 91);
  TrainConfig config = base_config(10, 6);
  config.sparse_init = SparseInit::kWord;
  config.sparse_degree = 0.3;
  config.beta_boost = 0.5;
  config.max_iterations = 3;
  Trainer trainer(build_graph(corpus), config);
  trainer.train();
  validate_state(trainer.state(), trainer.graph());
}

TEST_CASE("training on an lda corpus improves the log likelihood") {
  const Corpus corpus = testsupport::lda_corpus(120, 60, 4, 10, 20, 0.2, 0.1, 33);
  TrainConfig config = base_config(4, 10);
  config.max_iterations = 30;
  config.compute_metrics = true;
  Trainer trainer(build_graph(corpus), config);
  trainer.train();
  const MetricHistory& history = trainer.history();
  REQUIRE(history.size() == 30);
  CHECK(history.back().llh_total > history.front().llh_total);
  CHECK(history.back().perplexity < history.front().perplexity);
  // the stats record carries the documented fields
  const std::string json = trainer.stats_log().back().to_json();
  CHECK(json.find("\"iter\":") != std::string::npos);
  CHECK(json.find("\"seconds_per_step\":") != std::string::npos);
  CHECK(json.find("\"perplexity\":") != std::string::npos);
}

TEST_CASE("bench reports per-iteration sampling seconds") {
  const Corpus corpus = testsupport::random_corpus(40, 30, 4, 12, 71);
  TrainConfig config = base_config(8, 3);
  const std::vector<KernelKind> kernels{KernelKind::kZen, KernelKind::kSparse};
  const std::vector<BenchRow> rows = run_bench(corpus, config, kernels, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].kernel == KernelKind::kZen);
  CHECK(rows[0].iteration == 1);
  CHECK(rows[3].kernel == KernelKind::kSparse);
  for (const BenchRow& row : rows) CHECK(row.sampling_seconds >= 0.0);
}
