#include "zenlda/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "zenlda/engine.hpp"
#include "zenlda/log.hpp"
#include "zenlda/model_io.hpp"

namespace zenlda {

namespace {

struct CommonFlags {
  std::string input;
  std::string output_dir = ".";
  TrainConfig config;
  std::string kernel = "zen";
  std::string partitioner = "random";
  std::string sparse_init = "none";
  std::int32_t exclude_start = -1;
  double target_perplexity = 0.0;
};

void add_train_flags(CLI::App* cmd, CommonFlags& flags, bool require_topics) {
  cmd->add_option("--input", flags.input, "corpus file (libsvm lines; .gz accepted)")
      ->required();
  auto* topics = cmd->add_option("--topics", flags.config.hyper.topics, "topic count K");
  if (require_topics) topics->required();
  cmd->add_option("--alpha", flags.config.hyper.alpha, "document-topic prior");
  cmd->add_option("--beta", flags.config.hyper.beta, "word prior");
  cmd->add_option("--alpha-as", flags.config.hyper.alpha_as,
                  "asymmetric prior concentration");
  cmd->add_option("--kernel", flags.kernel, "zen|zen-hybrid|sparse|light|standard");
  cmd->add_option("--partitioner", flags.partitioner, "random|word|doc|2d|dbh+");
  cmd->add_option("--parts", flags.config.parts, "partition count");
  cmd->add_option("--dbh-threshold", flags.config.dbh_threshold,
                  "dbh+ low-degree threshold (experimental; 0 = plain dbh)");
  cmd->add_option("--workers", flags.config.workers, "worker threads per partition");
  cmd->add_option("--iters", flags.config.max_iterations, "training iterations");
  cmd->add_option("--target-perplexity", flags.target_perplexity,
                  "stop once perplexity reaches this value");
  cmd->add_option("--sparse-init", flags.sparse_init, "none|word|doc");
  cmd->add_option("--sparse-deg", flags.config.sparse_degree,
                  "sparse initialization degree in (0,1]");
  cmd->add_option("--exclude-start", flags.exclude_start,
                  "enable token exclusion from this iteration");
  cmd->add_flag("--delta-agg", flags.config.delta_aggregation,
                "synchronize only changed-token deltas");
  cmd->add_option("--beta-boost", flags.config.beta_boost,
                  "beta multiplier boost outside the sparse-init support");
  cmd->add_option("--seed", flags.config.seed, "rng seed");
  cmd->add_option("--checkpoint-every", flags.config.checkpoint_every,
                  "checkpoint cadence in iterations");
  cmd->add_option("--output-dir", flags.output_dir, "directory for metrics and checkpoints");
}

void finish_config(CommonFlags& flags) {
  flags.config.kernel = parse_kernel(flags.kernel);
  flags.config.partitioner = parse_partition_strategy(flags.partitioner);
  flags.config.sparse_init = parse_sparse_init(flags.sparse_init);
  if (flags.exclude_start >= 0) flags.config.exclusion_start = flags.exclude_start;
  if (flags.target_perplexity > 0.0) flags.config.target_perplexity = flags.target_perplexity;
  flags.config.validate();
}

std::string checkpoint_path(const std::string& dir, std::int32_t iteration) {
  std::ostringstream name;
  name << dir << "/checkpoint-iter" << iteration << ".txt";
  return name.str();
}

int cmd_train(CommonFlags& flags, const std::string& resume_path) {
  finish_config(flags);
  const Corpus corpus = load_corpus(flags.input);
  std::filesystem::create_directories(flags.output_dir);

  std::unique_ptr<Trainer> trainer;
  if (resume_path.empty()) {
    trainer = std::make_unique<Trainer>(build_graph(corpus), flags.config);
  } else {
    LoadedCheckpoint cp = load_checkpoint(resume_path);
    if (flags.config.hyper.topics == 0) flags.config.hyper.topics = cp.header.topics;
    if (flags.config.hyper.topics != cp.header.topics) {
      throw ConfigError("checkpoint has K=" + std::to_string(cp.header.topics) +
                        " but --topics is " + std::to_string(flags.config.hyper.topics));
    }
    TokenGraph graph = build_graph(corpus);
    ModelState state = restore_state(cp, graph, flags.config.seed);
    trainer = std::make_unique<Trainer>(std::move(graph), flags.config, std::move(state),
                                        std::move(cp.history));
    log::info("resumed from %s at iteration %d", resume_path.c_str(), cp.header.iteration);
  }

  std::ofstream metrics(flags.output_dir + "/metrics.jsonl",
                        resume_path.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw ParseError("cannot open metrics file in " + flags.output_dir);

  trainer->train(
      [&](const IterationStats& stats) {
        const std::string line = stats.to_json();
        metrics << line << '\n';
        metrics.flush();
        std::cout << line << '\n';
      },
      [&](const Trainer& t, std::int32_t iteration) {
        save_checkpoint(t.state(), t.graph(), t.history(), t.config().hyper, t.config().seed,
                        checkpoint_path(flags.output_dir, iteration));
      });

  save_checkpoint(trainer->state(), trainer->graph(), trainer->history(),
                  trainer->config().hyper, trainer->config().seed,
                  flags.output_dir + "/model-final.txt");
  log::info("final model written to %s/model-final.txt", flags.output_dir.c_str());
  return 0;
}

int cmd_partition_stats(const std::string& input, const std::string& strategies,
                        std::int32_t parts, std::int64_t threshold, std::uint64_t seed) {
  const Corpus corpus = load_corpus(input);
  const TokenGraph graph = build_graph(corpus);
  std::vector<std::string> names;
  std::stringstream ss(strategies);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(item);
  }
  if (names.empty()) names = {"random", "word", "doc", "2d", "dbh+"};
  std::printf("strategy\tp\tthreshold\tedgeBalance\treplicationFactor\tmaxReplication\n");
  for (const std::string& name : names) {
    const PartitionStrategy strategy = parse_partition_strategy(name);
    const PartitionAssignment assignment =
        assign_edges(graph, strategy, parts, threshold, seed);
    const PartitionMetrics m = partition_metrics(assignment, graph);
    std::printf("%s\t%d\t%lld\t%.6f\t%.6f\t%d\n", name.c_str(), parts,
                static_cast<long long>(threshold), m.edge_balance, m.replication_factor,
                m.max_replication);
  }
  return 0;
}

int cmd_infer(const std::string& model_path, const std::string& input,
              const std::string& mode_name, std::int32_t iterations, std::uint64_t seed) {
  const LoadedCheckpoint cp = load_checkpoint(model_path);
  // Rebuild counts directly from the stored word rows; inference does not
  // need doc counts or edge topics beyond the totals.
  ModelState state;
  state.topics = cp.header.topics;
  state.iteration = cp.header.iteration;
  state.word_counts = cp.word_counts;
  state.doc_counts.assign(static_cast<std::size_t>(cp.header.docs), SparseCounts{});
  state.topic_totals.assign(static_cast<std::size_t>(cp.header.topics), 0);
  for (const SparseCounts& wc : state.word_counts) {
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      state.topic_totals[static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)])] +=
          wc.values[static_cast<std::size_t>(i)];
    }
  }
  const InferMode mode = parse_infer_mode(mode_name);

  std::istream* in = &std::cin;
  std::ifstream file;
  if (input != "-") {
    file.open(input);
    if (!file) throw ParseError("cannot open input: " + input);
    in = &file;
  }
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(*in, line)) {
    ++line_no;
    std::string stripped = line;
    if (!stripped.empty() && stripped.back() == '\r') stripped.pop_back();
    bool blank = true;
    for (char c : stripped) {
      if (c != ' ' && c != '\t') blank = false;
    }
    if (blank) continue;
    const Corpus one = parse_libsvm(stripped);
    const std::vector<double> theta =
        infer_document(state, cp.header.hyper, one.docs[0].entries, iterations, mode,
                       seed + static_cast<std::uint64_t>(line_no));
    for (std::size_t k = 0; k < theta.size(); ++k) {
      std::printf("%s%.6g", k == 0 ? "" : "\t", theta[k]);
    }
    std::printf("\n");
  }
  return 0;
}

int cmd_dedup(const std::string& model_path, const std::string& corpus_path, double threshold,
              const std::string& out_path) {
  const LoadedCheckpoint cp = load_checkpoint(model_path);
  const Corpus corpus = load_corpus(corpus_path);
  TokenGraph graph = build_graph(corpus);
  ModelState state = restore_state(cp, graph, cp.header.seed);
  const DedupReport report = dedup_topics(state, graph, cp.header.hyper, threshold);
  for (const auto& group : report.groups) {
    std::printf("merged");
    for (TopicId t : group) std::printf(" %d", t);
    std::printf("\n");
  }
  std::printf("topics_removed\t%d\n", report.topics_removed);
  save_checkpoint(state, graph, cp.history, cp.header.hyper, cp.header.seed, out_path);
  return 0;
}

int cmd_bench(CommonFlags& flags, const std::string& kernel_list) {
  finish_config(flags);
  const Corpus corpus = load_corpus(flags.input);
  std::vector<KernelKind> kernels;
  std::stringstream ss(kernel_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kernels.push_back(parse_kernel(item));
  }
  if (kernels.empty()) throw ConfigError("--kernels must name at least one kernel");
  const std::vector<BenchRow> rows =
      run_bench(corpus, flags.config, kernels, flags.config.max_iterations);
  std::printf("kernel\titer\tsampling_seconds\n");
  for (const BenchRow& row : rows) {
    std::printf("%s\t%d\t%.6f\n", kernel_name(row.kernel).c_str(), row.iteration,
                row.sampling_seconds);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"partition-parallel collapsed Gibbs sampling LDA trainer"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string resume_path;
  auto* train = app.add_subcommand("train", "train a topic model");
  add_train_flags(train, train_flags, false);
  train->add_option("--resume", resume_path, "checkpoint to resume from");

  std::string ps_input, ps_strategies;
  std::int32_t ps_parts = 4;
  std::int64_t ps_threshold = 0;
  std::uint64_t ps_seed = 0;
  auto* pstats = app.add_subcommand("partition-stats", "report partitioning metrics as TSV");
  pstats->add_option("--input", ps_input, "corpus file")->required();
  pstats->add_option("--partitioner", ps_strategies,
                     "comma-separated strategies (default: all)");
  pstats->add_option("--parts", ps_parts, "partition count");
  pstats->add_option("--dbh-threshold", ps_threshold, "dbh+ threshold");
  pstats->add_option("--seed", ps_seed, "rng seed");

  std::string infer_model, infer_input = "-", infer_mode = "gibbs";
  std::int32_t infer_iters = 20;
  std::uint64_t infer_seed = 0;
  auto* infer = app.add_subcommand("infer", "infer topic proportions for documents");
  infer->add_option("--model", infer_model, "trained checkpoint")->required();
  infer->add_option("--input", infer_input, "documents, one per line ('-' for stdin)");
  infer->add_option("--mode", infer_mode, "gibbs|rtlda");
  infer->add_option("--infer-iters", infer_iters, "sweeps per document");
  infer->add_option("--seed", infer_seed, "rng seed");

  std::string dedup_model, dedup_corpus, dedup_out = "model-dedup.txt";
  double dedup_threshold = 0.1;
  auto* dedup = app.add_subcommand("dedup", "merge near-duplicate topics");
  dedup->add_option("--model", dedup_model, "trained checkpoint")->required();
  dedup->add_option("--input", dedup_corpus, "the corpus the model was trained on")->required();
  dedup->add_option("--l1-threshold", dedup_threshold, "merge distance threshold");
  dedup->add_option("--output", dedup_out, "merged checkpoint path");

  CommonFlags bench_flags;
  std::string bench_kernels = "zen,sparse";
  auto* bench = app.add_subcommand("bench", "per-iteration sampling time per kernel");
  add_train_flags(bench, bench_flags, false);
  bench->add_option("--kernels", bench_kernels, "comma-separated kernel list");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;  // --help
    }
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  }

  try {
    if (train->parsed()) {
      if (train_flags.config.hyper.topics == 0 && resume_path.empty()) {
        std::fprintf(stderr, "usage error: --topics is required unless resuming\n");
        return 1;
      }
      return cmd_train(train_flags, resume_path);
    }
    if (pstats->parsed()) {
      return cmd_partition_stats(ps_input, ps_strategies, ps_parts, ps_threshold, ps_seed);
    }
    if (infer->parsed()) {
      return cmd_infer(infer_model, infer_input, infer_mode, infer_iters, infer_seed);
    }
    if (dedup->parsed()) {
      return cmd_dedup(dedup_model, dedup_corpus, dedup_threshold, dedup_out);
    }
    if (bench->parsed()) {
      if (bench_flags.config.hyper.topics == 0) {
        std::fprintf(stderr, "usage error: --topics is required\n");
        return 1;
      }
      return cmd_bench(bench_flags, bench_kernels);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace zenlda
