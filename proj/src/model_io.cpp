#include "zenlda/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "zenlda/engine.hpp"
#include "zenlda/log.hpp"
#include "zenlda/rng.hpp"

namespace zenlda {

namespace {

constexpr const char* kFormatName = "zenlda-checkpoint";
constexpr std::int32_t kFormatVersion = 1;

void write_history_record(std::ostream& out, const MetricRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iteration;
  j["llh_total"] = r.llh_total;
  j["llh_word"] = r.llh_word;
  j["llh_doc"] = r.llh_doc;
  j["perplexity"] = r.perplexity;
  out << j.dump() << '\n';
}

MetricRecord read_history_record(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  MetricRecord r;
  r.iteration = j.at("iter").get<std::int32_t>();
  r.llh_total = j.at("llh_total").get<double>();
  r.llh_word = j.at("llh_word").get<double>();
  r.llh_doc = j.at("llh_doc").get<double>();
  r.perplexity = j.at("perplexity").get<double>();
  return r;
}

}  // namespace

void save_checkpoint(const ModelState& state, const TokenGraph& graph,
                     const MetricHistory& history, const HyperParams& hyper, std::uint64_t seed,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open checkpoint for writing: " + path);

  nlohmann::ordered_json header;
  header["format"] = kFormatName;
  header["version"] = kFormatVersion;
  header["topics"] = state.topics;
  header["vocab"] = state.vocab();
  header["docs"] = state.docs();
  header["tokens"] = graph.total_tokens();
  header["alpha"] = hyper.alpha;
  header["beta"] = hyper.beta;
  header["alpha_as"] = hyper.alpha_as;
  header["iteration"] = state.iteration;
  header["seed"] = seed;
  out << header.dump() << '\n';

  out << "#words\n";
  for (WordId w = 0; w < state.vocab(); ++w) {
    const SparseCounts& wc = state.word_counts[static_cast<std::size_t>(w)];
    if (wc.nnz() == 0) continue;
    out << w;
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      out << '\t' << wc.indices[static_cast<std::size_t>(i)] << ':'
          << wc.values[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }

  out << "#edges\n";
  // run-length encoding of the flat topic array, wrapped for readability
  std::size_t i = 0;
  std::int32_t per_line = 0;
  while (i < graph.topics.size()) {
    std::size_t j = i;
    while (j < graph.topics.size() && graph.topics[j] == graph.topics[i]) ++j;
    out << graph.topics[i] << '*' << (j - i);
    i = j;
    if (++per_line == 64) {
      out << '\n';
      per_line = 0;
    } else if (i < graph.topics.size()) {
      out << ' ';
    }
  }
  if (per_line != 0) out << '\n';

  out << "#history\n";
  for (const MetricRecord& r : history) write_history_record(out, r);
  if (!out) throw ParseError("write failure on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint is empty: " + path);

  LoadedCheckpoint cp;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what());
  }
  if (header.value("format", "") != kFormatName) {
    throw ParseError("not a checkpoint file: " + path);
  }
  if (header.at("version").get<std::int32_t>() != kFormatVersion) {
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(header.at("version").get<std::int32_t>()));
  }
  cp.header.version = kFormatVersion;
  cp.header.topics = header.at("topics").get<std::int32_t>();
  cp.header.vocab = header.at("vocab").get<std::int32_t>();
  cp.header.docs = header.at("docs").get<std::int32_t>();
  cp.header.tokens = header.at("tokens").get<std::int64_t>();
  cp.header.hyper.topics = cp.header.topics;
  cp.header.hyper.alpha = header.at("alpha").get<double>();
  cp.header.hyper.beta = header.at("beta").get<double>();
  cp.header.hyper.alpha_as = header.at("alpha_as").get<double>();
  cp.header.iteration = header.at("iteration").get<std::int32_t>();
  cp.header.seed = header.at("seed").get<std::uint64_t>();

  cp.word_counts.assign(static_cast<std::size_t>(cp.header.vocab), {});
  for (auto& c : cp.word_counts) c.length = cp.header.topics;

  if (!std::getline(in, line) || line != "#words") {
    throw ParseError("checkpoint missing #words section");
  }
  bool saw_edges = false;
  while (std::getline(in, line)) {
    if (line == "#edges") {
      saw_edges = true;
      break;
    }
    if (line == "#history") break;
    std::istringstream row(line);
    std::string field;
    if (!std::getline(row, field, '\t')) throw ParseError("bad word row: " + line);
    const long word = std::strtol(field.c_str(), nullptr, 10);
    if (word < 0 || word >= cp.header.vocab) {
      throw ParseError("word id out of range in checkpoint: " + field);
    }
    SparseCounts& wc = cp.word_counts[static_cast<std::size_t>(word)];
    while (std::getline(row, field, '\t')) {
      const std::size_t colon = field.find(':');
      if (colon == std::string::npos) throw ParseError("bad topic:count pair: " + field);
      const long topic = std::strtol(field.substr(0, colon).c_str(), nullptr, 10);
      const long count = std::strtol(field.substr(colon + 1).c_str(), nullptr, 10);
      if (topic < 0 || topic >= cp.header.topics || count < 1) {
        throw ParseError("bad topic:count pair: " + field);
      }
      if (!wc.indices.empty() && wc.indices.back() >= topic) {
        throw ParseError("word row topics not strictly increasing");
      }
      wc.indices.push_back(static_cast<std::int32_t>(topic));
      wc.values.push_back(static_cast<Count>(count));
    }
  }
  if (!saw_edges) {
    throw ParseError("missing edge topics for resume: " + path);
  }

  cp.edge_topics.reserve(static_cast<std::size_t>(cp.header.tokens));
  while (std::getline(in, line)) {
    if (line == "#history") break;
    std::istringstream row(line);
    std::string entry;
    while (row >> entry) {
      const std::size_t star = entry.find('*');
      if (star == std::string::npos) throw ParseError("bad edge-topic run: " + entry);
      const long topic = std::strtol(entry.substr(0, star).c_str(), nullptr, 10);
      const long run = std::strtol(entry.substr(star + 1).c_str(), nullptr, 10);
      if (topic < 0 || topic >= cp.header.topics || run < 1) {
        throw ParseError("bad edge-topic run: " + entry);
      }
      cp.edge_topics.insert(cp.edge_topics.end(), static_cast<std::size_t>(run),
                            static_cast<TopicId>(topic));
    }
  }
  if (static_cast<std::int64_t>(cp.edge_topics.size()) != cp.header.tokens) {
    throw ParseError("checkpoint edge topics truncated: expected " +
                     std::to_string(cp.header.tokens) + " tokens, got " +
                     std::to_string(cp.edge_topics.size()));
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cp.history.push_back(read_history_record(line));
  }
  return cp;
}

ModelState restore_state(const LoadedCheckpoint& checkpoint, TokenGraph& graph,
                         std::uint64_t init_seed) {
  if (graph.vocab_size < checkpoint.header.vocab) {
    throw ConfigError("corpus vocabulary (" + std::to_string(graph.vocab_size) +
                      ") is smaller than the checkpoint's (" +
                      std::to_string(checkpoint.header.vocab) + ")");
  }
  if (graph.doc_count < checkpoint.header.docs) {
    throw ConfigError("corpus has fewer documents than the checkpoint");
  }
  if (graph.total_tokens() < checkpoint.header.tokens) {
    throw ConfigError("corpus has fewer tokens than the checkpoint");
  }

  // Checkpointed topics map onto the canonical edge order of the original
  // corpus prefix: tokens of documents beyond the checkpoint's doc count are
  // new and get random initialization.
  Rng rng = Rng::derive(init_seed, {0x52455355ULL});
  std::size_t cursor = 0;
  for (const Edge& edge : graph.edges) {
    auto topics = graph.edge_topics(edge);
    if (edge.doc < checkpoint.header.docs) {
      for (TopicId& t : topics) {
        if (cursor >= checkpoint.edge_topics.size()) {
          throw InvariantError("checkpoint edge topics shorter than the old-document tokens");
        }
        t = checkpoint.edge_topics[cursor++];
      }
    } else {
      for (TopicId& t : topics) t = rng.below_i32(checkpoint.header.topics);
    }
  }
  if (cursor != checkpoint.edge_topics.size()) {
    throw InvariantError(
        "corpus does not match checkpoint: old-document token count differs (" +
        std::to_string(cursor) + " vs " + std::to_string(checkpoint.edge_topics.size()) + ")");
  }

  ModelState state = state_from_graph(graph, checkpoint.header.topics,
                                      checkpoint.header.iteration);
  // The stored word rows are redundant with the edge topics; cross-check
  // them to catch corruption.
  for (WordId w = 0; w < checkpoint.header.vocab; ++w) {
    const SparseCounts& stored = checkpoint.word_counts[static_cast<std::size_t>(w)];
    const SparseCounts& recount = state.word_counts[static_cast<std::size_t>(w)];
    if (graph.doc_count == checkpoint.header.docs) {
      if (stored.indices != recount.indices || stored.values != recount.values) {
        throw InvariantError("checkpoint word row " + std::to_string(w) +
                             " does not match edge-topic recount");
      }
    } else {
      // with new documents the recount may exceed the stored counts
      for (std::int32_t i = 0; i < stored.nnz(); ++i) {
        if (recount.get(stored.indices[static_cast<std::size_t>(i)]) <
            stored.values[static_cast<std::size_t>(i)]) {
          throw InvariantError("checkpoint word row " + std::to_string(w) +
                               " exceeds edge-topic recount");
        }
      }
    }
  }
  validate_state(state, graph);
  return state;
}

DedupReport dedup_topics(ModelState& state, TokenGraph& graph, const HyperParams& hyper,
                         double l1_threshold) {
  if (l1_threshold < 0.0 || l1_threshold > 2.0) {
    throw ConfigError("l1 threshold must lie in [0, 2]");
  }
  DedupReport report;
  const std::int32_t k_count = state.topics;
  const std::int32_t vocab = state.vocab();

  // Smoothed word distributions per topic.
  std::vector<std::vector<double>> phi(static_cast<std::size_t>(k_count));
  const double w_beta = static_cast<double>(vocab) * hyper.beta;
  for (std::int32_t k = 0; k < k_count; ++k) {
    phi[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(vocab), 0.0);
  }
  for (WordId w = 0; w < vocab; ++w) {
    const SparseCounts& wc = state.word_counts[static_cast<std::size_t>(w)];
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      phi[static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)])]
         [static_cast<std::size_t>(w)] = wc.values[static_cast<std::size_t>(i)];
    }
  }
  for (std::int32_t k = 0; k < k_count; ++k) {
    const double denom = static_cast<double>(state.topic_totals[static_cast<std::size_t>(k)]) +
                         w_beta;
    for (WordId w = 0; w < vocab; ++w) {
      auto& cell = phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)];
      cell = (cell + hyper.beta) / denom;
    }
  }

  struct Pair {
    double distance;
    TopicId a, b;
  };
  std::vector<Pair> close;
  for (TopicId a = 0; a < k_count; ++a) {
    for (TopicId b = a + 1; b < k_count; ++b) {
      double l1 = 0.0;
      for (WordId w = 0; w < vocab; ++w) {
        l1 += std::abs(phi[static_cast<std::size_t>(a)][static_cast<std::size_t>(w)] -
                       phi[static_cast<std::size_t>(b)][static_cast<std::size_t>(w)]);
        if (l1 >= l1_threshold) break;
      }
      if (l1 < l1_threshold) close.push_back({l1, a, b});
    }
  }
  std::sort(close.begin(), close.end(), [](const Pair& x, const Pair& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  // union-find, lowest topic id survives
  std::vector<TopicId> parent(static_cast<std::size_t>(k_count));
  for (TopicId k = 0; k < k_count; ++k) parent[static_cast<std::size_t>(k)] = k;
  std::function<TopicId(TopicId)> find = [&](TopicId x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const Pair& p : close) {
    const TopicId ra = find(p.a);
    const TopicId rb = find(p.b);
    if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
  }

  std::vector<TopicId> remap(static_cast<std::size_t>(k_count));
  std::vector<std::vector<TopicId>> members(static_cast<std::size_t>(k_count));
  for (TopicId k = 0; k < k_count; ++k) {
    remap[static_cast<std::size_t>(k)] = find(k);
    members[static_cast<std::size_t>(find(k))].push_back(k);
  }
  for (TopicId k = 0; k < k_count; ++k) {
    if (members[static_cast<std::size_t>(k)].size() >= 2) {
      report.groups.push_back(members[static_cast<std::size_t>(k)]);
      report.topics_removed +=
          static_cast<std::int32_t>(members[static_cast<std::size_t>(k)].size()) - 1;
    }
  }
  if (report.groups.empty()) return report;

  // relabel edges and rebuild counts
  for (TopicId& t : graph.topics) t = remap[static_cast<std::size_t>(t)];
  const std::int32_t iteration = state.iteration;
  state = state_from_graph(graph, k_count, iteration);
  return report;
}

InferMode parse_infer_mode(const std::string& name) {
  if (name == "gibbs") return InferMode::kGibbs;
  if (name == "rtlda") return InferMode::kRtlda;
  throw ConfigError("unknown inference mode: " + name + " (expected gibbs|rtlda)");
}

std::vector<double> infer_document(const ModelState& state, const HyperParams& hyper,
                                   const std::vector<DocEntry>& doc, std::int32_t iterations,
                                   InferMode mode, std::uint64_t seed) {
  const std::int32_t k_count = state.topics;
  std::vector<WordId> tokens;
  for (const DocEntry& entry : doc) {
    if (entry.word < 0 || entry.word >= state.vocab()) {
      log::warn("inference: skipping unknown word id %d", entry.word);
      continue;
    }
    for (Count c = 0; c < entry.count; ++c) tokens.push_back(entry.word);
  }
  if (tokens.empty()) {
    throw ConfigError("document is empty after removing unknown words");
  }

  // Frozen word factors (N_w|k + beta) / (N_k + W*beta) and prior.
  const double w_beta = static_cast<double>(state.vocab()) * hyper.beta;
  const std::int64_t total = state.total_tokens();
  const double alpha_scale = static_cast<double>(k_count) * hyper.alpha /
                             (static_cast<double>(total) + hyper.alpha_as);
  std::vector<double> alpha_k(static_cast<std::size_t>(k_count));
  std::vector<double> inv_mass(static_cast<std::size_t>(k_count));
  for (std::int32_t k = 0; k < k_count; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    alpha_k[ki] = alpha_scale * (static_cast<double>(state.topic_totals[ki]) +
                                 hyper.alpha_as / static_cast<double>(k_count));
    inv_mass[ki] = 1.0 / (static_cast<double>(state.topic_totals[ki]) + w_beta);
  }

  Rng rng = Rng::derive(seed, {0x494e4652ULL});
  std::vector<TopicId> assign(tokens.size(), 0);
  DenseCounts doc_counts(static_cast<std::size_t>(k_count), 0);
  std::vector<double> weights(static_cast<std::size_t>(k_count));

  auto token_weights = [&](WordId w, TopicId exclude) {
    const SparseCounts& wc = state.word_counts[static_cast<std::size_t>(w)];
    double total_weight = 0.0;
    for (std::int32_t k = 0; k < k_count; ++k) {
      const std::size_t ki = static_cast<std::size_t>(k);
      double local = static_cast<double>(doc_counts[ki]);
      if (k == exclude) local -= 1.0;
      weights[ki] = hyper.beta * inv_mass[ki] * (local + alpha_k[ki]);
      total_weight += weights[ki];
    }
    for (std::int32_t i = 0; i < wc.nnz(); ++i) {
      const std::size_t ki = static_cast<std::size_t>(wc.indices[static_cast<std::size_t>(i)]);
      const double was = weights[ki];
      const double count = static_cast<double>(wc.values[static_cast<std::size_t>(i)]);
      double local = static_cast<double>(doc_counts[ki]);
      if (static_cast<TopicId>(ki) == exclude) local -= 1.0;
      weights[ki] = (count + hyper.beta) * inv_mass[ki] * (local + alpha_k[ki]);
      total_weight += weights[ki] - was;
    }
    return total_weight;
  };

  // Sweep 0 assigns tokens with nothing to exclude; later sweeps resample
  // with the token's own assignment excluded. rtlda replaces the draw with
  // an argmax (ties to the lowest topic id) and is fully deterministic.
  const std::int32_t sweeps = std::max(iterations, 1);
  bool first_sweep = true;
  for (std::int32_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const TopicId exclude = first_sweep ? -1 : assign[i];
      const double total_weight = token_weights(tokens[i], exclude);
      TopicId next;
      if (mode == InferMode::kRtlda) {
        next = 0;
        for (std::int32_t k = 1; k < k_count; ++k) {
          if (weights[static_cast<std::size_t>(k)] > weights[static_cast<std::size_t>(next)]) {
            next = k;
          }
        }
      } else {
        next = linear_sample(weights, rng.uniform(total_weight));
      }
      if (!first_sweep) --doc_counts[static_cast<std::size_t>(assign[i])];
      ++doc_counts[static_cast<std::size_t>(next)];
      assign[i] = next;
    }
    first_sweep = false;
  }

  std::vector<double> theta(static_cast<std::size_t>(k_count));
  double alpha_sum = 0.0;
  for (double a : alpha_k) alpha_sum += a;
  const double denom = static_cast<double>(tokens.size()) + alpha_sum;
  for (std::int32_t k = 0; k < k_count; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    theta[ki] = (static_cast<double>(doc_counts[ki]) + alpha_k[ki]) / denom;
  }
  return theta;
}

}  // namespace zenlda
