#include "zenlda/partition.hpp"

#include <algorithm>
#include <cmath>

#include "zenlda/rng.hpp"

namespace zenlda {

PartitionStrategy parse_partition_strategy(const std::string& name) {
  if (name == "random") return PartitionStrategy::kRandom;
  if (name == "word") return PartitionStrategy::kEdge1dWord;
  if (name == "doc") return PartitionStrategy::kEdge1dDoc;
  if (name == "2d") return PartitionStrategy::kEdge2d;
  if (name == "dbh+") return PartitionStrategy::kDbhPlus;
  throw ConfigError("unknown partition strategy: " + name +
                    " (expected random|word|doc|2d|dbh+)");
}

std::string partition_strategy_name(PartitionStrategy strategy) {
  switch (strategy) {
    case PartitionStrategy::kRandom: return "random";
    case PartitionStrategy::kEdge1dWord: return "word";
    case PartitionStrategy::kEdge1dDoc: return "doc";
    case PartitionStrategy::kEdge2d: return "2d";
    case PartitionStrategy::kDbhPlus: return "dbh+";
  }
  return "?";
}

std::uint64_t vertex_hash(bool is_word, std::int64_t id, std::uint64_t seed) {
  std::uint64_t x = seed ^ (is_word ? 0x7764ULL : 0x646fULL);
  x ^= static_cast<std::uint64_t>(id) * 0x9e3779b97f4a7c15ULL;
  return splitmix64(x);
}

namespace {

std::uint64_t edge_hash(WordId w, DocId d, std::uint64_t seed) {
  std::uint64_t x = seed;
  x ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(w)) |
       (static_cast<std::uint64_t>(static_cast<std::uint32_t>(d)) << 32);
  return splitmix64(x);
}

void finalize(PartitionAssignment& a, const TokenGraph& graph, std::uint64_t seed) {
  const std::size_t words = static_cast<std::size_t>(graph.vocab_size);
  const std::size_t docs = static_cast<std::size_t>(graph.doc_count);
  a.word_replicas.assign(words, {});
  a.doc_replicas.assign(docs, {});
  a.word_master.resize(words);
  a.doc_master.resize(docs);
  const std::uint32_t p = static_cast<std::uint32_t>(a.parts);
  for (std::size_t w = 0; w < words; ++w) {
    a.word_master[w] = static_cast<std::uint32_t>(vertex_hash(true, static_cast<std::int64_t>(w), seed) % p);
  }
  for (std::size_t d = 0; d < docs; ++d) {
    a.doc_master[d] = static_cast<std::uint32_t>(vertex_hash(false, static_cast<std::int64_t>(d), seed) % p);
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    const std::uint32_t part = a.edge_partition[e];
    auto& wr = a.word_replicas[static_cast<std::size_t>(edge.word)];
    if (std::find(wr.begin(), wr.end(), part) == wr.end()) wr.push_back(part);
    auto& dr = a.doc_replicas[static_cast<std::size_t>(edge.doc)];
    if (std::find(dr.begin(), dr.end(), part) == dr.end()) dr.push_back(part);
  }
  for (auto& r : a.word_replicas) std::sort(r.begin(), r.end());
  for (auto& r : a.doc_replicas) std::sort(r.begin(), r.end());
}

}  // namespace

PartitionAssignment assign_random(const TokenGraph& graph, std::int32_t parts,
                                  std::uint64_t seed) {
  if (parts < 1) throw ConfigError("partition count must be >= 1");
  PartitionAssignment a;
  a.parts = parts;
  a.edge_partition.resize(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    a.edge_partition[e] = static_cast<std::uint32_t>(
        edge_hash(graph.edges[e].word, graph.edges[e].doc, seed) %
        static_cast<std::uint64_t>(parts));
  }
  finalize(a, graph, seed);
  return a;
}

PartitionAssignment assign_edge1d(const TokenGraph& graph, std::int32_t parts, bool by_word) {
  if (parts < 1) throw ConfigError("partition count must be >= 1");
  PartitionAssignment a;
  a.parts = parts;
  a.edge_partition.resize(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    const std::uint64_t h = by_word ? vertex_hash(true, edge.word, 0)
                                    : vertex_hash(false, edge.doc, 0);
    a.edge_partition[e] = static_cast<std::uint32_t>(h % static_cast<std::uint64_t>(parts));
  }
  finalize(a, graph, 0);
  return a;
}

PartitionAssignment assign_edge2d(const TokenGraph& graph, std::int32_t parts) {
  if (parts < 1) throw ConfigError("partition count must be >= 1");
  PartitionAssignment a;
  a.parts = parts;
  a.edge_partition.resize(graph.edges.size());
  const std::uint64_t side =
      static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(parts))));
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    const std::uint64_t col = vertex_hash(true, edge.word, 0) % side;
    const std::uint64_t row = vertex_hash(false, edge.doc, 0) % side;
    a.edge_partition[e] =
        static_cast<std::uint32_t>((col * side + row) % static_cast<std::uint64_t>(parts));
  }
  finalize(a, graph, 0);
  return a;
}

PartitionAssignment assign_dbh_plus(const TokenGraph& graph, std::int32_t parts,
                                    std::int64_t degree_threshold, std::uint64_t seed) {
  if (parts < 1) throw ConfigError("partition count must be >= 1");
  if (degree_threshold < 0) throw ConfigError("degree threshold must be >= 0");
  PartitionAssignment a;
  a.parts = parts;
  a.edge_partition.resize(graph.edges.size());
  const std::uint64_t p = static_cast<std::uint64_t>(parts);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& edge = graph.edges[e];
    const std::int64_t dw = graph.word_degree[static_cast<std::size_t>(edge.word)];
    const std::int64_t dd = graph.doc_degree[static_cast<std::size_t>(edge.doc)];
    bool word_side;
    if (std::max(dw, dd) < degree_threshold) {
      word_side = dw >= dd;  // both low-degree: collocate with the higher
    } else {
      word_side = dw <= dd;  // classic DBH: cut the higher-degree vertex
    }
    const std::uint64_t h =
        word_side ? vertex_hash(true, edge.word, seed) : vertex_hash(false, edge.doc, seed);
    a.edge_partition[e] = static_cast<std::uint32_t>(h % p);
  }
  finalize(a, graph, seed);
  return a;
}

PartitionAssignment assign_edges(const TokenGraph& graph, PartitionStrategy strategy,
                                 std::int32_t parts, std::int64_t degree_threshold,
                                 std::uint64_t seed) {
  switch (strategy) {
    case PartitionStrategy::kRandom: return assign_random(graph, parts, seed);
    case PartitionStrategy::kEdge1dWord: return assign_edge1d(graph, parts, true);
    case PartitionStrategy::kEdge1dDoc: return assign_edge1d(graph, parts, false);
    case PartitionStrategy::kEdge2d: return assign_edge2d(graph, parts);
    case PartitionStrategy::kDbhPlus:
      return assign_dbh_plus(graph, parts, degree_threshold, seed);
  }
  throw ConfigError("unhandled partition strategy");
}

PartitionMetrics partition_metrics(const PartitionAssignment& assignment,
                                   const TokenGraph& graph) {
  PartitionMetrics m;
  std::vector<std::int64_t> per_part(static_cast<std::size_t>(assignment.parts), 0);
  for (std::uint32_t p : assignment.edge_partition) ++per_part[p];
  const std::int64_t max_edges = *std::max_element(per_part.begin(), per_part.end());
  const double mean_edges =
      static_cast<double>(graph.edges.size()) / static_cast<double>(assignment.parts);
  m.edge_balance = mean_edges > 0.0 ? static_cast<double>(max_edges) / mean_edges : 1.0;

  std::int64_t replicas = 0;
  std::int64_t vertices = 0;
  std::int64_t max_rep = 0;
  for (const auto& r : assignment.word_replicas) {
    if (r.empty()) continue;  // zero-degree words are not replicated anywhere
    ++vertices;
    replicas += static_cast<std::int64_t>(r.size());
    max_rep = std::max(max_rep, static_cast<std::int64_t>(r.size()));
  }
  for (const auto& r : assignment.doc_replicas) {
    if (r.empty()) continue;
    ++vertices;
    replicas += static_cast<std::int64_t>(r.size());
    max_rep = std::max(max_rep, static_cast<std::int64_t>(r.size()));
  }
  m.replication_factor =
      vertices > 0 ? static_cast<double>(replicas) / static_cast<double>(vertices) : 1.0;
  m.max_replication = static_cast<std::int32_t>(std::max<std::int64_t>(max_rep, 1));
  return m;
}

}  // namespace zenlda
