#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zenlda/corpus.hpp"
#include "zenlda/types.hpp"

namespace zenlda {

enum class PartitionStrategy { kRandom, kEdge1dWord, kEdge1dDoc, kEdge2d, kDbhPlus };

PartitionStrategy parse_partition_strategy(const std::string& name);
std::string partition_strategy_name(PartitionStrategy strategy);

// Edge-to-partition map plus the replica sets it induces. A vertex is
// replicated in every partition that holds at least one of its edges; the
// master copy lives in the hash-designated partition.
struct PartitionAssignment {
  std::int32_t parts = 1;
  std::vector<std::uint32_t> edge_partition;              // by edge index
  std::vector<std::vector<std::uint32_t>> word_replicas;  // sorted, per word
  std::vector<std::vector<std::uint32_t>> doc_replicas;   // sorted, per doc
  std::vector<std::uint32_t> word_master;
  std::vector<std::uint32_t> doc_master;
};

std::uint64_t vertex_hash(bool is_word, std::int64_t id, std::uint64_t seed);

// Edge partition = hash(word, doc) mod p.
PartitionAssignment assign_random(const TokenGraph& graph, std::int32_t parts,
                                  std::uint64_t seed);

// Collocates all edges of the keyed side: partition = hash(word) mod p when
// by_word, else hash(doc) mod p.
PartitionAssignment assign_edge1d(const TokenGraph& graph, std::int32_t parts, bool by_word);

// Grid partitioning of the (word, doc) adjacency; every vertex is replicated
// in at most 2*ceil(sqrt(p)) partitions.
PartitionAssignment assign_edge2d(const TokenGraph& graph, std::int32_t parts);

// Degree-based hashing with a low-degree threshold. Degrees are
// occurrence-weighted token counts. When both endpoint degrees are below the
// threshold the edge goes to the higher-degree endpoint's partition;
// otherwise to the lower-degree endpoint's (classic DBH). Ties break to the
// word endpoint. threshold = 0 degenerates to plain DBH.
PartitionAssignment assign_dbh_plus(const TokenGraph& graph, std::int32_t parts,
                                    std::int64_t degree_threshold, std::uint64_t seed);

PartitionAssignment assign_edges(const TokenGraph& graph, PartitionStrategy strategy,
                                 std::int32_t parts, std::int64_t degree_threshold,
                                 std::uint64_t seed);

struct PartitionMetrics {
  double edge_balance = 1.0;        // max / mean edges per partition
  double replication_factor = 1.0;  // mean replicas over vertices with edges
  std::int32_t max_replication = 1;
};

PartitionMetrics partition_metrics(const PartitionAssignment& assignment,
                                   const TokenGraph& graph);

}  // namespace zenlda
