#include <cmath>
#include <set>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "support/oracles.hpp"
#include "zenlda/partition.hpp"

using namespace zenlda;

namespace {

// Exact per-vertex recount of replicas and per-partition edge counts.
void brute_force_metrics(const PartitionAssignment& a, const TokenGraph& g,
                         double& edge_balance, double& replication, int& max_rep) {
  std::vector<std::int64_t> per_part(static_cast<std::size_t>(a.parts), 0);
  std::vector<std::set<std::uint32_t>> words(static_cast<std::size_t>(g.vocab_size));
  std::vector<std::set<std::uint32_t>> docs(static_cast<std::size_t>(g.doc_count));
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    ++per_part[a.edge_partition[e]];
    words[static_cast<std::size_t>(g.edges[e].word)].insert(a.edge_partition[e]);
    docs[static_cast<std::size_t>(g.edges[e].doc)].insert(a.edge_partition[e]);
  }
  std::int64_t max_edges = 0;
  for (auto v : per_part) max_edges = std::max(max_edges, v);
  edge_balance = static_cast<double>(max_edges) /
                 (static_cast<double>(g.edges.size()) / static_cast<double>(a.parts));
  std::int64_t total = 0, count = 0, mx = 0;
  for (const auto& s : words) {
    if (s.empty()) continue;
    total += static_cast<std::int64_t>(s.size());
    mx = std::max<std::int64_t>(mx, static_cast<std::int64_t>(s.size()));
    ++count;
  }
  for (const auto& s : docs) {
    if (s.empty()) continue;
    total += static_cast<std::int64_t>(s.size());
    mx = std::max<std::int64_t>(mx, static_cast<std::int64_t>(s.size()));
    ++count;
  }
  replication = static_cast<double>(total) / static_cast<double>(count);
  max_rep = static_cast<int>(mx);
}

}  // namespace

TEST_CASE("single partition is trivial") {
  const Corpus c = testsupport::random_corpus(30, 20, 2, 10, 5);
  const TokenGraph g = build_graph(c);
  const PartitionAssignment a = assign_random(g, 1, 7);
  for (std::uint32_t p : a.edge_partition) CHECK(p == 0);
  const PartitionMetrics m = partition_metrics(a, g);
  CHECK(m.edge_balance == doctest::Approx(1.0));
  CHECK(m.replication_factor == doctest::Approx(1.0));
  CHECK(m.max_replication == 1);
}

TEST_CASE("assignments are deterministic under a fixed seed") {
  const Corpus c = testsupport::random_corpus(50, 30, 2, 12, 6);
  const TokenGraph g = build_graph(c);
  for (auto strategy : {PartitionStrategy::kRandom, PartitionStrategy::kEdge1dWord,
                        PartitionStrategy::kEdge1dDoc, PartitionStrategy::kEdge2d,
                        PartitionStrategy::kDbhPlus}) {
    const PartitionAssignment a = assign_edges(g, strategy, 4, 2, 11);
    const PartitionAssignment b = assign_edges(g, strategy, 4, 2, 11);
    CHECK(a.edge_partition == b.edge_partition);
  }
}

TEST_CASE("random vertex cut balances edges like a multinomial") {
  const Corpus c = testsupport::random_corpus(4000, 2000, 20, 30, 17);
  const TokenGraph g = build_graph(c);
  REQUIRE(g.edges.size() > 50000);
  const std::int32_t parts = 8;
  const PartitionAssignment a = assign_random(g, parts, 3);
  std::vector<std::int64_t> per_part(parts, 0);
  for (std::uint32_t p : a.edge_partition) ++per_part[p];
  const double n = static_cast<double>(g.edges.size());
  const double mean = n / parts;
  const double sigma = std::sqrt(n * (1.0 / parts) * (1.0 - 1.0 / parts));
  for (std::int32_t p = 0; p < parts; ++p) {
    CHECK(std::abs(static_cast<double>(per_part[static_cast<std::size_t>(p)]) - mean) <
          5.0 * sigma);
  }
  // conservation
  std::int64_t sum = 0;
  for (auto v : per_part) sum += v;
  CHECK(sum == static_cast<std::int64_t>(g.edges.size()));
}

TEST_CASE("1d partitioning collocates the keyed side") {
  const Corpus c = testsupport::random_corpus(80, 40, 3, 15, 23);
  const TokenGraph g = build_graph(c);
  const PartitionAssignment by_word = assign_edge1d(g, 4, true);
  for (const auto& r : by_word.word_replicas) CHECK(r.size() <= 1);
  const PartitionMetrics m = partition_metrics(by_word, g);
  CHECK(m.edge_balance >= 1.0);
  const PartitionAssignment by_doc = assign_edge1d(g, 4, false);
  for (const auto& r : by_doc.doc_replicas) CHECK(r.size() <= 1);
}

TEST_CASE("2d grid partitioning bounds replication") {
  const Corpus c = testsupport::powerlaw_corpus(20000, 3000, 1500, 1.4, 31);
  const TokenGraph g = build_graph(c);
  for (std::int32_t parts : {1, 4, 6, 16}) {
    const PartitionAssignment a = assign_edge2d(g, parts);
    const PartitionMetrics m = partition_metrics(a, g);
    const int bound =
        2 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(parts))));
    CHECK(m.max_replication <= bound);
  }
}

TEST_CASE("degree-based hashing branch rules") {
  // one hot word (3 tokens) and one cold pair
  const Corpus c = parse_libsvm(std::string("1 1:1\n1 1:1 2:1\n1 1:1"));
  const TokenGraph g = build_graph(c);
  REQUIRE(g.word_degree[0] == 3);
  REQUIRE(g.word_degree[1] == 1);
  const std::uint64_t seed = 12;

  const PartitionAssignment a = assign_dbh_plus(g, 16, 2, seed);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& edge = g.edges[e];
    const std::int64_t dw = g.word_degree[static_cast<std::size_t>(edge.word)];
    const std::int64_t dd = g.doc_degree[static_cast<std::size_t>(edge.doc)];
    if (edge.word == 0) {
      // degree 3 vs smaller doc degree: above threshold, classic branch cuts
      // the hot word, so the edge follows the lower-degree endpoint
      const bool word_lower = dw <= dd;
      const std::uint64_t h = word_lower ? vertex_hash(true, edge.word, seed)
                                         : vertex_hash(false, edge.doc, seed);
      CHECK(a.edge_partition[e] == h % 16);
    }
  }

  // both endpoints below threshold: edge goes to the higher-degree endpoint,
  // ties to the word
  const Corpus tiny = parse_libsvm(std::string("1 1:1"));
  const TokenGraph tg = build_graph(tiny);
  const PartitionAssignment b = assign_dbh_plus(tg, 8, 5, seed);
  CHECK(b.edge_partition[0] == vertex_hash(true, 0, seed) % 8);
}

TEST_CASE("dbh+ with zero threshold degenerates to classic dbh") {
  const Corpus c = testsupport::powerlaw_corpus(15000, 2000, 1000, 1.3, 41);
  const TokenGraph g = build_graph(c);
  const std::uint64_t seed = 97;
  const PartitionAssignment a = assign_dbh_plus(g, 8, 0, seed);
  const std::vector<std::uint32_t> reference = testsupport::reference_dbh(g, 8, seed);
  CHECK(a.edge_partition == reference);
}

TEST_CASE("metrics equal a brute-force recount") {
  const Corpus c = testsupport::random_corpus(120, 60, 2, 18, 53);
  const TokenGraph g = build_graph(c);
  for (auto strategy : {PartitionStrategy::kRandom, PartitionStrategy::kEdge2d,
                        PartitionStrategy::kDbhPlus}) {
    const PartitionAssignment a = assign_edges(g, strategy, 5, 3, 2);
    const PartitionMetrics m = partition_metrics(a, g);
    double balance, replication;
    int max_rep;
    brute_force_metrics(a, g, balance, replication, max_rep);
    CHECK(m.edge_balance == doctest::Approx(balance));
    CHECK(m.replication_factor == doctest::Approx(replication));
    CHECK(m.max_replication == max_rep);
  }
}
