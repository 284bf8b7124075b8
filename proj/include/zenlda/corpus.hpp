#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zenlda/types.hpp"

namespace zenlda {

struct DocEntry {
  WordId word;
  Count count;
};

struct Document {
  DocId id = 0;
  std::vector<DocEntry> entries;  // unique words, ascending

  std::int64_t tokens() const {
    std::int64_t n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }
};

// Bag-of-words corpus. vocab_size is the largest word id + 1 observed in the
// input, so word ids inside the range with no occurrences are legal
// zero-degree words.
struct Corpus {
  std::vector<Document> docs;
  std::int32_t vocab_size = 0;
  std::int64_t total_tokens = 0;

  std::int32_t doc_count() const { return static_cast<std::int32_t>(docs.size()); }
};

// libsvm-style lines: `<label> <idx>:<val> ...` with idx >= 1 and val >= 1.
// Labels are parsed and discarded; a line whose first field already contains
// ':' is treated as label-free. Duplicate word entries within one document
// merge by summing. Blank lines and trailing whitespace are ignored.
Corpus parse_libsvm(std::istream& in);
Corpus parse_libsvm(const std::string& text);

// Reads a corpus file; transparently decompresses when the name ends in ".gz".
Corpus load_corpus(const std::string& path);

// One edge per distinct (word, doc) pair; the pair's per-occurrence topic
// assignments live in the flat `topics` array at [topic_begin, topic_begin+count).
struct Edge {
  WordId word = 0;
  DocId doc = 0;
  std::int64_t topic_begin = 0;
  Count count = 0;
};

struct TokenGraph {
  std::vector<Edge> edges;  // grouped word-by-word: ascending (word, doc)
  std::vector<TopicId> topics;
  std::vector<std::int64_t> word_degree;  // token count per word
  std::vector<std::int64_t> doc_degree;   // token count per doc (document length)
  // [first, last) edge index per distinct word that has edges.
  std::vector<std::pair<std::size_t, std::size_t>> word_ranges;
  std::int32_t vocab_size = 0;
  std::int32_t doc_count = 0;

  std::int64_t total_tokens() const { return static_cast<std::int64_t>(topics.size()); }

  std::span<TopicId> edge_topics(const Edge& e) {
    return {topics.data() + e.topic_begin, static_cast<std::size_t>(e.count)};
  }
  std::span<const TopicId> edge_topics(const Edge& e) const {
    return {topics.data() + e.topic_begin, static_cast<std::size_t>(e.count)};
  }
};

// Builds the bipartite graph with all topics set to 0.
TokenGraph build_graph(const Corpus& corpus);

// Same, taking one topic per occurrence in edge order; values must lie in
// [0, num_topics).
TokenGraph build_graph(const Corpus& corpus, std::span<const TopicId> init_topics,
                       std::int32_t num_topics);

}  // namespace zenlda
