#include "zenlda/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace zenlda {

namespace {

bool parse_int(const char* begin, const char* end, std::int64_t& out) {
  if (begin == end) return false;
  errno = 0;
  char* stop = nullptr;
  const long long v = std::strtoll(begin, &stop, 10);
  if (errno != 0 || stop != end) return false;
  out = v;
  return true;
}

// Parses one non-blank line into a document; `line_no` is the 1-based line
// number in the input, used only for error messages.
Document parse_line(const std::string& line, std::int64_t line_no, std::int32_t& max_word) {
  Document doc;
  std::map<WordId, std::int64_t> merged;
  std::size_t pos = 0;
  const std::size_t len = line.size();
  bool first_field = true;
  while (pos < len) {
    while (pos < len && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= len) break;
    std::size_t field_end = pos;
    while (field_end < len && line[field_end] != ' ' && line[field_end] != '\t') ++field_end;
    const std::size_t colon = line.find(':', pos);
    if (first_field && (colon == std::string::npos || colon >= field_end)) {
      // label field, discarded
      first_field = false;
      pos = field_end;
      continue;
    }
    first_field = false;
    if (colon == std::string::npos || colon >= field_end) {
      throw ParseError("line " + std::to_string(line_no) + ": expected idx:val pair, got '" +
                       line.substr(pos, field_end - pos) + "'");
    }
    std::int64_t idx = 0;
    std::int64_t val = 0;
    if (!parse_int(line.c_str() + pos, line.c_str() + colon, idx)) {
      throw ParseError("line " + std::to_string(line_no) + ": idx must be an integer");
    }
    if (!parse_int(line.c_str() + colon + 1, line.c_str() + field_end, val)) {
      throw ParseError("line " + std::to_string(line_no) + ": val must be an integer");
    }
    if (idx < 1) {
      throw ParseError("line " + std::to_string(line_no) + ": idx must be >= 1");
    }
    if (val < 1) {
      throw ParseError("line " + std::to_string(line_no) + ": val must be >= 1");
    }
    const WordId word = static_cast<WordId>(idx - 1);
    merged[word] += val;
    max_word = std::max(max_word, static_cast<std::int32_t>(idx));
    pos = field_end;
  }
  doc.entries.reserve(merged.size());
  for (const auto& [word, count] : merged) {
    doc.entries.push_back({word, static_cast<Count>(count)});
  }
  return doc;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

Corpus parse_lines(const std::vector<std::string>& lines) {
  Corpus corpus;
  std::int32_t max_word = 0;
  std::int64_t line_no = 0;
  for (const std::string& raw : lines) {
    ++line_no;
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    Document doc = parse_line(line, line_no, max_word);
    doc.id = static_cast<DocId>(corpus.docs.size());
    corpus.total_tokens += doc.tokens();
    corpus.docs.push_back(std::move(doc));
  }
  if (corpus.docs.empty()) {
    throw ParseError("empty corpus: no documents found");
  }
  corpus.vocab_size = max_word;
  return corpus;
}

}  // namespace

Corpus parse_libsvm(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return parse_lines(lines);
}

Corpus parse_libsvm(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

Corpus load_corpus(const std::string& path) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (!gz) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    return parse_libsvm(in);
  }
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw ParseError("cannot open corpus file: " + path);
  std::vector<std::string> lines;
  std::string current;
  char buffer[1 << 16];
  int n = 0;
  while ((n = gzread(file, buffer, sizeof(buffer))) > 0) {
    for (int i = 0; i < n; ++i) {
      if (buffer[i] == '\n') {
        lines.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(buffer[i]);
      }
    }
  }
  const bool failed = n < 0;
  gzclose(file);
  if (failed) throw ParseError("gzip read error in: " + path);
  if (!current.empty()) lines.push_back(std::move(current));
  return parse_lines(lines);
}

TokenGraph build_graph(const Corpus& corpus) {
  return build_graph(corpus, {}, 1);
}

TokenGraph build_graph(const Corpus& corpus, std::span<const TopicId> init_topics,
                       std::int32_t num_topics) {
  TokenGraph graph;
  graph.vocab_size = corpus.vocab_size;
  graph.doc_count = corpus.doc_count();
  graph.word_degree.assign(static_cast<std::size_t>(corpus.vocab_size), 0);
  graph.doc_degree.assign(static_cast<std::size_t>(corpus.doc_count()), 0);

  // Group edges word-by-word: all (doc, count) entries of one word become a
  // contiguous run of edges, docs in ascending order.
  std::vector<std::vector<std::pair<DocId, Count>>> by_word(
      static_cast<std::size_t>(corpus.vocab_size));
  std::int64_t total = 0;
  for (const Document& doc : corpus.docs) {
    for (const DocEntry& entry : doc.entries) {
      by_word[static_cast<std::size_t>(entry.word)].push_back({doc.id, entry.count});
      graph.word_degree[static_cast<std::size_t>(entry.word)] += entry.count;
      graph.doc_degree[static_cast<std::size_t>(doc.id)] += entry.count;
      total += entry.count;
    }
  }
  if (!init_topics.empty() && static_cast<std::int64_t>(init_topics.size()) != total) {
    throw InvariantError("build_graph: init topic count does not match token count");
  }

  graph.topics.resize(static_cast<std::size_t>(total), 0);
  std::int64_t offset = 0;
  for (WordId w = 0; w < corpus.vocab_size; ++w) {
    auto& list = by_word[static_cast<std::size_t>(w)];
    if (list.empty()) continue;
    const std::size_t first = graph.edges.size();
    for (const auto& [doc, count] : list) {
      graph.edges.push_back({w, doc, offset, count});
      offset += count;
    }
    graph.word_ranges.push_back({first, graph.edges.size()});
  }

  if (!init_topics.empty()) {
    for (std::size_t i = 0; i < init_topics.size(); ++i) {
      const TopicId t = init_topics[i];
      if (t < 0 || t >= num_topics) {
        throw InvariantError("build_graph: topic " + std::to_string(t) + " out of range [0, " +
                             std::to_string(num_topics) + ")");
      }
      graph.topics[i] = t;
    }
  }
  return graph;
}

}  // namespace zenlda
