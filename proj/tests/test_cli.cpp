#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support/synthetic.hpp"
#include "zenlda/cli.hpp"
#include "zenlda/corpus.hpp"

using namespace zenlda;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& child = "") const {
    return (child.empty() ? path : path / child).string();
  }
};

void write_corpus(const std::string& path, std::int32_t docs, std::uint64_t seed) {
  const Corpus corpus = testsupport::random_corpus(docs, 25, 4, 12, seed);
  std::ofstream out(path);
  for (const Document& doc : corpus.docs) {
    out << "1";
    for (const DocEntry& e : doc.entries) out << ' ' << (e.word + 1) << ':' << e.count;
    out << '\n';
  }
}

// metrics lines with the timing field zeroed, for determinism comparisons
std::string canonical_metrics(const std::string& path) {
  std::ifstream in(path);
  std::string line, out;
  while (std::getline(in, line)) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(line);
    j["seconds_per_step"] = {0, 0, 0, 0, 0};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli({"train"}) == 1);                          // missing --input
  CHECK(run_cli({"no-such-command"}) == 1);
  CHECK(run_cli({"train", "--input", "x", "--topics", "2", "--no-such-flag"}) == 1);
  CHECK(run_cli({"train", "--input", "/tmp/whatever.libsvm"}) == 1);  // missing --topics
}

TEST_CASE("invalid flag combinations are usage errors") {
  TempDir dir("zenlda_cli_combo");
  write_corpus(dir.str("c.libsvm"), 10, 4);
  CHECK(run_cli({"train", "--input", dir.str("c.libsvm"), "--topics", "2", "--iters", "1",
                 "--delta-agg", "--exclude-start", "3", "--output-dir", dir.str()}) == 1);
  CHECK(run_cli({"train", "--input", dir.str("c.libsvm"), "--topics", "2", "--iters", "1",
                 "--kernel", "bogus", "--output-dir", dir.str()}) == 1);
}

TEST_CASE("runtime failures exit with code 2") {
  TempDir dir("zenlda_cli_rt");
  CHECK(run_cli({"train", "--input", dir.str("missing.libsvm"), "--topics", "2", "--iters",
                 "1", "--output-dir", dir.str()}) == 2);
}

TEST_CASE("train writes metrics and a final checkpoint deterministically") {
  TempDir dir("zenlda_cli_train");
  write_corpus(dir.str("c.libsvm"), 25, 9);
  const std::vector<std::string> args{
      "train",        "--input", dir.str("c.libsvm"), "--topics", "3",
      "--iters",      "4",       "--seed",            "11",       "--kernel",
      "zen",          "--output-dir", dir.str("run1")};
  REQUIRE(run_cli(args) == 0);
  CHECK(fs::exists(dir.str("run1") + "/metrics.jsonl"));
  CHECK(fs::exists(dir.str("run1") + "/model-final.txt"));

  std::vector<std::string> args2 = args;
  args2.back() = dir.str("run2");
  REQUIRE(run_cli(args2) == 0);
  CHECK(canonical_metrics(dir.str("run1") + "/metrics.jsonl") ==
        canonical_metrics(dir.str("run2") + "/metrics.jsonl"));

  std::ifstream metrics(dir.str("run1") + "/metrics.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(metrics, line)) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("resume via the cli continues the run") {
  TempDir dir("zenlda_cli_resume");
  write_corpus(dir.str("c.libsvm"), 20, 13);
  REQUIRE(run_cli({"train", "--input", dir.str("c.libsvm"), "--topics", "3", "--iters", "2",
                   "--seed", "5", "--checkpoint-every", "2", "--output-dir",
                   dir.str("out")}) == 0);
  REQUIRE(fs::exists(dir.str("out") + "/checkpoint-iter2.txt"));
  REQUIRE(run_cli({"train", "--input", dir.str("c.libsvm"), "--topics", "3", "--iters", "4",
                   "--seed", "5", "--resume", dir.str("out") + "/checkpoint-iter2.txt",
                   "--output-dir", dir.str("out")}) == 0);
  std::ifstream final_model(dir.str("out") + "/model-final.txt");
  std::string header;
  std::getline(final_model, header);
  CHECK(header.find("\"iteration\":4") != std::string::npos);
}

TEST_CASE("partition-stats prints one tsv row per strategy") {
  TempDir dir("zenlda_cli_pstats");
  write_corpus(dir.str("c.libsvm"), 30, 21);
  CHECK(run_cli({"partition-stats", "--input", dir.str("c.libsvm"), "--parts", "4",
                 "--partitioner", "random,dbh+"}) == 0);
}

TEST_CASE("infer prints topic proportions per document") {
  TempDir dir("zenlda_cli_infer");
  write_corpus(dir.str("c.libsvm"), 20, 31);
  REQUIRE(run_cli({"train", "--input", dir.str("c.libsvm"), "--topics", "2", "--iters", "3",
                   "--seed", "3", "--output-dir", dir.str("out")}) == 0);
  std::ofstream query(dir.str("q.libsvm"));
  query << "1:2 3:1\n";
  query.close();
  CHECK(run_cli({"infer", "--model", dir.str("out") + "/model-final.txt", "--input",
                 dir.str("q.libsvm"), "--mode", "rtlda"}) == 0);
  CHECK(run_cli({"infer", "--model", dir.str("out") + "/model-final.txt", "--input",
                 dir.str("q.libsvm"), "--mode", "gibbs", "--infer-iters", "5"}) == 0);
}

TEST_CASE("dedup subcommand writes a merged model") {
  TempDir dir("zenlda_cli_dedup");
  write_corpus(dir.str("c.libsvm"), 20, 41);
  REQUIRE(run_cli({"train", "--input", dir.str("c.libsvm"), "--topics", "4", "--iters", "2",
                   "--seed", "7", "--output-dir", dir.str("out")}) == 0);
  CHECK(run_cli({"dedup", "--model", dir.str("out") + "/model-final.txt", "--input",
                 dir.str("c.libsvm"), "--l1-threshold", "0.01", "--output",
                 dir.str("out") + "/merged.txt"}) == 0);
  CHECK(fs::exists(dir.str("out") + "/merged.txt"));
}

TEST_CASE("bench prints sampling seconds per kernel") {
  TempDir dir("zenlda_cli_bench");
  write_corpus(dir.str("c.libsvm"), 20, 51);
  CHECK(run_cli({"bench", "--input", dir.str("c.libsvm"), "--topics", "4", "--iters", "2",
                 "--kernels", "zen,light", "--seed", "2"}) == 0);
}
