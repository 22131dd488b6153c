#include <gtest/gtest.h>

#include <sstream>

#include "neusum/cli.hpp"
#include "test_util.hpp"

using namespace neusum;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "neusum");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kCorpus =
    R"({"id":"d1","document":["The storm hit the coast on Monday .","Officials urged residents to leave .","A local team won the cup ."],"summary":["The storm hit the coast ."]})"
    "\n"
    R"({"id":"d2","document":["Prices rose again .","The central bank raised rates by half a point .","Markets fell after the decision ."],"summary":["The bank raised rates and markets fell ."]})"
    "\n"
    R"({"id":"d3","document":[],"summary":["nothing"]})"
    "\n"
    R"({"id":"d4","document":["A new bridge opened .","Traffic on the old road eased .","Drivers praised the bridge ."],"summary":["A new bridge opened and drivers praised it ."]})"
    "\n";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  const CliResult r = run({"rouge", "--candidate", "a", "--reference", "b", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  EXPECT_EQ(run({"build-vocab", "--input", "x"}).code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, MissingFileExitsOneNamingPath) {
  const CliResult r = run({"build-vocab", "--input", "/nonexistent/c.jsonl", "--out", "/tmp/v.txt"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/c.jsonl"), std::string::npos);
}

TEST(Cli, RougeIdenticalFilesScoreOne) {
  test::TempDir dir("cli_rouge");
  test::write_file(dir.file("c.txt"), "the cats sat\non the mat\n");
  test::write_file(dir.file("r.txt"), "the cats sat\non the mat\n");
  for (const char* v : {"rouge-1", "rouge-2", "rouge-l"}) {
    const CliResult r = run({"rouge", "--candidate", dir.file("c.txt"), "--reference", dir.file("r.txt"), "--variant", v});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("F1 1.000000"), std::string::npos) << r.out;
  }
  test::write_file(dir.file("s.txt"), "the cat sat\n");
  const CliResult plain = run({"rouge", "--candidate", dir.file("s.txt"), "--reference", dir.file("r.txt"), "--variant",
                         "rouge-1"});
  const CliResult stemmed = run({"rouge", "--candidate", dir.file("s.txt"), "--reference", dir.file("r.txt"), "--variant",
                           "rouge-1", "--stem"});
  EXPECT_NE(plain.out, stemmed.out);
}

TEST(Cli, GradCheckPasses) {
  const CliResult r = run({"grad-check", "--dims", "4", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("max relative error"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, FullPipeline) {
  test::TempDir dir("cli_pipe");
  test::write_file(dir.file("c.jsonl"), kCorpus);
  test::write_file(dir.file("config.json"),
                   R"({"embedding_dim": 4, "sentence_hidden": 4, "document_hidden": 4, "extractor_hidden": 4,
                       "scorer_hidden": 4, "epochs": 2, "batch_size": 2, "validation_interval": 1, "seed": 3})");

  CliResult r = run({"build-vocab", "--input", dir.file("c.jsonl"), "--out", dir.file("vocab.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("skipped 1"), std::string::npos);

  r = run({"make-oracle", "--input", dir.file("c.jsonl"), "--out", dir.file("labels.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto labels = load_labels(dir.file("labels.jsonl"));
  ASSERT_EQ(labels.size(), 3u);
  EXPECT_EQ(labels[0].selected.front(), 0u);

  r = run({"train", "--config", dir.file("config.json"), "--corpus", dir.file("c.jsonl"), "--labels",
           dir.file("labels.jsonl"), "--vocab", dir.file("vocab.txt"), "--out-dir", dir.file("run")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir.file("run/train_log.csv")));

  r = run({"summarize", "--checkpoint", dir.file("run/best"), "--input", dir.file("c.jsonl"), "--budget", "2", "--out",
           dir.file("x.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto xs = load_extractions(dir.file("x.jsonl"));
  ASSERT_EQ(xs.size(), 3u);
  for (const auto& x : xs) EXPECT_EQ(x.selected.size(), 2u);

  r = run({"evaluate", "--extractions", dir.file("x.jsonl"), "--corpus", dir.file("c.jsonl"), "--labels",
           dir.file("labels.jsonl"), "--report", dir.file("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("p(@1)"), std::string::npos);
  const auto report = nlohmann::json::parse(test::read_file(dir.file("report.json")));
  EXPECT_EQ(report.at("documents"), 3);
  EXPECT_EQ(test::read_file(dir.file("report.histogram.csv")).rfind("position,count\n", 0), 0u);

  r = run({"summarize", "--lead3", "--input", dir.file("c.jsonl"), "--out", dir.file("lead.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_extractions(dir.file("lead.jsonl"))[0].selected, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Cli, TrainRejectsUnknownConfigKey) {
  test::TempDir dir("cli_cfg");
  test::write_file(dir.file("c.jsonl"), kCorpus);
  test::write_file(dir.file("config.json"), R"({"epoch": 2})");
  ASSERT_EQ(run({"build-vocab", "--input", dir.file("c.jsonl"), "--out", dir.file("v.txt")}).code, 0);
  ASSERT_EQ(run({"make-oracle", "--input", dir.file("c.jsonl"), "--out", dir.file("l.jsonl")}).code, 0);
  const CliResult r = run({"train", "--config", dir.file("config.json"), "--corpus", dir.file("c.jsonl"), "--labels",
                     dir.file("l.jsonl"), "--vocab", dir.file("v.txt"), "--out-dir", dir.file("run")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("epoch"), std::string::npos);
}
