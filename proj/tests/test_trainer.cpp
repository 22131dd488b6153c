#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "neusum/inference.hpp"
#include "neusum/trainer.hpp"
#include "test_util.hpp"

using namespace neusum;

namespace {

// Documents whose oracle sentence carries the marker token "key".
std::vector<Document> marker_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Document> docs;
  const std::vector<std::string> filler{"the", "a", "of", "in", "to", "was", "is", "on"};
  for (std::size_t d = 0; d < n; ++d) {
    Document doc;
    doc.id = "doc" + std::to_string(d);
    const std::size_t len = 3 + rng.next() % 3;
    const std::size_t key = rng.next() % len;
    for (std::size_t s = 0; s < len; ++s) {
      Tokens t;
      for (int w = 0; w < 3; ++w) t.push_back(filler[rng.next() % filler.size()]);
      if (s == key) t = {"key", "fact", "here"};
      doc.sentences.push_back(t);
    }
    doc.reference = {{"key", "fact", "here"}};
    docs.push_back(doc);
  }
  return docs;
}

struct Fixture {
  std::vector<Document> docs;
  Vocabulary vocab;
  std::vector<TrainingExample> examples;
};

Fixture make_fixture(std::size_t n, std::uint64_t seed) {
  Fixture s;
  s.docs = marker_corpus(n, seed);
  s.vocab = build_vocab(s.docs);
  std::vector<LabelRecord> labels;
  for (const auto& d : s.docs) {
    const OracleLabels l = best_combination(d);
    labels.push_back(make_label_record(d, l, build_training_targets(d, l), GainMetric::rouge2(), 20.0));
  }
  s.examples = make_examples(s.docs, labels, s.vocab).examples;
  return s;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.dims = ModelDims::uniform(0, 6);
  c.batch_size = 4;
  c.epochs = 3;
  c.validation_interval = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(TrainConfig, JsonRoundTripAndUnknownKey) {
  TrainConfig c = toy_config();
  c.kl_direction = ops::KlDirection::model_to_target;
  c.clip_lo = -2;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"learnin_rate": 0.1})")), Error);
  EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"batch_size": 0})")), Error);
  EXPECT_THROW(train_config_from_json(nlohmann::json::parse(R"({"kl_direction": "sideways"})")), Error);
  const TrainConfig d = train_config_from_json(nlohmann::json::object());
  EXPECT_EQ(d.batch_size, 8u);
  EXPECT_EQ(d.adam.learning_rate, 0.001);
  EXPECT_EQ(d.clip_hi, 5.0);
}

TEST(MakeExamples, MissingLabelsListed) {
  const Fixture s = make_fixture(3, 1);
  try {
    make_examples(s.docs, {}, s.vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("doc1"), std::string::npos);
  }
  LabelRecord empty;
  empty.id = "doc0";
  std::vector<LabelRecord> labels{empty};
  const std::vector<Document> one{s.docs[0]};
  EXPECT_EQ(make_examples(one, labels, s.vocab).skipped_empty, 1u);
}

TEST(Train, SameSeedSameTrajectory) {
  const Fixture s = make_fixture(6, 2);
  const TrainConfig c = toy_config();
  const TrainResult a = train(c, s.examples, {}, s.vocab);
  const TrainResult b = train(c, s.examples, {}, s.vocab);
  EXPECT_EQ(a.log.csv(false), b.log.csv(false));
  const auto pa = a.final_params.named();
  const auto pb = b.final_params.named();
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_EQ(*pa[k].second, *pb[k].second) << pa[k].first;
}

TEST(Train, ThreadCountDoesNotChangeResult) {
  const Fixture s = make_fixture(6, 3);
  const TrainConfig c = toy_config();
  setenv("NEUSUM_THREADS", "1", 1);
  const TrainResult a = train(c, s.examples, {}, s.vocab);
  setenv("NEUSUM_THREADS", "3", 1);
  const TrainResult b = train(c, s.examples, {}, s.vocab);
  unsetenv("NEUSUM_THREADS");
  EXPECT_EQ(a.log.csv(false), b.log.csv(false));
  EXPECT_EQ(a.final_params.w_s, b.final_params.w_s);
}

TEST(Train, LogScheduleAndBestCheckpoint) {
  const Fixture s = make_fixture(6, 4);
  test::TempDir dir("train");
  TrainConfig c = toy_config();
  c.checkpoint_dir = dir.path().string();
  const TrainResult r = train(c, s.examples, {}, s.vocab);
  // 6 docs / batch 4 = 2 steps per epoch, 3 epochs, records every 2 steps.
  ASSERT_EQ(r.log.records.size(), 3u);
  EXPECT_EQ(r.log.records.back().step, 6u);
  for (const auto& rec : r.log.records) {
    EXPECT_TRUE(std::isfinite(rec.loss));
    EXPECT_LE(r.best_val_loss, rec.val_loss);
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "best" / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "last" / "manifest.json"));
  const std::string log = test::read_file((dir.path() / "train_log.csv").string());
  EXPECT_EQ(log.rfind("step,loss,val_loss,seconds\n", 0), 0u);
  const Checkpoint best = load_checkpoint((dir.path() / "best").string());
  EXPECT_NEAR(mean_loss(best.params, s.examples), r.best_val_loss, 1e-4);
}

TEST(Train, FrozenEmbeddingsUnchanged) {
  const Fixture s = make_fixture(4, 5);
  TrainConfig c = toy_config();
  c.epochs = 2;
  Rng rng(9);
  EmbeddingTable table = random_embeddings(s.vocab, 6, rng);
  const TrainResult r = train(c, s.examples, {}, s.vocab, &table);
  EXPECT_EQ(r.final_params.embedding, table.matrix);
  c.train_embeddings = true;
  const TrainResult u = train(c, s.examples, {}, s.vocab, &table);
  EXPECT_NE(u.final_params.embedding, table.matrix);
}

TEST(Train, NonFiniteLossNamesBatch) {
  const Fixture s = make_fixture(4, 6);
  TrainConfig c = toy_config();
  Rng rng(9);
  EmbeddingTable table = random_embeddings(s.vocab, 6, rng);
  table.matrix.fill(std::nan(""));
  try {
    train(c, s.examples, {}, s.vocab, &table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("batch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, LossFallsOnMarkerCorpus) {
  const Fixture s = make_fixture(8, 7);
  TrainConfig c = toy_config();
  c.epochs = 30;
  c.batch_size = 2;
  c.validation_interval = 1000;
  c.sentence_dropout = 0.0;
  c.document_dropout = 0.0;
  const TrainResult r = train(c, s.examples, {}, s.vocab);
  EXPECT_LT(r.log.records.back().val_loss, 0.5 * r.initial_val_loss);
}
