#include <gtest/gtest.h>

#include <filesystem>

#include "neusum/checkpoint.hpp"
#include "neusum/inference.hpp"
#include "test_util.hpp"

using namespace neusum;

namespace {

ModelParams model(std::uint64_t seed) {
  Rng rng(seed);
  ModelConfig cfg;
  cfg.dims = ModelDims::uniform(9, 3);
  cfg.dims.scorer_hidden = 5;
  return ModelParams::initialize(cfg, rng);
}

Vocabulary vocab() {
  Vocabulary v;
  for (const char* t : {"a", "b", "c", "d", "e", "f", "g"}) v.add(t);
  return v;
}

}  // namespace

TEST(Checkpoint, RoundTripEqualsFloat32Values) {
  test::TempDir dir("ck");
  const ModelParams p = model(1);
  const Vocabulary v = vocab();
  save_checkpoint(p, dir.file("m"), &v, {{"note", "x"}});
  const Checkpoint ck = load_checkpoint(dir.file("m"));
  EXPECT_EQ(ck.params.config.dims, p.config.dims);
  ASSERT_TRUE(ck.vocab.has_value());
  EXPECT_EQ(*ck.vocab, v);
  EXPECT_EQ(ck.manifest.at("hyperparameters").at("note"), "x");
  const auto a = p.named();
  const auto b = ck.params.named();
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].first, b[k].first);
    for (std::size_t i = 0; i < a[k].second->size(); ++i)
      ASSERT_EQ((*b[k].second)[i], static_cast<double>(static_cast<float>((*a[k].second)[i]))) << a[k].first;
  }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  test::TempDir dir("ck2");
  save_checkpoint(model(2), dir.file("one"));
  save_checkpoint(load_checkpoint(dir.file("one")).params, dir.file("two"));
  for (const auto& entry : std::filesystem::directory_iterator(dir.path() / "one")) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(test::read_file(entry.path().string()), test::read_file((dir.path() / "two" / name).string())) << name;
  }
}

TEST(Checkpoint, TruncatedBlobNamesTensor) {
  test::TempDir dir("ck3");
  save_checkpoint(model(3), dir.file("m"));
  const std::string blob = dir.file("m/scorer.w_q.f32");
  std::string bytes = test::read_file(blob);
  bytes.resize(bytes.size() - 3);
  test::write_file(blob, bytes);
  try {
    load_checkpoint(dir.file("m"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("scorer.w_q"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, VersionAndShapeMismatch) {
  test::TempDir dir("ck4");
  save_checkpoint(model(4), dir.file("m"));
  const std::string mpath = dir.file("m/manifest.json");
  auto manifest = nlohmann::json::parse(test::read_file(mpath));

  auto bad_version = manifest;
  bad_version["format_version"] = 99;
  test::write_file(mpath, bad_version.dump());
  EXPECT_THROW(load_checkpoint(dir.file("m")), Error);

  auto bad_shape = manifest;
  bad_shape["tensors"][3]["shape"] = {7, 7};
  test::write_file(mpath, bad_shape.dump());
  EXPECT_THROW(load_checkpoint(dir.file("m")), ShapeError);

  EXPECT_THROW(load_checkpoint(dir.file("missing")), IoError);
}

TEST(Checkpoint, VocabularyHashChecked) {
  test::TempDir dir("ck5");
  const Vocabulary v = vocab();
  save_checkpoint(model(5), dir.file("m"), &v);
  test::write_file(dir.file("m/vocab.txt"), "a\nb\nc\nd\ne\nf\nz\n");
  EXPECT_THROW(load_checkpoint(dir.file("m")), Error);
}

TEST(Checkpoint, InferenceSurvivesRoundTrip) {
  test::TempDir dir("ck6");
  const ModelParams p = model(6);
  save_checkpoint(p, dir.file("m"));
  const ModelParams q = load_checkpoint(dir.file("m")).params;
  const EncodedDoc doc{{2, 3, 4}, {5, 6}, {7, 8, 2}, {3}};
  const Extraction a = extract(p, doc, 3);
  const Extraction b = extract(q, doc, 3);
  EXPECT_EQ(a.selected, b.selected);
  for (std::size_t t = 0; t < a.scores.size(); ++t) EXPECT_NEAR(a.scores[t], b.scores[t], 1e-5);
}
