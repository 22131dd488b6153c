#pragma once

// Checkpoint directory layout:
//   manifest.json      format version, model config, tensor names/shapes,
//                      vocabulary hash, free-form hyperparameters
//   <tensor>.f32       raw little-endian float32 values, row-major
//   vocab.txt          vocabulary the model was trained with (optional)

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "neusum/corpus.hpp"
#include "neusum/error.hpp"
#include "neusum/model.hpp"

namespace neusum {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  nlohmann::json manifest;
  std::optional<Vocabulary> vocab;
};

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  return v;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
  const ModelDims& d = c.dims;
  return {{"vocab", d.vocab},
          {"embedding", d.embedding},
          {"sentence_hidden", d.sentence_hidden},
          {"document_hidden", d.document_hidden},
          {"extractor_hidden", d.extractor_hidden},
          {"scorer_hidden", d.scorer_hidden},
          {"sentence_dropout", c.sentence_dropout},
          {"document_dropout", c.document_dropout},
          {"train_embeddings", c.train_embeddings}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dims.vocab = j.at("vocab").get<std::size_t>();
  c.dims.embedding = j.at("embedding").get<std::size_t>();
  c.dims.sentence_hidden = j.at("sentence_hidden").get<std::size_t>();
  c.dims.document_hidden = j.at("document_hidden").get<std::size_t>();
  c.dims.extractor_hidden = j.at("extractor_hidden").get<std::size_t>();
  c.dims.scorer_hidden = j.at("scorer_hidden").get<std::size_t>();
  c.sentence_dropout = j.at("sentence_dropout").get<double>();
  c.document_dropout = j.at("document_dropout").get<double>();
  c.train_embeddings = j.at("train_embeddings").get<bool>();
  return c;
}

}  // namespace detail

inline std::string save_checkpoint(const ModelParams& params, const std::string& dir,
                                   const Vocabulary* vocab = nullptr,
                                   const nlohmann::json& hyperparameters = nlohmann::json::object()) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory", dir);

  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = detail::config_to_json(params.config);
  manifest["hyperparameters"] = hyperparameters;
  manifest["vocabulary_hash"] = vocab ? detail::hex64(vocab->hash()) : "";
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params.named()) {
    const std::string file = name + ".f32";
    const std::string path = (fs::path(dir) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write tensor blob", path);
    std::vector<char> bytes(t->size() * 4);
    for (std::size_t i = 0; i < t->size(); ++i) {
      const float f = static_cast<float>((*t)[i]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      bits = detail::to_little_endian(bits);
      std::memcpy(bytes.data() + 4 * i, &bits, 4);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write on tensor blob", path);
    tensors.push_back({{"name", name}, {"shape", t->shape()}, {"file", file}});
  }
  manifest["tensors"] = tensors;
  if (vocab) save_vocab((fs::path(dir) / "vocab.txt").string(), *vocab);
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ofstream mout(manifest_path);
  if (!mout) throw IoError("cannot write manifest", manifest_path);
  mout << manifest.dump(2) << '\n';
  return dir;
}

inline Checkpoint load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ifstream min(manifest_path);
  if (!min) throw IoError("cannot open checkpoint manifest", manifest_path);
  Checkpoint ck;
  try {
    ck.manifest = nlohmann::json::parse(min);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(), 0);
  }
  const int version = ck.manifest.value("format_version", -1);
  if (version != kCheckpointVersion)
    throw Error("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kCheckpointVersion) + ")");
  ck.params = ModelParams::zeros(detail::config_from_json(ck.manifest.at("config")));

  const auto& entries = ck.manifest.at("tensors");
  auto named = ck.params.named();
  if (entries.size() != named.size())
    throw Error("checkpoint lists " + std::to_string(entries.size()) + " tensors, model has " +
                std::to_string(named.size()));
  for (std::size_t k = 0; k < named.size(); ++k) {
    const auto& e = entries[k];
    const std::string name = e.at("name").get<std::string>();
    Tensor& t = *named[k].second;
    if (name != named[k].first) throw Error("checkpoint tensor '" + name + "' where '" + named[k].first + "' expected");
    const Shape shape = e.at("shape").get<Shape>();
    if (shape != t.shape())
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_string(shape) + ", config implies " +
                       shape_string(t.shape()));
    const std::string path = (fs::path(dir) / e.at("file").get<std::string>()).string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tensor blob for '" + name + "'", path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != t.size() * 4)
      throw Error("tensor '" + name + "': blob holds " + std::to_string(bytes.size()) + " bytes, expected " +
                  std::to_string(t.size() * 4));
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + 4 * i, 4);
      bits = detail::to_little_endian(bits);
      float f;
      std::memcpy(&f, &bits, 4);
      t[i] = f;
    }
  }
  const auto vocab_path = fs::path(dir) / "vocab.txt";
  if (fs::exists(vocab_path)) {
    ck.vocab = load_vocab(vocab_path.string());
    const std::string expected = ck.manifest.value("vocabulary_hash", "");
    if (!expected.empty() && detail::hex64(ck.vocab->hash()) != expected)
      throw Error("checkpoint vocabulary does not match the manifest hash");
  }
  return ck;
}

}  // namespace neusum
