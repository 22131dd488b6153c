#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "neusum/checkpoint.hpp"
#include "neusum/corpus.hpp"
#include "neusum/model.hpp"
#include "neusum/optim.hpp"
#include "neusum/oracle.hpp"
#include "neusum/parallel.hpp"
#include "neusum/random.hpp"

namespace neusum {

struct TrainConfig {
  AdamConfig adam;
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  double sentence_dropout = 0.3;
  double document_dropout = 0.2;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double tau = 20.0;
  std::string gain_variant = "rouge-2";
  ops::KlDirection kl_direction = ops::KlDirection::target_to_model;
  std::string checkpoint_dir;          // empty: no checkpoints written
  std::size_t validation_interval = 100;  // optimizer steps between log records
  ModelDims dims;                      // vocab is filled from the vocabulary
  bool train_embeddings = false;
  std::size_t max_sentences = 80;
  std::size_t max_words = 100;
  std::string validation_corpus;       // optional; training set is used when empty
  std::string validation_labels;

  void validate() const {
    if (batch_size < 1) throw Error("train config: batch_size must be at least 1");
    if (!(adam.learning_rate > 0.0)) throw Error("train config: learning_rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
      throw Error("train config: Adam betas must lie in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw Error("train config: epsilon must be positive");
    if (!(clip_lo < clip_hi)) throw Error("train config: clip range must satisfy lo < hi");
    for (double p : {sentence_dropout, document_dropout})
      if (!(p >= 0.0 && p < 1.0)) throw Error("train config: dropout rates must lie in [0, 1)");
    if (!(tau >= 0.0)) throw Error("train config: tau must be non-negative");
    if (validation_interval < 1) throw Error("train config: validation_interval must be at least 1");
  }

  ModelConfig model_config(std::size_t vocab_size) const {
    ModelConfig c;
    c.dims = dims;
    c.dims.vocab = vocab_size;
    c.sentence_dropout = sentence_dropout;
    c.document_dropout = document_dropout;
    c.train_embeddings = train_embeddings;
    return c;
  }
};

inline std::string kl_direction_name(ops::KlDirection d) {
  return d == ops::KlDirection::target_to_model ? "target_to_model" : "model_to_target";
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"clip", {c.clip_lo, c.clip_hi}},
          {"sentence_dropout", c.sentence_dropout},
          {"document_dropout", c.document_dropout},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"tau", c.tau},
          {"gain_variant", c.gain_variant},
          {"kl_direction", kl_direction_name(c.kl_direction)},
          {"checkpoint_dir", c.checkpoint_dir},
          {"validation_interval", c.validation_interval},
          {"embedding_dim", c.dims.embedding},
          {"sentence_hidden", c.dims.sentence_hidden},
          {"document_hidden", c.dims.document_hidden},
          {"extractor_hidden", c.dims.extractor_hidden},
          {"scorer_hidden", c.dims.scorer_hidden},
          {"train_embeddings", c.train_embeddings},
          {"max_sentences", c.max_sentences},
          {"max_words", c.max_words},
          {"validation_corpus", c.validation_corpus},
          {"validation_labels", c.validation_labels}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = [] {
    std::vector<std::string> keys;
    const nlohmann::json defaults = to_json(TrainConfig{});
    for (const auto& [k, v] : defaults.items()) keys.push_back(k);
    return keys;
  }();
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw Error("train config: unknown key '" + k + "'");
  TrainConfig c;
  try {
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    if (j.contains("clip")) {
      const auto clip = j.at("clip").get<std::vector<double>>();
      if (clip.size() != 2) throw Error("train config: clip must be [lo, hi]");
      c.clip_lo = clip[0];
      c.clip_hi = clip[1];
    }
    c.sentence_dropout = j.value("sentence_dropout", c.sentence_dropout);
    c.document_dropout = j.value("document_dropout", c.document_dropout);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.tau = j.value("tau", c.tau);
    c.gain_variant = j.value("gain_variant", c.gain_variant);
    const std::string dir = j.value("kl_direction", kl_direction_name(c.kl_direction));
    if (dir == "target_to_model")
      c.kl_direction = ops::KlDirection::target_to_model;
    else if (dir == "model_to_target")
      c.kl_direction = ops::KlDirection::model_to_target;
    else
      throw Error("train config: kl_direction must be target_to_model or model_to_target");
    c.checkpoint_dir = j.value("checkpoint_dir", c.checkpoint_dir);
    c.validation_interval = j.value("validation_interval", c.validation_interval);
    c.dims.embedding = j.value("embedding_dim", c.dims.embedding);
    c.dims.sentence_hidden = j.value("sentence_hidden", c.dims.sentence_hidden);
    c.dims.document_hidden = j.value("document_hidden", c.dims.document_hidden);
    c.dims.extractor_hidden = j.value("extractor_hidden", c.dims.extractor_hidden);
    c.dims.scorer_hidden = j.value("scorer_hidden", c.dims.scorer_hidden);
    c.train_embeddings = j.value("train_embeddings", c.train_embeddings);
    c.max_sentences = j.value("max_sentences", c.max_sentences);
    c.max_words = j.value("max_words", c.max_words);
    c.validation_corpus = j.value("validation_corpus", c.validation_corpus);
    c.validation_labels = j.value("validation_labels", c.validation_labels);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open train config", path);
  try {
    return train_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed train config: ") + e.what(), 0);
  }
}

struct TrainRecord {
  std::size_t step = 0;
  double loss = 0.0;      // mean training loss since the previous record
  double val_loss = 0.0;
  double seconds = 0.0;   // wall clock since training started
};

struct TrainLog {
  std::vector<TrainRecord> records;

  // step,loss,val_loss,seconds. The seconds column is wall clock and is the
  // only non-reproducible field.
  std::string csv(bool include_seconds = true) const {
    std::ostringstream os;
    os << (include_seconds ? "step,loss,val_loss,seconds\n" : "step,loss,val_loss\n");
    os << std::setprecision(12);
    for (const auto& r : records) {
      os << r.step << ',' << r.loss << ',' << r.val_loss;
      if (include_seconds) os << ',' << std::fixed << std::setprecision(3) << r.seconds << std::defaultfloat << std::setprecision(12);
      os << '\n';
    }
    return os.str();
  }
};

struct TrainingExample {
  std::string id;
  EncodedDoc doc;
  std::vector<StepTargets> steps;
};

struct ExampleSet {
  std::vector<TrainingExample> examples;
  std::size_t skipped_empty = 0;  // documents whose oracle selected nothing
};

// Pairs documents with labels by id. Every document needs a label record.
inline ExampleSet make_examples(const std::vector<Document>& docs, const std::vector<LabelRecord>& labels,
                                const Vocabulary& vocab) {
  std::unordered_map<std::string, const LabelRecord*> by_id;
  for (const auto& l : labels) by_id[l.id] = &l;
  std::vector<std::string> missing;
  ExampleSet out;
  for (const auto& d : docs) {
    auto it = by_id.find(d.id);
    if (it == by_id.end()) {
      missing.push_back(d.id);
      continue;
    }
    const LabelRecord& rec = *it->second;
    if (rec.selected.empty()) {
      ++out.skipped_empty;
      continue;
    }
    TrainingExample ex{d.id, encode(d, vocab), rec.steps()};
    for (const auto& st : ex.steps)
      if (st.q.size() != ex.doc.size())
        throw Error("label '" + d.id + "' covers " + std::to_string(st.q.size()) + " sentences, document has " +
                    std::to_string(ex.doc.size()) + " (truncation settings differ?)");
    out.examples.push_back(std::move(ex));
  }
  if (!missing.empty()) {
    std::string msg = "no oracle labels for document id(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ... (" + std::to_string(missing.size()) + " total)";
    throw Error(msg);
  }
  return out;
}

inline double mean_loss(const ModelParams& params, const std::vector<TrainingExample>& set,
                        ops::KlDirection direction = ops::KlDirection::target_to_model) {
  if (set.empty()) return 0.0;
  std::vector<double> losses(set.size());
  parallel_for(set.size(), [&](std::size_t i) { losses[i] = document_loss(params, set[i].doc, set[i].steps, direction); });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(set.size());
}

struct TrainResult {
  ModelParams final_params;
  ModelParams best_params;
  double initial_val_loss = 0.0;  // validation loss before the first update
  double best_val_loss = 0.0;
  std::string best_checkpoint;  // empty when no checkpoint_dir is configured
  TrainLog log;
};

// Trainable (parameter, gradient) pairs; the embedding joins only when unfrozen.
inline void trainable_pairs(ModelParams& params, ModelParams& grads, std::vector<Tensor*>& p, std::vector<Tensor*>& g) {
  auto pn = params.named();
  auto gn = grads.named();
  for (std::size_t i = 0; i < pn.size(); ++i) {
    if (i == 0 && !params.config.train_embeddings) continue;
    p.push_back(pn[i].second);
    g.push_back(gn[i].second);
  }
}

namespace detail {
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Adam over mini-batches with elementwise clipping; logs and validates every
// `validation_interval` steps and after the last step, keeping the parameters
// with the lowest validation loss.
inline TrainResult train(const TrainConfig& config, const std::vector<TrainingExample>& train_set,
                         const std::vector<TrainingExample>& validation_set, const Vocabulary& vocab,
                         const EmbeddingTable* embeddings = nullptr) {
  config.validate();
  if (train_set.empty()) throw Error("train: no training examples");
  const auto& val = validation_set.empty() ? train_set : validation_set;
  const auto start = std::chrono::steady_clock::now();

  Rng rng(config.seed);
  TrainResult result;
  result.final_params = ModelParams::initialize(config.model_config(vocab.size()), rng, embeddings);
  ModelParams& params = result.final_params;
  AdamState adam(config.adam);

  const nlohmann::json hyper = to_json(config);
  auto save = [&](const ModelParams& p, const std::string& name) {
    if (config.checkpoint_dir.empty()) return std::string();
    return save_checkpoint(p, (std::filesystem::path(config.checkpoint_dir) / name).string(), &vocab, hyper);
  };

  result.initial_val_loss = mean_loss(params, val, config.kl_direction);
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches_per_epoch = (train_set.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches_per_epoch * config.epochs;

  std::size_t step = 0;
  double interval_loss = 0.0;
  std::size_t interval_docs = 0;

  auto checkpoint_if_due = [&](bool force) {
    if (!force && step % config.validation_interval != 0) return;
    if (interval_docs == 0) return;
    TrainRecord rec;
    rec.step = step;
    rec.loss = interval_loss / static_cast<double>(interval_docs);
    rec.val_loss = mean_loss(params, val, config.kl_direction);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(rec.val_loss)) throw Error("train: validation loss is not finite at step " + std::to_string(step));
    result.log.records.push_back(rec);
    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_params = params;
      result.best_checkpoint = save(params, "best");
    }
    interval_loss = 0.0;
    interval_docs = 0;
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(train_set.size(), lo + config.batch_size);
      const std::size_t n = hi - lo;
      std::vector<ModelParams> grads(n);
      std::vector<double> losses(n);
      parallel_for(n, [&](std::size_t j) {
        const std::size_t idx = order[lo + j];
        grads[j] = params.gradient_buffer();
        Rng doc_rng(detail::mix_seed(config.seed, (step + 1) * 1000003ULL + idx));
        losses[j] = document_gradients(params, train_set[idx].doc, train_set[idx].steps,
                                       {true, config.kl_direction}, doc_rng, grads[j]);
      });
      for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(losses[j]))
          throw Error("train: non-finite loss in batch " + std::to_string(step + 1) + " (document '" +
                      train_set[order[lo + j]].id + "')");
        interval_loss += losses[j];
      }
      interval_docs += n;
      ModelParams& total = grads[0];
      for (std::size_t j = 1; j < n; ++j) total += grads[j];
      total *= 1.0 / static_cast<double>(n);

      std::vector<Tensor*> p, g;
      trainable_pairs(params, total, p, g);
      clip_gradients(g, config.clip_lo, config.clip_hi);
      std::vector<const Tensor*> gc(g.begin(), g.end());
      adam_step(p, gc, adam);
      ++step;
      checkpoint_if_due(step == total_steps);
    }
  }
  if (result.log.records.empty()) throw Error("train: no optimizer steps were taken (epochs = 0?)");
  save(params, "last");
  if (!config.checkpoint_dir.empty()) {
    const auto log_path = std::filesystem::path(config.checkpoint_dir) / "train_log.csv";
    std::ofstream out(log_path);
    if (!out) throw IoError("cannot write train log", log_path.string());
    out << result.log.csv();
  }
  return result;
}

}  // namespace neusum
