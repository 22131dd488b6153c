#pragma once

// Hierarchical encoder + stepwise extractor.
//
//   words  --BiGRU-->  sentence vector  s~_j = [bwd h_1 ; fwd h_n]
//   s~_1..L --BiGRU--> document-level   s_i  = [fwd s_i ; bwd s_i]
//   h_0 = tanh(W_m bwd_s_1 + b_m)
//   h_t = GRU(s_{t-1}, h_{t-1}),  s_0 = 0
//   delta_t(i) = w_s . tanh(W_q h_t + W_d s_i + b)
//
// Training minimizes the KL divergence between softmax(delta_t) over the
// still-selectable sentences and the oracle gain distribution Q_t, feeding
// the oracle's pick back in as s_{t-1} (teacher forcing).

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "neusum/autograd.hpp"
#include "neusum/corpus.hpp"
#include "neusum/error.hpp"
#include "neusum/oracle.hpp"
#include "neusum/random.hpp"
#include "neusum/tensor.hpp"

namespace neusum {

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embedding = 50;
  std::size_t sentence_hidden = 256;
  std::size_t document_hidden = 256;
  std::size_t extractor_hidden = 256;
  std::size_t scorer_hidden = 256;

  // Every width set to `d` (used by gradient checks and toy models).
  static ModelDims uniform(std::size_t vocab, std::size_t d) { return {vocab, d, d, d, d, d}; }
  bool operator==(const ModelDims&) const = default;
};

struct ModelConfig {
  ModelDims dims;
  double sentence_dropout = 0.3;
  double document_dropout = 0.2;
  bool train_embeddings = false;
};

struct GruParams {
  Tensor w_z, w_r, w_h;  // hidden x (input + hidden)
  Tensor b_z, b_r, b_h;  // hidden

  static GruParams zeros(std::size_t input, std::size_t hidden) {
    const Shape w{hidden, input + hidden}, b{hidden};
    return {Tensor(w), Tensor(w), Tensor(w), Tensor(b), Tensor(b), Tensor(b)};
  }
  static GruParams xavier(std::size_t input, std::size_t hidden, Rng& rng) {
    GruParams g = zeros(input, hidden);
    g.w_z = xavier_gaussian(g.w_z.shape(), rng);
    g.w_r = xavier_gaussian(g.w_r.shape(), rng);
    g.w_h = xavier_gaussian(g.w_h.shape(), rng);
    return g;
  }
  std::size_t hidden() const { return w_z.rows(); }
  std::size_t input() const { return w_z.cols() - w_z.rows(); }
};

struct ModelParams {
  ModelConfig config;
  Tensor embedding;  // vocab x E
  GruParams sentence_fwd, sentence_bwd;
  GruParams document_fwd, document_bwd;
  GruParams extractor;
  Tensor w_m, b_m;  // extractor init from the document backward state
  Tensor w_q, w_d, b_score, w_s;

  // Shapes only, all zero.
  static ModelParams zeros(const ModelConfig& cfg) {
    const ModelDims& d = cfg.dims;
    ModelParams p;
    p.config = cfg;
    p.embedding = Tensor({d.vocab, d.embedding});
    p.sentence_fwd = GruParams::zeros(d.embedding, d.sentence_hidden);
    p.sentence_bwd = GruParams::zeros(d.embedding, d.sentence_hidden);
    p.document_fwd = GruParams::zeros(2 * d.sentence_hidden, d.document_hidden);
    p.document_bwd = GruParams::zeros(2 * d.sentence_hidden, d.document_hidden);
    p.extractor = GruParams::zeros(2 * d.document_hidden, d.extractor_hidden);
    p.w_m = Tensor({d.extractor_hidden, d.document_hidden});
    p.b_m = Tensor({d.extractor_hidden});
    p.w_q = Tensor({d.scorer_hidden, d.extractor_hidden});
    p.w_d = Tensor({d.scorer_hidden, 2 * d.document_hidden});
    p.b_score = Tensor({d.scorer_hidden});
    p.w_s = Tensor({d.scorer_hidden});
    return p;
  }

  // Xavier-Gaussian weights, zero biases. `embeddings` replaces the random table when given.
  static ModelParams initialize(const ModelConfig& cfg, Rng& rng, const EmbeddingTable* embeddings = nullptr) {
    const ModelDims& d = cfg.dims;
    ModelParams p = zeros(cfg);
    if (embeddings) {
      if (embeddings->matrix.shape() != p.embedding.shape())
        throw ShapeError("embedding table " + shape_string(embeddings->matrix.shape()) + " vs model " +
                         shape_string(p.embedding.shape()));
      p.embedding = embeddings->matrix;
    } else {
      p.embedding = xavier_gaussian(p.embedding.shape(), rng);
    }
    p.sentence_fwd = GruParams::xavier(d.embedding, d.sentence_hidden, rng);
    p.sentence_bwd = GruParams::xavier(d.embedding, d.sentence_hidden, rng);
    p.document_fwd = GruParams::xavier(2 * d.sentence_hidden, d.document_hidden, rng);
    p.document_bwd = GruParams::xavier(2 * d.sentence_hidden, d.document_hidden, rng);
    p.extractor = GruParams::xavier(2 * d.document_hidden, d.extractor_hidden, rng);
    p.w_m = xavier_gaussian(p.w_m.shape(), rng);
    p.w_q = xavier_gaussian(p.w_q.shape(), rng);
    p.w_d = xavier_gaussian(p.w_d.shape(), rng);
    p.w_s = xavier_gaussian({1, d.scorer_hidden}, rng);
    p.w_s = Tensor({d.scorer_hidden}, std::vector<double>(p.w_s.values().begin(), p.w_s.values().end()));
    return p;
  }

  ModelParams zeros_like() const { return zeros(config); }

  // Zero gradients; a frozen embedding gets an empty 0 x E placeholder.
  ModelParams gradient_buffer() const {
    ModelParams g = zeros(config);
    if (!config.train_embeddings) g.embedding = Tensor({0, config.dims.embedding});
    return g;
  }

  // Every tensor with a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named() {
    std::vector<std::pair<std::string, Tensor*>> out{{"embedding", &embedding}};
    auto gru = [&out](const std::string& prefix, GruParams& g) {
      out.insert(out.end(), {{prefix + ".w_z", &g.w_z},
                             {prefix + ".w_r", &g.w_r},
                             {prefix + ".w_h", &g.w_h},
                             {prefix + ".b_z", &g.b_z},
                             {prefix + ".b_r", &g.b_r},
                             {prefix + ".b_h", &g.b_h}});
    };
    gru("sentence_encoder.forward", sentence_fwd);
    gru("sentence_encoder.backward", sentence_bwd);
    gru("document_encoder.forward", document_fwd);
    gru("document_encoder.backward", document_bwd);
    gru("extractor", extractor);
    out.insert(out.end(), {{"init.w_m", &w_m},
                           {"init.b_m", &b_m},
                           {"scorer.w_q", &w_q},
                           {"scorer.w_d", &w_d},
                           {"scorer.b", &b_score},
                           {"scorer.w_s", &w_s}});
    return out;
  }
  std::vector<std::pair<std::string, const Tensor*>> named() const {
    auto mut = const_cast<ModelParams*>(this)->named();
    return {mut.begin(), mut.end()};
  }
  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
  }
  void set_zero() {
    for (Tensor* t : tensors()) t->fill(0.0);
  }
  ModelParams& operator+=(const ModelParams& other) {
    auto mine = named();
    auto theirs = other.named();
    for (std::size_t i = 0; i < mine.size(); ++i) *mine[i].second += *theirs[i].second;
    return *this;
  }
  ModelParams& operator*=(double s) {
    for (Tensor* t : tensors()) *t *= s;
    return *this;
  }
};

// Parameters bound into one tape. With a gradient sink, gradients of the
// trainable tensors land there on backward().
struct BoundGru {
  Var w_z, w_r, w_h, b_z, b_r, b_h;
};

class BoundModel {
 public:
  BoundModel(Tape& tape, const ModelParams& params, ModelParams* grads = nullptr)
      : tape_(tape), params_(params) {
    auto p = params.named();
    std::vector<std::pair<std::string, Tensor*>> g;
    if (grads) g = grads->named();
    std::vector<Var> vars;
    for (std::size_t i = 0; i < p.size(); ++i) {
      Tensor* sink = grads ? g[i].second : nullptr;
      if (i == 0 && !params.config.train_embeddings) sink = nullptr;
      vars.push_back(tape.parameter(*p[i].second, sink));
    }
    std::size_t k = 0;
    embedding = vars[k++];
    for (BoundGru* b : {&sentence_fwd, &sentence_bwd, &document_fwd, &document_bwd, &extractor}) {
      *b = {vars[k], vars[k + 1], vars[k + 2], vars[k + 3], vars[k + 4], vars[k + 5]};
      k += 6;
    }
    w_m = vars[k++];
    b_m = vars[k++];
    w_q = vars[k++];
    w_d = vars[k++];
    b_score = vars[k++];
    w_s = vars[k++];
  }

  Tape& tape() const { return tape_; }
  const ModelParams& params() const { return params_; }
  const ModelConfig& config() const { return params_.config; }

  Var embedding;
  BoundGru sentence_fwd, sentence_bwd, document_fwd, document_bwd, extractor;
  Var w_m, b_m, w_q, w_d, b_score, w_s;

 private:
  Tape& tape_;
  const ModelParams& params_;
};

// z = sig(W_z[x,h] + b_z); r = sig(W_r[x,h] + b_r);
// h~ = tanh(W_h[x, r*h] + b_h); h' = (1 - z) * h + z * h~
inline Var gru_cell(Var x, Var h, const BoundGru& g) {
  using namespace ops;
  const Tensor& w = g.w_z.value();
  if (x.value().size() + h.value().size() != w.cols() || h.value().size() != w.rows())
    throw ShapeError("gru_cell: input " + shape_string(x.value().shape()) + " and hidden " +
                     shape_string(h.value().shape()) + " do not fit weights " + shape_string(w.shape()));
  const Var xh = concat(x, h);
  const Var z = sigmoid(affine(g.w_z, xh, g.b_z));
  const Var r = sigmoid(affine(g.w_r, xh, g.b_r));
  const Var candidate = tanh(affine(g.w_h, concat(x, mul(r, h)), g.b_h));
  return add(mul(one_minus(z), h), mul(z, candidate));
}

inline Tensor gru_cell(const Tensor& x, const Tensor& h, const GruParams& w) {
  Tape tape;
  BoundGru g{tape.parameter(w.w_z, nullptr), tape.parameter(w.w_r, nullptr), tape.parameter(w.w_h, nullptr),
             tape.parameter(w.b_z, nullptr), tape.parameter(w.b_r, nullptr), tape.parameter(w.b_h, nullptr)};
  return gru_cell(tape.constant(x), tape.constant(h), g).value();
}

struct ForwardOptions {
  bool training = false;  // enables dropout
  ops::KlDirection kl_direction = ops::KlDirection::target_to_model;
};

// s~ = [backward state after reading word 1 ; forward state after word n].
inline Var encode_sentence(const BoundModel& m, const std::vector<int>& word_ids, bool training, Rng& rng) {
  if (word_ids.empty()) throw Error("encode_sentence: empty sentence");
  Tape& tape = m.tape();
  const std::size_t hidden = m.params().sentence_fwd.hidden();
  const std::size_t vocab = m.params().embedding.rows();
  std::vector<Var> words;
  words.reserve(word_ids.size());
  for (int id : word_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw Error("encode_sentence: word id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
    words.push_back(ops::row(m.embedding, static_cast<std::size_t>(id)));
  }
  Var fwd = tape.constant(Tensor({hidden}));
  for (const Var& w : words) fwd = gru_cell(w, fwd, m.sentence_fwd);
  Var bwd = tape.constant(Tensor({hidden}));
  for (auto it = words.rbegin(); it != words.rend(); ++it) bwd = gru_cell(*it, bwd, m.sentence_bwd);
  return ops::dropout(ops::concat(bwd, fwd), m.config().sentence_dropout, training, rng);
}

struct EncodedDocument {
  std::vector<Var> sentences;  // s_i = [fwd ; bwd], L of them
  Var backward_first;          // backward document state at sentence 1
};

inline EncodedDocument encode_document(const BoundModel& m, const EncodedDoc& doc, bool training, Rng& rng) {
  if (doc.empty()) throw Error("encode_document: document has no sentences");
  Tape& tape = m.tape();
  const std::size_t hidden = m.params().document_fwd.hidden();
  std::vector<Var> sent;
  sent.reserve(doc.size());
  for (const auto& s : doc) sent.push_back(encode_sentence(m, s, training, rng));

  const std::size_t n = sent.size();
  std::vector<Var> fwd(n), bwd(n);
  Var h = tape.constant(Tensor({hidden}));
  for (std::size_t i = 0; i < n; ++i) fwd[i] = h = gru_cell(sent[i], h, m.document_fwd);
  h = tape.constant(Tensor({hidden}));
  for (std::size_t i = n; i-- > 0;) bwd[i] = h = gru_cell(sent[i], h, m.document_bwd);

  EncodedDocument out;
  out.backward_first = bwd[0];
  for (std::size_t i = 0; i < n; ++i)
    out.sentences.push_back(ops::dropout(ops::concat(fwd[i], bwd[i]), m.config().document_dropout, training, rng));
  return out;
}

struct ExtractorState {
  Var hidden;
  std::vector<std::size_t> selected;
  std::vector<bool> mask;           // false exactly on selected sentences
  std::vector<Var> projected;       // W_d s_i + b, cached per document
};

inline ExtractorState init_extractor(const BoundModel& m, const EncodedDocument& enc) {
  ExtractorState st;
  st.hidden = ops::tanh(ops::affine(m.w_m, enc.backward_first, m.b_m));
  st.mask.assign(enc.sentences.size(), true);
  for (const Var& s : enc.sentences) st.projected.push_back(ops::affine(m.w_d, s, m.b_score));
  return st;
}

// Advances the extractor GRU with `prev` (s_{t-1}, or zeros at t = 1) and
// scores every sentence. Masking is left to the caller.
inline Var score_step(const BoundModel& m, ExtractorState& st, Var prev) {
  using namespace ops;
  st.hidden = gru_cell(prev, st.hidden, m.extractor);
  const Var query = matvec(m.w_q, st.hidden);
  std::vector<Var> scores;
  scores.reserve(st.projected.size());
  for (const Var& key : st.projected) scores.push_back(dot(m.w_s, tanh(add(query, key))));
  return stack(scores);
}

inline Var zero_sentence(const BoundModel& m) {
  return m.tape().constant(Tensor({2 * m.params().document_fwd.hidden()}));
}

// Softmax of the scores over selectable sentences.
inline std::vector<double> predict_distribution(std::span<const double> scores, const std::vector<bool>& mask) {
  return masked_softmax(scores, mask);
}

// KL between two distributions over unmasked entries, 0 log 0 = 0.
inline double kl_loss(const std::vector<double>& p, const std::vector<double>& q, const std::vector<bool>& mask,
                      ops::KlDirection direction = ops::KlDirection::target_to_model) {
  if (p.size() != q.size() || p.size() != mask.size()) throw ShapeError("kl_loss: length mismatch");
  const auto& from = direction == ops::KlDirection::target_to_model ? q : p;
  const auto& to = direction == ops::KlDirection::target_to_model ? p : q;
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (mask[i] && from[i] > 0.0) total += from[i] * std::log(from[i] / to[i]);
  return total;
}

// Teacher-forced loss for one document: mean over steps of KL(step t).
inline Var forward_train(const BoundModel& m, const EncodedDoc& doc, const std::vector<StepTargets>& steps,
                         const ForwardOptions& opts, Rng& rng) {
  if (steps.empty()) throw Error("forward_train: no target steps");
  const EncodedDocument enc = encode_document(m, doc, opts.training, rng);
  ExtractorState st = init_extractor(m, enc);
  Var prev = zero_sentence(m);
  std::vector<Var> losses;
  for (const StepTargets& step : steps) {
    if (step.q.size() != doc.size() || step.mask.size() != doc.size())
      throw ShapeError("forward_train: step targets cover " + std::to_string(step.q.size()) + " sentences, document has " +
                       std::to_string(doc.size()));
    const Var scores = score_step(m, st, prev);
    losses.push_back(ops::kl_divergence(scores, step.q, step.mask, opts.kl_direction));
    if (step.oracle_pick >= doc.size()) throw Error("forward_train: oracle pick out of range");
    st.mask[step.oracle_pick] = false;
    st.selected.push_back(step.oracle_pick);
    prev = enc.sentences[step.oracle_pick];
  }
  return ops::scale(ops::sum(losses), 1.0 / static_cast<double>(losses.size()));
}

// Loss without gradients (dropout off).
inline double document_loss(const ModelParams& params, const EncodedDoc& doc, const std::vector<StepTargets>& steps,
                            ops::KlDirection direction = ops::KlDirection::target_to_model) {
  Tape tape;
  BoundModel m(tape, params);
  Rng rng(0);
  return forward_train(m, doc, steps, {false, direction}, rng).scalar();
}

// Loss with gradients added into `grads`.
inline double document_gradients(const ModelParams& params, const EncodedDoc& doc,
                                  const std::vector<StepTargets>& steps, const ForwardOptions& opts, Rng& rng,
                                  ModelParams& grads) {
  Tape tape;
  BoundModel m(tape, params, &grads);
  const Var loss = forward_train(m, doc, steps, opts, rng);
  tape.backward(loss);
  return loss.scalar();
}

}  // namespace neusum
