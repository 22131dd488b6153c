#pragma once

// Finite-difference check of the full training loss on a small random model.

#include <string>
#include <vector>

#include "neusum/grad_check.hpp"
#include "neusum/model.hpp"
#include "neusum/oracle.hpp"
#include "neusum/random.hpp"

namespace neusum {

struct ToyProblem {
  ModelParams params;
  EncodedDoc doc;
  std::vector<StepTargets> steps;
};

// Random document of `sentences` x `words` over a small vocabulary, random
// weights (biases too) with every width `dim`, and one target step per
// sentence built from random gains.
inline ToyProblem make_toy_problem(std::size_t dim, std::uint64_t seed, std::size_t sentences = 2,
                                   std::size_t words = 3, double tau = 20.0) {
  Rng rng(seed);
  const std::size_t vocab = 2 + sentences * words;
  ModelConfig cfg;
  cfg.dims = ModelDims::uniform(vocab, dim);
  cfg.train_embeddings = true;
  ToyProblem toy{ModelParams::initialize(cfg, rng), {}, {}};
  for (Tensor* t : toy.params.tensors())
    if (t->rank() == 1)
      for (double& v : t->values()) v = rng.normal(0.0, 0.5);
  for (std::size_t s = 0; s < sentences; ++s) {
    std::vector<int> ids;
    for (std::size_t w = 0; w < words; ++w) ids.push_back(2 + static_cast<int>(rng.next() % (vocab - 2)));
    toy.doc.push_back(std::move(ids));
  }
  std::vector<bool> mask(sentences, true);
  std::vector<std::size_t> order(sentences);
  for (std::size_t i = 0; i < sentences; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (std::size_t pick : order) {
    StepTargets st;
    st.tau = tau;
    st.mask = mask;
    st.gains.assign(sentences, 0.0);
    for (std::size_t i = 0; i < sentences; ++i)
      if (mask[i]) st.gains[i] = rng.uniform() - 0.5;
    st.normalized = minmax_normalize(st.gains, mask);
    st.q = target_distribution(st.normalized, mask, tau);
    st.oracle_pick = pick;
    toy.steps.push_back(std::move(st));
    mask[pick] = false;
  }
  return toy;
}

struct NamedGradCheck {
  std::vector<std::string> names;
  GradCheckReport report;
};

// Default for model checks: four-point central stencil, h = 3e-3.
inline constexpr FiniteDifference kModelCheck{3e-3, Stencil::four_point};

inline NamedGradCheck check_model_gradients(ToyProblem& toy,
                                            ops::KlDirection direction = ops::KlDirection::target_to_model,
                                            const FiniteDifference& fd = kModelCheck) {
  ModelParams grads = toy.params.zeros_like();
  Rng rng(0);
  document_gradients(toy.params, toy.doc, toy.steps, {false, direction}, rng, grads);
  NamedGradCheck out;
  std::vector<Tensor*> params;
  std::vector<Tensor> analytic;
  auto pn = toy.params.named();
  auto gn = grads.named();
  for (std::size_t i = 0; i < pn.size(); ++i) {
    out.names.push_back(pn[i].first);
    params.push_back(pn[i].second);
    analytic.push_back(*gn[i].second);
  }
  out.report = grad_check([&] { return document_loss(toy.params, toy.doc, toy.steps, direction); }, params, analytic,
                          fd);
  return out;
}

}  // namespace neusum
