#include <gtest/gtest.h>

#include <cmath>

#include "neusum/optim.hpp"

using namespace neusum;

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Tensor p = Tensor::vector({1.0, -2.0, 0.5});
  const Tensor g = Tensor::vector({0.3, -7.0, 1e-3});
  AdamState st(AdamConfig{});
  std::vector<Tensor*> ps{&p};
  std::vector<const Tensor*> gs{&g};
  adam_step(ps, gs, st);
  EXPECT_NEAR(p[0], 1.0 - 0.001, 1e-10);
  EXPECT_NEAR(p[1], -2.0 + 0.001, 1e-10);
  EXPECT_NEAR(p[2], 0.5 - 0.001 * 1e-3 / (1e-3 + 1e-8), 1e-12);
}

TEST(Adam, MatchesScalarReferenceOverSeveralSteps) {
  const AdamConfig c{0.01, 0.8, 0.95, 1e-6};
  Tensor p = Tensor::vector({0.7});
  AdamState st(c);
  double ref = 0.7, m = 0.0, v = 0.0;
  const double grads[] = {0.5, -0.2, 0.9, 0.0, -1.3};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    const Tensor gt = Tensor::vector({g});
    std::vector<Tensor*> ps{&p};
    std::vector<const Tensor*> gs{&gt};
    adam_step(ps, gs, st);
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    const double mh = m / (1 - std::pow(c.beta1, t));
    const double vh = v / (1 - std::pow(c.beta2, t));
    ref -= c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
    EXPECT_NEAR(p[0], ref, 1e-14) << "step " << t;
  }
}

TEST(Adam, MismatchedListsThrow) {
  Tensor p = Tensor::vector({1.0});
  const Tensor g = Tensor::vector({1.0, 2.0});
  AdamState st;
  std::vector<Tensor*> ps{&p};
  std::vector<const Tensor*> gs{&g};
  EXPECT_THROW(adam_step(ps, gs, st), Error);
}

TEST(Clip, ElementwiseClamp) {
  Tensor g = Tensor::vector({-9.0, -5.0, 0.1, 5.0, 12.0});
  std::vector<Tensor*> gs{&g};
  clip_gradients(gs);
  EXPECT_EQ(g, Tensor::vector({-5.0, -5.0, 0.1, 5.0, 5.0}));
}
