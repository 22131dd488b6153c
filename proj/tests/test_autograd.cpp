#include <gtest/gtest.h>

#include <cmath>

#include "neusum/autograd.hpp"
#include "neusum/grad_check.hpp"
#include "neusum/random.hpp"

using namespace neusum;

namespace {

// Numerical gradient check of a scalar function of one tensor built on a fresh tape.
template <class Build>
double check(Tensor& x, Build build) {
  Tensor g = Tensor::zeros_like(x);
  {
    Tape tape;
    Var v = tape.parameter(x, &g);
    tape.backward(build(tape, v));
  }
  auto loss = [&] {
    Tape tape;
    return build(tape, tape.parameter(x, nullptr)).scalar();
  };
  std::vector<Tensor*> params{&x};
  std::vector<Tensor> analytic{g};
  return grad_check(loss, params, analytic).max_relative_error;
}

Tensor random_tensor(Shape s, Rng& rng) {
  Tensor t(std::move(s));
  for (double& v : t.values()) v = rng.normal(0.0, 1.0);
  return t;
}

}  // namespace

TEST(Autograd, AffineTanhSigmoidDot) {
  Rng rng(3);
  Tensor w = random_tensor({3, 4}, rng);
  const Tensor x = random_tensor({4}, rng);
  const Tensor b = random_tensor({3}, rng);
  const Tensor u = random_tensor({3}, rng);
  auto build = [&](Tape& t, Var wv) {
    Var h = ops::tanh(ops::affine(wv, t.constant(x), t.constant(b)));
    Var z = ops::sigmoid(ops::mul(h, h));
    return ops::dot(z, t.constant(u));
  };
  EXPECT_LT(check(w, build), 1e-7);
}

TEST(Autograd, InputGradientThroughAffine) {
  Rng rng(4);
  const Tensor w = random_tensor({2, 3}, rng);
  Tensor x = random_tensor({3}, rng);
  const Tensor u = random_tensor({2}, rng);
  auto build = [&](Tape& t, Var xv) { return ops::dot(ops::tanh(ops::matvec(t.constant(w), xv)), t.constant(u)); };
  EXPECT_LT(check(x, build), 1e-7);
}

TEST(Autograd, ConcatOneMinusScaleStackSum) {
  Rng rng(5);
  Tensor x = random_tensor({3}, rng);
  auto build = [&](Tape& t, Var xv) {
    Var c = ops::concat(xv, ops::one_minus(ops::scale(xv, 2.5)));
    Var d = ops::scale_by(c, Tensor::vector({1, 2, 3, 4, 5, 6}));
    std::vector<Var> parts{ops::dot(d, d), ops::dot(c, t.constant(Tensor::vector({1, -1, 1, -1, 1, -1})))};
    Var s = ops::stack(parts);
    std::vector<Var> again{ops::dot(s, s), ops::dot(s, t.constant(Tensor::vector({0.5, -0.25})))};
    return ops::sum(again);
  };
  EXPECT_LT(check(x, build), 1e-7);
}

TEST(Autograd, RowLookupScattersIntoTable) {
  Rng rng(6);
  Tensor table = random_tensor({4, 3}, rng);
  Tensor g = Tensor::zeros_like(table);
  Tape tape;
  Var tv = tape.parameter(table, &g);
  Var r = ops::row(tv, 2);
  Var r2 = ops::row(tv, 2);
  tape.backward(ops::dot(r, r2));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g.at(i, j), i == 2 ? 2.0 * table.at(2, j) : 0.0);
}

TEST(Autograd, FrozenParameterGetsNoGradient) {
  Tensor w = Tensor::matrix(1, 1, {2.0});
  Tensor x = Tensor::vector({3.0});
  Tensor gx = Tensor::zeros_like(x);
  Tape tape;
  Var wv = tape.parameter(w, nullptr);
  Var xv = tape.parameter(x, &gx);
  EXPECT_FALSE(tape.requires_grad(wv));
  tape.backward(ops::matvec(wv, xv));
  EXPECT_DOUBLE_EQ(gx[0], 2.0);
}

TEST(Autograd, GradientsAccumulateIntoSink) {
  Tensor x = Tensor::vector({1.5});
  Tensor g = Tensor::vector({10.0});
  Tape tape;
  Var xv = tape.parameter(x, &g);
  tape.backward(ops::mul(xv, xv));
  EXPECT_DOUBLE_EQ(g[0], 13.0);
}

TEST(Autograd, BackwardTwiceThrows) {
  Tensor x = Tensor::vector({1.0});
  Tensor g = Tensor::zeros_like(x);
  Tape tape;
  Var l = ops::mul(tape.parameter(x, &g), tape.parameter(x, &g));
  tape.backward(l);
  EXPECT_THROW(tape.backward(l), Error);
}

TEST(Autograd, BackwardNeedsScalar) {
  Tensor x = Tensor::vector({1.0, 2.0});
  Tensor g = Tensor::zeros_like(x);
  Tape tape;
  EXPECT_THROW(tape.backward(tape.parameter(x, &g)), ShapeError);
}

TEST(Autograd, ShapeErrorsNameOperands) {
  Tape tape;
  Var a = tape.constant(Tensor::vector({1, 2}));
  Var b = tape.constant(Tensor::vector({1, 2, 3}));
  EXPECT_THROW(ops::add(a, b), ShapeError);
  EXPECT_THROW(ops::matvec(tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})), b), ShapeError);
}

TEST(KlDivergence, UniformModelAgainstOneHotIsLogTwo) {
  Tape tape;
  Var s = tape.constant(Tensor::vector({0.0, 0.0}));
  EXPECT_NEAR(ops::kl_divergence(s, {1.0, 0.0}, {true, true}).scalar(), std::log(2.0), 1e-15);
}

TEST(KlDivergence, ZeroWhenDistributionsMatch) {
  Tape tape;
  Var s = tape.constant(Tensor::vector({0.3, -1.0, 2.0}));
  const Tensor p = masked_softmax(s.value(), {true, true, true});
  const std::vector<double> q(p.values().begin(), p.values().end());
  EXPECT_NEAR(ops::kl_divergence(s, q, {true, true, true}).scalar(), 0.0, 1e-15);
  EXPECT_NEAR(ops::kl_divergence(s, q, {true, true, true}, ops::KlDirection::model_to_target).scalar(), 0.0, 1e-15);
}

TEST(KlDivergence, MaskedEntriesIgnored) {
  Tape tape;
  Var s = tape.constant(Tensor::vector({0.0, 50.0, 0.0}));
  EXPECT_NEAR(ops::kl_divergence(s, {0.5, 0.0, 0.5}, {true, false, true}).scalar(), 0.0, 1e-15);
}

TEST(KlDivergence, GradientsBothDirections) {
  Rng rng(8);
  Tensor x = random_tensor({4}, rng);
  const std::vector<double> q{0.1, 0.0, 0.6, 0.3};
  const std::vector<bool> mask{true, false, true, true};
  for (auto dir : {ops::KlDirection::target_to_model, ops::KlDirection::model_to_target}) {
    auto build = [&](Tape&, Var xv) { return ops::kl_divergence(ops::tanh(xv), q, mask, dir); };
    EXPECT_LT(check(x, build), 1e-7);
  }
}

TEST(KlDivergence, ReverseDirectionNeedsPositiveTarget) {
  Tape tape;
  Var s = tape.constant(Tensor::vector({0.0, 0.0}));
  EXPECT_THROW(ops::kl_divergence(s, {1.0, 0.0}, {true, true}, ops::KlDirection::model_to_target), Error);
}

TEST(Dropout, InvertedScalingAndEvalIdentity) {
  Rng rng(1);
  const Tensor x(Shape{20000}, 1.0);
  const Tensor y = dropout(x, 0.3, true, rng);
  double sum = 0.0;
  std::size_t zeros = 0;
  for (double v : y.values()) {
    sum += v;
    if (v == 0.0)
      ++zeros;
    else
      EXPECT_NEAR(v, 1.0 / 0.7, 1e-12);
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, 0.3, 0.02);
  EXPECT_NEAR(sum / 20000.0, 1.0, 0.03);
  EXPECT_EQ(dropout(x, 0.3, false, rng), x);
}

TEST(Xavier, VarianceMatchesFanSum) {
  Rng rng(2);
  const Tensor w = xavier_gaussian({100, 300}, rng);
  double s = 0.0, s2 = 0.0;
  for (double v : w.values()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(w.size());
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var, 2.0 / 400.0, 0.05 * 2.0 / 400.0);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(GradCheck, DetectsWrongGradient) {
  Tensor x = Tensor::vector({1.0, 2.0});
  std::vector<Tensor*> params{&x};
  std::vector<Tensor> wrong{Tensor::vector({2.0, 5.0})};
  auto loss = [&] { return x[0] * x[0] + x[1] * x[1]; };
  const auto r = grad_check(loss, params, wrong);
  EXPECT_NEAR(r.max_relative_error, 1.0 / 5.0, 1e-6);
  std::vector<Tensor> right{Tensor::vector({2.0, 4.0})};
  EXPECT_LT(grad_check(loss, params, right).max_relative_error, 1e-8);
}
