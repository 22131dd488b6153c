#pragma once

// Tape-based reverse-mode differentiation over Tensor values.
//
// A Tape records every operation of one forward computation. Parameters are
// bound by reference (no copy); their gradients are added into caller-owned
// sink tensors when backward() runs. A tape can be differentiated once.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "neusum/error.hpp"
#include "neusum/tensor.hpp"

namespace neusum {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  double scalar() const { return value()[0]; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  // Binds `value` by reference. A null sink makes the parameter frozen.
  Var parameter(const Tensor& value, Tensor* grad_sink) {
    if (grad_sink) value.check_same(*grad_sink, "parameter gradient sink");
    Node n;
    n.view = &value;
    n.sink = grad_sink;
    n.requires_grad = grad_sink != nullptr;
    return push(std::move(n));
  }

  // Records an op result. `backprop` runs only when some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backprop backprop) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backprop));
  }
  Var record(Tensor value, std::span<const Var> inputs, Backprop backprop) {
    Node n;
    n.owned = std::move(value);
    for (const Var& v : inputs) {
      if (&v.tape() != this) throw Error("autograd: operand recorded on a different tape");
      n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    }
    if (n.requires_grad) n.backprop = std::move(backprop);
    return push(std::move(n));
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.view ? *n.view : n.owned;
  }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  // Gradient accumulator for `v`, allocated on first use. Valid during backward().
  Tensor& grad(Var v) {
    Node& n = nodes_[v.id()];
    if (n.grad.empty() && !value(v.id()).empty()) n.grad = Tensor::zeros_like(value(v.id()));
    return n.grad;
  }

  void backward(Var loss) {
    if (consumed_) throw Error("autograd: backward called twice on the same tape");
    if (loss.value().size() != 1)
      throw ShapeError("autograd: backward needs a scalar loss, got " +
                       shape_string(loss.value().shape()));
    consumed_ = true;
    grad(loss)[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backprop) n.backprop(*this, n.grad);
      if (n.sink) *n.sink += n.grad;
    }
  }

 private:
  struct Node {
    Tensor owned;
    const Tensor* view = nullptr;
    Tensor grad;
    Tensor* sink = nullptr;
    bool requires_grad = false;
    Backprop backprop;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace ops {

namespace detail {
inline void require_vector(const Tensor& t, const char* op) {
  if (t.rank() != 1) throw ShapeError(std::string(op) + ": expected a vector, got " + shape_string(t.shape()));
}
}  // namespace detail

// W[m x n] * x[n] + b[m]; pass an empty Var for no bias.
inline Var affine(Var w, Var x, const Var* b = nullptr) {
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  detail::require_vector(X, "affine");
  Tensor out = matmul(W, X);
  if (b) {
    if (b->value().shape() != out.shape())
      throw ShapeError("affine: bias " + shape_string(b->value().shape()) + " vs output " +
                       shape_string(out.shape()));
    out += b->value();
  }
  const std::size_t m = W.rows(), n = W.cols();
  auto backprop = [w, x, b = b ? *b : Var(), has_bias = b != nullptr, m, n](Tape& t, const Tensor& g) {
    const Tensor& Wv = w.value();
    const Tensor& Xv = x.value();
    if (t.requires_grad(w)) {
      Tensor& gw = t.grad(w);
      for (std::size_t i = 0; i < m; ++i) {
        if (g[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) gw[i * n + j] += g[i] * Xv[j];
      }
    }
    if (t.requires_grad(x)) {
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < m; ++i) {
        if (g[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) gx[j] += Wv[i * n + j] * g[i];
      }
    }
    if (has_bias && t.requires_grad(b)) t.grad(b) += g;
  };
  if (b) return w.tape().record(std::move(out), {w, x, *b}, std::move(backprop));
  return w.tape().record(std::move(out), {w, x}, std::move(backprop));
}

inline Var affine(Var w, Var x, Var b) { return affine(w, x, &b); }
inline Var matvec(Var w, Var x) { return affine(w, x, nullptr); }

inline Var add(Var a, Var b) {
  Tensor out = neusum::add(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.grad(a) += g;
    if (t.requires_grad(b)) t.grad(b) += g;
  });
}

inline Var mul(Var a, Var b) {
  Tensor out = hadamard(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

// 1 - a, elementwise.
inline Var one_minus(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = 1.0 - v;
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

// Elementwise product with a constant tensor (dropout masks).
inline Var scale_by(Var a, Tensor factors) {
  Tensor out = hadamard(a.value(), factors);
  return a.tape().record(std::move(out), {a}, [a, f = std::move(factors)](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * f[i];
  });
}

inline Var scale(Var a, double s) {
  Tensor out = a.value();
  out *= s;
  return a.tape().record(std::move(out), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

inline Var sigmoid(Var a) {
  Tensor out = neusum::sigmoid(a.value());
  auto backprop = [a, out](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * out[i] * (1.0 - out[i]);
  };
  return a.tape().record(std::move(out), {a}, std::move(backprop));
}

inline Var tanh(Var a) {
  Tensor out = neusum::tanh(a.value());
  auto backprop = [a, out](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - out[i] * out[i]);
  };
  return a.tape().record(std::move(out), {a}, std::move(backprop));
}

inline Var concat(Var a, Var b) {
  Tensor out = neusum::concat(a.value(), b.value());
  const std::size_t na = a.value().size();
  return a.tape().record(std::move(out), {a, b}, [a, b, na](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

// Inner product of two vectors -> scalar.
inline Var dot(Var a, Var b) {
  a.value().check_same(b.value(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i] * b.value()[i];
  return a.tape().record(Tensor::vector({s}), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const double gs = g[0];
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gs * b.value()[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gs * a.value()[i];
    }
  });
}

// Row `r` of a matrix as a vector (embedding lookup).
inline Var row(Var table, std::size_t r) {
  const Tensor& m = table.value();
  if (m.rank() != 2 || r >= m.rows())
    throw ShapeError("row: index " + std::to_string(r) + " out of range for " + shape_string(m.shape()));
  auto span = m.row(r);
  Tensor out = Tensor::vector(std::vector<double>(span.begin(), span.end()));
  return table.tape().record(std::move(out), {table}, [table, r](Tape& t, const Tensor& g) {
    auto dst = t.grad(table).row(r);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

// Packs scalars into one vector.
inline Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw ShapeError("stack: no operands");
  std::vector<double> v;
  v.reserve(scalars.size());
  for (const Var& s : scalars) {
    if (s.value().size() != 1) throw ShapeError("stack: operand " + shape_string(s.value().shape()) + " is not scalar");
    v.push_back(s.value()[0]);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().tape().record(Tensor::vector(std::move(v)), scalars,
                                       [inputs](Tape& t, const Tensor& g) {
                                         for (std::size_t i = 0; i < inputs.size(); ++i)
                                           if (t.requires_grad(inputs[i])) t.grad(inputs[i])[0] += g[i];
                                       });
}

// Sum of scalars.
inline Var sum(std::span<const Var> scalars) {
  if (scalars.empty()) throw ShapeError("sum: no operands");
  double s = 0.0;
  for (const Var& v : scalars) s += v.value()[0];
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().tape().record(Tensor::vector({s}), scalars, [inputs](Tape& t, const Tensor& g) {
    for (const Var& v : inputs)
      if (t.requires_grad(v)) t.grad(v)[0] += g[0];
  });
}

enum class KlDirection {
  target_to_model,  // D(Q || P) = sum Q log(Q/P)
  model_to_target,  // D(P || Q) = sum P log(P/Q)
};

// KL divergence between P = masked_softmax(scores) and a fixed target Q,
// restricted to unmasked entries, with 0 log 0 = 0.
inline Var kl_divergence(Var scores, std::vector<double> target, std::vector<bool> mask,
                         KlDirection direction = KlDirection::target_to_model) {
  const Tensor& s = scores.value();
  detail::require_vector(s, "kl_divergence");
  if (target.size() != s.size() || mask.size() != s.size())
    throw ShapeError("kl_divergence: scores [" + std::to_string(s.size()) + "], target [" +
                     std::to_string(target.size()) + "], mask [" + std::to_string(mask.size()) + "]");
  std::vector<double> p = masked_softmax(s.values(), mask);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (mask[i]) hi = std::max(hi, s[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (mask[i]) z += std::exp(s[i] - hi);
  const double log_z = hi + std::log(z);
  std::vector<double> log_p(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (mask[i]) log_p[i] = s[i] - log_z;

  double loss = 0.0;
  std::vector<double> a(s.size(), 0.0);  // log P - log Q, for the model_to_target gradient
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!mask[i]) continue;
    if (direction == KlDirection::target_to_model) {
      if (target[i] > 0.0) loss += target[i] * (std::log(target[i]) - log_p[i]);
    } else {
      if (target[i] <= 0.0) throw Error("kl_divergence: D(P||Q) undefined where Q is zero on an unmasked entry");
      a[i] = log_p[i] - std::log(target[i]);
      loss += p[i] * a[i];
    }
  }
  auto backprop = [scores, p = std::move(p), q = std::move(target), m = std::move(mask), a = std::move(a), loss,
                   direction](Tape& t, const Tensor& g) {
    Tensor& gs = t.grad(scores);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!m[i]) continue;
      const double d = direction == KlDirection::target_to_model ? p[i] - q[i] : p[i] * (a[i] - loss);
      gs[i] += g[0] * d;
    }
  };
  return scores.tape().record(Tensor::vector({loss}), {scores}, std::move(backprop));
}

}  // namespace ops
}  // namespace neusum
