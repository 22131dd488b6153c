#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "neusum/autograd.hpp"
#include "neusum/tensor.hpp"

namespace neusum {

// Seedable generator; identical seeds give identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }
  std::uint64_t next() { return engine_(); }
  // Derives an independent child stream, e.g. one per document.
  Rng fork(std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(next()), static_cast<std::uint32_t>(salt),
                      static_cast<std::uint32_t>(salt >> 32)};
    std::mt19937_64 child(seq);
    return Rng(child());
  }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// i.i.d. N(0, 2 / (fan_in + fan_out)). For a rank-1 shape fan_in = 1.
inline Tensor xavier_gaussian(const Shape& shape, Rng& rng) {
  if (shape.empty() || shape.size() > 2) throw ShapeError("xavier_gaussian: expected rank 1 or 2, got " + shape_string(shape));
  const double fan_out = static_cast<double>(shape[0]);
  const double fan_in = shape.size() == 2 ? static_cast<double>(shape[1]) : 1.0;
  const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (double& v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

// Inverted dropout mask: 0 with probability p, 1/(1-p) otherwise.
inline Tensor dropout_mask(const Shape& shape, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: probability must lie in [0, 1), got " + std::to_string(p));
  Tensor mask(shape, 1.0);
  if (p == 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  for (double& v : mask.values()) v = rng.uniform() < p ? 0.0 : keep;
  return mask;
}

inline Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (!training || p == 0.0) {
    if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: probability must lie in [0, 1), got " + std::to_string(p));
    return x;
  }
  return hadamard(x, dropout_mask(x.shape(), p, rng));
}

namespace ops {
inline Var dropout(Var x, double p, bool training, Rng& rng) {
  if (!training || p == 0.0) return x;
  return scale_by(x, dropout_mask(x.value().shape(), p, rng));
}
}  // namespace ops

}  // namespace neusum
