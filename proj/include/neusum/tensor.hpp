#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "neusum/error.hpp"

namespace neusum {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// Dense row-major array of doubles. Vectors are rank 1, matrices rank 2.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_))
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
  }

  static Tensor vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
  }
  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }
  static Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape()); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const noexcept { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& other) {
    check_same(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  bool operator==(const Tensor& other) const = default;

  void check_same(const Tensor& other, const char* op) const {
    if (shape_ != other.shape_)
      throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(shape_) + " vs " +
                       shape_string(other.shape_));
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Dense kernels. All are pure; shape errors name both operands.

// A[m x k] * B[k x n] -> [m x n]; B of rank 1 gives a rank 1 result.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.cols() != b.rows())
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.rank() == 1 ? 1 : b.cols();
  Tensor out(b.rank() == 1 ? Shape{m} : Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * b[p * n + j];
    }
  }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  a.check_same(b, "add");
  Tensor out = a;
  out += b;
  return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  a.check_same(b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

// Concatenates two vectors.
inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1)
    throw ShapeError("concat: expected vectors, got " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  std::vector<double> v(a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return Tensor::vector(std::move(v));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

inline Tensor tanh(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

// Softmax over entries where mask is true; masked entries are exactly 0.
// Throws when every entry is masked.
inline std::vector<double> masked_softmax(std::span<const double> x, const std::vector<bool>& mask) {
  if (x.size() != mask.size())
    throw ShapeError("masked_softmax: scores [" + std::to_string(x.size()) + "] vs mask [" +
                     std::to_string(mask.size()) + "]");
  if (std::find(mask.begin(), mask.end(), true) == mask.end()) throw Error("masked_softmax: every entry is masked");
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    if (std::isnan(x[i])) return std::vector<double>(x.size(), std::numeric_limits<double>::quiet_NaN());
    hi = std::max(hi, x[i]);
  }
  std::vector<double> out(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    out[i] = std::exp(x[i] - hi);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

inline Tensor masked_softmax(const Tensor& x, const std::vector<bool>& mask) {
  return Tensor::vector(masked_softmax(x.values(), mask));
}

}  // namespace neusum
