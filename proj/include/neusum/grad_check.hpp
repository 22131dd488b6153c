#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "neusum/tensor.hpp"

namespace neusum {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<double> per_tensor;  // max error per parameter tensor
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

enum class Stencil {
  two_point,   // (f(x+h) - f(x-h)) / 2h
  four_point,  // (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h
};

struct FiniteDifference {
  double eps = 1e-5;
  Stencil stencil = Stencil::two_point;
};

// Central difference of `loss` in coordinate `x`, restoring it afterwards.
inline double central_difference(const std::function<double()>& loss, double& x, const FiniteDifference& fd) {
  const double saved = x;
  const double h = fd.eps;
  auto at = [&](double offset) {
    x = saved + offset;
    return loss();
  };
  double d;
  if (fd.stencil == Stencil::two_point) {
    d = (at(h) - at(-h)) / (2.0 * h);
  } else {
    d = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
  }
  x = saved;
  return d;
}

// Compares `analytic` gradients against central finite differences of `loss`
// taken by perturbing each coordinate of `params` in place. `loss` must be
// deterministic (dropout off). Parameters are restored afterwards.
inline GradCheckReport grad_check(const std::function<double()>& loss, std::span<Tensor* const> params,
                                  std::span<const Tensor> analytic, const FiniteDifference& fd = {}) {
  if (params.size() != analytic.size())
    throw ShapeError("grad_check: " + std::to_string(params.size()) + " parameters vs " +
                     std::to_string(analytic.size()) + " gradients");
  if (!(fd.eps > 0.0)) throw Error("grad_check: eps must be positive");
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    p.check_same(analytic[k], "grad_check");
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      worst = std::max(worst, relative_error(analytic[k][i], central_difference(loss, p[i], fd)));
    report.per_tensor.push_back(worst);
    report.max_relative_error = std::max(report.max_relative_error, worst);
  }
  return report;
}

inline GradCheckReport grad_check(const std::function<double()>& loss, std::span<Tensor* const> params,
                                  std::span<const Tensor> analytic, double eps) {
  return grad_check(loss, params, analytic, FiniteDifference{eps, Stencil::two_point});
}

}  // namespace neusum
