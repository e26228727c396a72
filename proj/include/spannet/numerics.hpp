// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

#include "spannet/tensor.hpp"

namespace spannet {

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Subgradient at 0 is 0.
inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }
inline double relu_grad(double x) noexcept { return x > 0.0 ? 1.0 : 0.0; }

Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);
Tensor relu(const Tensor& x);

/// W x + b. Throws ConfigError naming both shapes when they do not conform.
Tensor affine(const Tensor& weight, const Tensor& x, const Tensor& bias);

/// Objective for gradient checking: returns the scalar value at `params` and,
/// when `grad` is non-null, writes the analytic gradient (same shape) into it.
using Objective = std::function<double(const Tensor& params, Tensor* grad)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;  // coordinates that passed the magnitude filter
};

/// Central-difference check of `fn`'s analytic gradient at `params`.
/// Relative error per coordinate is |a - n| / max(1e-8, |a| + |n|); coordinates
/// with |a| + |n| < 1e-8 are skipped. eps must lie in [1e-7, 1e-3].
/// Throws NumericError if fn produces a non-finite value.
GradCheckReport grad_check(const Objective& fn, const Tensor& params, double eps = 1e-5);

}  // namespace spannet
