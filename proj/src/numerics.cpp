// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/numerics.hpp"

#include <algorithm>
#include <string>

#include "spannet/error.hpp"

namespace spannet {
namespace {

template <typename F>
Tensor map_elementwise(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

Tensor sigmoid(const Tensor& x) { return map_elementwise(x, [](double v) { return sigmoid(v); }); }
Tensor tanh_act(const Tensor& x) { return map_elementwise(x, [](double v) { return std::tanh(v); }); }
Tensor relu(const Tensor& x) { return map_elementwise(x, [](double v) { return relu(v); }); }

Tensor affine(const Tensor& weight, const Tensor& x, const Tensor& bias) {
  if (weight.rank() != 2 || x.rank() != 1 || bias.rank() != 1 || weight.dim(1) != x.dim(0) ||
      weight.dim(0) != bias.dim(0)) {
    throw ConfigError("affine shape mismatch: W " + shape_string(weight.shape()) + ", x " +
                      shape_string(x.shape()) + ", b " + shape_string(bias.shape()));
  }
  Tensor out({weight.dim(0)});
  out.vec() = weight.mat() * x.vec() + bias.vec();
  return out;
}

GradCheckReport grad_check(const Objective& fn, const Tensor& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ConfigError("grad_check eps " + std::to_string(eps) + " outside [1e-7, 1e-3]");
  }
  Tensor analytic(params.shape());
  const double base = fn(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("grad_check: objective is non-finite at params");

  GradCheckReport report;
  Tensor probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + eps;
    const double plus = fn(probe, nullptr);
    probe[i] = original - eps;
    const double minus = fn(probe, nullptr);
    probe[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("grad_check: objective is non-finite at coordinate " + std::to_string(i));
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    const double a = analytic[i];
    const double magnitude = std::abs(a) + std::abs(numeric);
    if (magnitude < 1e-8) continue;
    ++report.checked;
    const double rel = std::abs(a - numeric) / std::max(1e-8, magnitude);
    if (report.checked == 1 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
      report.analytic = a;
      report.numeric = numeric;
    }
  }
  return report;
}

}  // namespace spannet
