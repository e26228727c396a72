// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/lstm.hpp"

#include <cmath>
#include <string>

#include "spannet/error.hpp"
#include "spannet/numerics.hpp"

namespace spannet {
namespace {

// Applies the gate nonlinearities in place to a row of 4l pre-activations.
void activate_gates(double* z, std::size_t l) {
  for (std::size_t k = 0; k < 3 * l; ++k) z[k] = sigmoid(z[k]);
  for (std::size_t k = 3 * l; k < 4 * l; ++k) z[k] = std::tanh(z[k]);
}

void check_shapes(const LstmParams& p, std::size_t input_dim) {
  const std::size_t l = p.recurrent_weights.rank() == 2 ? p.recurrent_weights.dim(1) : 0;
  if (p.input_weights.rank() != 2 || p.recurrent_weights.rank() != 2 || p.bias.rank() != 1 ||
      p.input_weights.dim(0) != 4 * l || p.recurrent_weights.dim(0) != 4 * l || p.bias.dim(0) != 4 * l ||
      p.input_weights.dim(1) != input_dim) {
    throw ConfigError("lstm shape mismatch: W " + shape_string(p.input_weights.shape()) + ", U " +
                      shape_string(p.recurrent_weights.shape()) + ", b " + shape_string(p.bias.shape()) +
                      ", input dim " + std::to_string(input_dim));
  }
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden) {
  return {Tensor({4 * hidden, input_dim}), Tensor({4 * hidden, hidden}), Tensor({4 * hidden})};
}

LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  if (input_dim < 1 || hidden < 1) throw ConfigError("lstm dimensions must be >= 1");
  LstmParams p = LstmParams::zeros(input_dim, hidden);
  const double r = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& v : p.input_weights.values()) v = rng.uniform(-r, r);
  for (auto& v : p.recurrent_weights.values()) v = rng.uniform(-r, r);
  return p;
}

LstmState cell_step(const LstmParams& params, const Tensor& x, const LstmState& prev) {
  check_shapes(params, x.size());
  const std::size_t l = params.hidden();
  if (prev.h.size() != l || prev.c.size() != l) {
    throw ConfigError("lstm state shape mismatch: h " + shape_string(prev.h.shape()) + ", c " +
                      shape_string(prev.c.shape()) + ", hidden " + std::to_string(l));
  }
  Eigen::VectorXd z = params.input_weights.mat() * x.vec() + params.recurrent_weights.mat() * prev.h.vec() +
                      params.bias.vec();
  activate_gates(z.data(), l);
  LstmState next = LstmState::zeros(l);
  for (std::size_t k = 0; k < l; ++k) {
    const double i = z[k], f = z[l + k], o = z[2 * l + k], g = z[3 * l + k];
    next.c[k] = i * g + f * prev.c[k];
    next.h[k] = o * std::tanh(next.c[k]);
  }
  return next;
}

Tensor lstm_forward(const LstmParams& params, const Tensor& inputs, std::size_t valid_length,
                    LstmTrace* trace) {
  check_shapes(params, inputs.dim(1));
  const std::size_t l = params.hidden();
  const std::size_t m = valid_length;
  if (m > inputs.dim(0)) throw ConfigError("lstm valid_length exceeds sequence length");

  Tensor out({inputs.dim(0), l});
  LstmTrace local;
  LstmTrace& tr = trace ? *trace : local;
  tr.valid_length = m;
  tr.gates = Tensor({m, 4 * l});
  tr.cells = Tensor({m, l});
  tr.cell_tanh = Tensor({m, l});
  if (m == 0) {
    tr.hidden = Tensor({0, l});
    return out;
  }

  auto gates = tr.gates.mat();
  gates.noalias() = inputs.mat().topRows(static_cast<Eigen::Index>(m)) * params.input_weights.mat().transpose();
  gates.rowwise() += params.bias.vec().transpose();

  const auto recurrent = params.recurrent_weights.mat();
  Eigen::VectorXd z(static_cast<Eigen::Index>(4 * l));
  for (std::size_t t = 0; t < m; ++t) {
    double* zt = tr.gates.data() + t * 4 * l;
    if (t > 0) {
      Eigen::Map<Eigen::VectorXd> zrow(zt, static_cast<Eigen::Index>(4 * l));
      zrow.noalias() += recurrent * Eigen::Map<const Eigen::VectorXd>(out.data() + (t - 1) * l,
                                                                      static_cast<Eigen::Index>(l));
    }
    activate_gates(zt, l);
    for (std::size_t k = 0; k < l; ++k) {
      const double c_prev = t > 0 ? tr.cells.at(t - 1, k) : 0.0;
      const double c = zt[k] * zt[3 * l + k] + zt[l + k] * c_prev;
      const double tc = std::tanh(c);
      tr.cells.at(t, k) = c;
      tr.cell_tanh.at(t, k) = tc;
      out.at(t, k) = zt[2 * l + k] * tc;
    }
  }
  if (trace) {
    tr.hidden = Tensor({m, l});
    std::copy(out.data(), out.data() + m * l, tr.hidden.data());
  }
  return out;
}

Tensor lstm_backward(const LstmParams& params, const Tensor& inputs, const LstmTrace& trace,
                     const Tensor& d_hidden, LstmParams& grads) {
  const std::size_t l = params.hidden();
  const std::size_t m = trace.valid_length;
  Tensor d_inputs({inputs.dim(0), inputs.dim(1)});
  if (m == 0) return d_inputs;

  Tensor d_gates({m, 4 * l});  // gradient w.r.t. pre-activations
  AlignedBuffer dh_next(l, 0.0), dc_next(l, 0.0);
  const auto recurrent = params.recurrent_weights.mat();
  for (std::size_t t = m; t-- > 0;) {
    const double* a = trace.gates.data() + t * 4 * l;
    double* da = d_gates.data() + t * 4 * l;
    for (std::size_t k = 0; k < l; ++k) {
      const double i = a[k], f = a[l + k], o = a[2 * l + k], g = a[3 * l + k];
      const double tc = trace.cell_tanh.at(t, k);
      const double c_prev = t > 0 ? trace.cells.at(t - 1, k) : 0.0;
      const double dh = d_hidden.at(t, k) + dh_next[k];
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
      da[k] = dc * g * i * (1.0 - i);
      da[l + k] = dc * c_prev * f * (1.0 - f);
      da[2 * l + k] = dh * tc * o * (1.0 - o);
      da[3 * l + k] = dc * i * (1.0 - g * g);
      dc_next[k] = dc * f;
    }
    Eigen::Map<Eigen::VectorXd> dhn(dh_next.data(), static_cast<Eigen::Index>(l));
    dhn.noalias() = recurrent.transpose() * Eigen::Map<const Eigen::VectorXd>(da, static_cast<Eigen::Index>(4 * l));
  }

  const auto dz = d_gates.mat();
  const auto x = inputs.mat().topRows(static_cast<Eigen::Index>(m));
  grads.input_weights.mat().noalias() += dz.transpose() * x;
  if (m > 1) {
    const auto h = trace.hidden.mat().topRows(static_cast<Eigen::Index>(m - 1));
    grads.recurrent_weights.mat().noalias() += dz.bottomRows(static_cast<Eigen::Index>(m - 1)).transpose() * h;
  }
  grads.bias.vec() += dz.colwise().sum().transpose();
  d_inputs.mat().topRows(static_cast<Eigen::Index>(m)).noalias() = dz * params.input_weights.mat();
  return d_inputs;
}

}  // namespace spannet
