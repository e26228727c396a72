// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "spannet/error.hpp"
#include "spannet/numerics.hpp"
#include "test_util.hpp"

using namespace spannet;

TEST_SUITE("numerics") {
  TEST_CASE("sigmoid values") {
    CHECK(sigmoid(Tensor::vector({0.0}))[0] == 0.5);
    CHECK(sigmoid(Tensor::vector({50.0}))[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sigmoid(Tensor::vector({-1.0}))[0] == doctest::Approx(0.2689414213699951).epsilon(1e-15));
    // Saturation never yields NaN.
    const Tensor far = sigmoid(Tensor::vector({-800.0, 800.0}));
    CHECK(far.all_finite());
    CHECK(far[0] >= 0.0);
    CHECK(far[1] == 1.0);
  }

  TEST_CASE("sigmoid(x) + sigmoid(-x) == 1") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
      const double x = rng.uniform(-40.0, 40.0);
      CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("tanh values") {
    CHECK(tanh_act(Tensor::vector({0.0}))[0] == 0.0);
    CHECK(tanh_act(Tensor::vector({1.0}))[0] == doctest::Approx(0.7615941559557649).epsilon(1e-15));
    const Tensor t = tanh_act(Tensor::vector({0.3, -0.3, 2.5, -2.5}));
    CHECK(t[0] == -t[1]);
    CHECK(t[2] == -t[3]);
  }

  TEST_CASE("relu values and subgradient convention") {
    const Tensor r = relu(Tensor::vector({-2.0, 3.5, 0.0}));
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 3.5);
    CHECK(r[2] == 0.0);
    CHECK(relu_grad(0.0) == 0.0);
    CHECK(relu_grad(1e-300) == 1.0);
  }

  TEST_CASE("affine examples") {
    CHECK(affine(Tensor::matrix({{1, 0}, {0, 1}}), Tensor::vector({1, 2}), Tensor::vector({0, 0})) ==
          Tensor::vector({1, 2}));
    CHECK(affine(Tensor::matrix({{1, 1}}), Tensor::vector({3, 4}), Tensor::vector({-7})) == Tensor::vector({0}));
    CHECK(affine(Tensor::matrix({{2, 0}, {0, 3}}), Tensor::vector({1, 1}), Tensor::vector({1, 1})) ==
          Tensor::vector({3, 4}));
  }

  TEST_CASE("affine shape mismatch names both shapes") {
    try {
      affine(Tensor({2, 3}), Tensor({2}), Tensor({2}));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[2]") != std::string::npos);
    }
  }

  TEST_CASE("affine is linear") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor w = testutil::random_tensor({4, 3}, rng);
      const Tensor x = testutil::random_tensor({3}, rng);
      const Tensor y = testutil::random_tensor({3}, rng);
      const Tensor zero({4});
      const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
      Tensor mix({3});
      mix.vec() = a * x.vec() + b * y.vec();
      const Tensor lhs = affine(w, mix, zero);
      const Tensor fx = affine(w, x, zero), fy = affine(w, y, zero);
      for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(lhs[i] - (a * fx[i] + b * fy[i])) <= 1e-9);
    }
  }

  TEST_CASE("grad_check on sum of squares") {
    const Objective fn = [](const Tensor& p, Tensor* g) {
      if (g) g->vec() = 2.0 * p.vec();
      return p.vec().squaredNorm();
    };
    const auto report = grad_check(fn, Tensor::vector({3.0}), 1e-5);
    CHECK(report.analytic == 6.0);
    CHECK(report.numeric == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(report.max_rel_error < 1e-6);
  }

  TEST_CASE("grad_check on a constant skips every coordinate") {
    const Objective fn = [](const Tensor& p, Tensor* g) {
      if (g) g->fill(0.0);
      return 4.0 + 0.0 * p[0];
    };
    const auto report = grad_check(fn, Tensor::vector({1.0, 2.0}), 1e-5);
    CHECK(report.checked == 0);
    CHECK(report.max_rel_error == 0.0);
  }

  TEST_CASE("grad_check detects a wrong gradient") {
    const Objective fn = [](const Tensor& p, Tensor* g) {
      if (g) g->vec() = 3.0 * p.vec();
      return p.vec().squaredNorm();
    };
    CHECK(grad_check(fn, Tensor::vector({1.0, -2.0}), 1e-5).max_rel_error > 0.1);
  }

  TEST_CASE("grad_check errors") {
    const Objective bad = [](const Tensor& p, Tensor* g) {
      if (g) g->fill(0.0);
      return p[0] > 1.0 ? std::nan("") : 0.0;
    };
    CHECK_THROWS_AS(grad_check(bad, Tensor::vector({1.0}), 1e-5), NumericError);
    CHECK_THROWS_AS(grad_check(bad, Tensor::vector({0.0}), 1e-2), ConfigError);
  }

  TEST_CASE("elementwise ops pass grad_check on random shapes") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const std::size_t n = 1 + rng.below(5);
      const Tensor weights = testutil::random_tensor({n}, rng);
      Tensor x = testutil::random_tensor({n}, rng, 2.0);
      for (auto& v : x.values()) {
        if (std::abs(v) < 0.05) v += 0.1;  // keep relu off the kink
      }
      // Weighted sums make each op's gradient a non-trivial vector.
      const Objective sig = [&](const Tensor& p, Tensor* g) {
        const Tensor s = sigmoid(p);
        if (g) g->vec() = weights.vec().cwiseProduct((s.vec().array() * (1.0 - s.vec().array())).matrix());
        return weights.vec().dot(s.vec());
      };
      const Objective th = [&](const Tensor& p, Tensor* g) {
        const Tensor t = tanh_act(p);
        if (g) g->vec() = weights.vec().cwiseProduct((1.0 - t.vec().array().square()).matrix());
        return weights.vec().dot(t.vec());
      };
      const Objective re = [&](const Tensor& p, Tensor* g) {
        const Tensor r = relu(p);
        if (g) {
          for (std::size_t i = 0; i < n; ++i) (*g)[i] = weights[i] * relu_grad(p[i]);
        }
        return weights.vec().dot(r.vec());
      };
      CHECK(grad_check(sig, x, 1e-5).max_rel_error < 1e-4);
      CHECK(grad_check(th, x, 1e-5).max_rel_error < 1e-4);
      CHECK(grad_check(re, x, 1e-5).max_rel_error < 1e-4);

      // Affine: gradient w.r.t. W of v . (W x + b).
      const std::size_t m = 1 + rng.below(5);
      const Tensor v = testutil::random_tensor({m}, rng);
      const Tensor xin = testutil::random_tensor({n}, rng);
      const Tensor b = testutil::random_tensor({m}, rng);
      const Objective aff = [&](const Tensor& w, Tensor* g) {
        if (g) g->mat() = v.vec() * xin.vec().transpose();
        return v.vec().dot(affine(w, xin, b).vec());
      };
      CHECK(grad_check(aff, testutil::random_tensor({m, n}, rng), 1e-5).max_rel_error < 1e-4);
    }
  }
}
