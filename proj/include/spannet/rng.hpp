// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace spannet {

/// Stream tags for splitting the root seed. Each consumer of randomness owns one.
enum class SeedStream : std::uint64_t {
  kInit = 1,
  kBatching = 2,
  kDropout = 3,
  kSplit = 4,
  kSynthetic = 5,
  kCheck = 6,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministically derives a child seed from a root seed, a stream tag and
/// any number of indices (epoch, batch, row...).
std::uint64_t derive_seed(std::uint64_t root, SeedStream stream,
                          std::initializer_list<std::uint64_t> path = {}) noexcept;

/// mt19937_64 with distribution code that does not depend on the standard
/// library's implementation-defined distributions, so byte-identical output
/// is reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spannet
