// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "spannet/data.hpp"

namespace spannet {

inline constexpr std::string_view kMarkerToken = "MARK";
inline constexpr std::string_view kSentenceEnd = ".";

/// Desk-scale relation corpus with a known labelling rule.
///
/// Spans are filler words "w<k>" split into `sentences` pseudo-sentences that
/// each end in ".". Entities are single tokens "ent<k>" drawn from a shared
/// pool and placed in random order, so surface form alone does not reveal
/// which mention is e_1 or e_n.
///
/// Lexical rule: "positive" spans carry the marker strictly between the heads
/// of e_1 and e_n; "none" spans contain no marker.
///
/// Positional rule: every span carries exactly one marker strictly between
/// e_1 and e_n; the label is "positive" when the marker is nearer e_1 and
/// "none" when it is nearer e_n. Both classes have the same bag of words
/// distribution, so only position information separates them.
struct SyntheticSpec {
  std::size_t arity = 3;
  std::size_t vocab_size = 200;
  std::size_t entity_pool = 50;
  std::size_t span_min = 30;
  std::size_t span_max = 60;
  std::size_t sentences = 2;
  bool positional_rule = false;
  std::size_t count = 2000;
  std::uint64_t seed = 7;

  /// Smallest span length the generator can always fill.
  std::size_t min_span() const noexcept { return arity + sentences + 3; }
  /// Throws ConfigError.
  void validate() const;
};

/// Balanced: ceil(count/2) positive and floor(count/2) none. Deterministic per seed.
std::vector<Instance> gen_synthetic(const SyntheticSpec& spec);
void write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& path);

}  // namespace spannet
