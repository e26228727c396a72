// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/synthetic.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <string>

#include "spannet/error.hpp"
#include "spannet/rng.hpp"

namespace spannet {
namespace {

constexpr int kMaxAttempts = 10000;

std::size_t gap(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// Distinct sample of k values from [0, n).
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(k);
  return pool;
}

std::optional<Instance> try_instance(const SyntheticSpec& spec, Rng& rng, bool positive) {
  const std::size_t m = spec.span_min + rng.below(spec.span_max - spec.span_min + 1);
  Instance inst;
  inst.sentence_count = static_cast<int>(spec.sentences);
  inst.tokens.resize(m);
  for (auto& t : inst.tokens) t = "w" + std::to_string(rng.below(spec.vocab_size));

  std::vector<char> reserved(m, 0);
  inst.tokens[m - 1] = std::string(kSentenceEnd);
  reserved[m - 1] = 1;
  for (std::size_t cut : sample_distinct(rng, m - 2, spec.sentences - 1)) {
    inst.tokens[cut + 1] = std::string(kSentenceEnd);
    reserved[cut + 1] = 1;
  }

  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < m; ++j) {
    if (!reserved[j]) free.push_back(j);
  }
  const auto slots = sample_distinct(rng, free.size(), spec.arity);
  const auto entity_ids = sample_distinct(rng, spec.entity_pool, spec.arity);
  for (std::size_t r = 0; r < spec.arity; ++r) {
    const std::size_t pos = free[slots[r]];
    inst.tokens[pos] = "ent" + std::to_string(entity_ids[r]);
    reserved[pos] = 1;
    inst.entities.push_back({pos, pos + 1, static_cast<int>(r + 1)});
  }

  const std::size_t h1 = inst.entities.front().head();
  const std::size_t hn = inst.entities.back().head();
  const bool needs_marker = spec.positional_rule || positive;
  if (needs_marker) {
    std::vector<std::size_t> candidates;
    for (std::size_t j = std::min(h1, hn) + 1; j < std::max(h1, hn); ++j) {
      if (reserved[j]) continue;
      const std::size_t to_first = gap(j, h1), to_last = gap(j, hn);
      if (spec.positional_rule && (positive ? to_first >= to_last : to_first <= to_last)) continue;
      candidates.push_back(j);
    }
    if (candidates.empty()) return std::nullopt;
    inst.tokens[candidates[rng.below(candidates.size())]] = std::string(kMarkerToken);
  }
  inst.label = positive ? "positive" : "none";
  return inst;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (count < 1) throw ConfigError("synthetic count must be >= 1");
  if (arity < 2) throw ConfigError("synthetic arity must be >= 2");
  if (sentences < 1) throw ConfigError("synthetic sentence count must be >= 1");
  if (vocab_size < 1) throw ConfigError("synthetic vocabulary size must be >= 1");
  if (entity_pool < arity) throw ConfigError("entity pool must hold at least arity distinct entities");
  if (span_max < span_min) throw ConfigError("span_max must be >= span_min");
  if (span_min < min_span()) {
    throw ConfigError("span length too short to place entities: span_min " + std::to_string(span_min) +
                      " < " + std::to_string(min_span()) + " for arity " + std::to_string(arity) + " and " +
                      std::to_string(sentences) + " sentences");
  }
}

std::vector<Instance> gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, SeedStream::kSynthetic));
  std::vector<char> positive(spec.count, 0);
  std::fill(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>((spec.count + 1) / 2), 1);
  rng.shuffle(positive);

  std::vector<Instance> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    std::optional<Instance> inst;
    for (int attempt = 0; attempt < kMaxAttempts && !inst; ++attempt) inst = try_instance(spec, rng, positive[i]);
    if (!inst) throw ConfigError("could not place entities and marker; widen the span length range");
    inst->id = "syn-" + std::to_string(i);
    out.push_back(std::move(*inst));
  }
  return out;
}

void write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& path) {
  write_corpus(path, gen_synthetic(spec));
}

}  // namespace spannet
