// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <iterator>

#include <doctest.h>

#include "spannet/error.hpp"
#include "spannet/synthetic.hpp"
#include "test_util.hpp"

using namespace spannet;

namespace {

std::size_t count_token(const Instance& inst, std::string_view tok) {
  return static_cast<std::size_t>(std::count(inst.tokens.begin(), inst.tokens.end(), tok));
}

std::size_t marker_at(const Instance& inst) {
  return static_cast<std::size_t>(std::find(inst.tokens.begin(), inst.tokens.end(), kMarkerToken) - inst.tokens.begin());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("balanced classes") {
    SyntheticSpec spec;
    const auto corpus = gen_synthetic(spec);
    REQUIRE(corpus.size() == 2000);
    std::size_t positive = 0;
    for (const auto& inst : corpus) positive += inst.label == "positive";
    CHECK(positive == 1000);
    spec.count = 7;
    std::size_t odd = 0;
    for (const auto& inst : gen_synthetic(spec)) odd += inst.label == "positive";
    CHECK(odd == 4);
  }

  TEST_CASE("structure of generated spans") {
    SyntheticSpec spec;
    spec.count = 300;
    spec.sentences = 3;
    for (const auto& inst : gen_synthetic(spec)) {
      CHECK_NOTHROW(validate_instance(inst, inst.id));
      CHECK(inst.length() >= spec.span_min);
      CHECK(inst.length() <= spec.span_max);
      CHECK(inst.arity() == 3);
      CHECK(inst.sentence_count == 3);
      CHECK(count_token(inst, kSentenceEnd) == 3);
      CHECK(inst.tokens.back() == kSentenceEnd);
      for (const auto& e : inst.entities) CHECK(inst.tokens[e.head()].rfind("ent", 0) == 0);
    }
  }

  TEST_CASE("lexical rule") {
    SyntheticSpec spec;
    spec.count = 500;
    for (const auto& inst : gen_synthetic(spec)) {
      const std::size_t h1 = inst.first_entity().head(), hn = inst.last_entity().head();
      if (inst.label == "positive") {
        REQUIRE(count_token(inst, kMarkerToken) == 1);
        const std::size_t j = marker_at(inst);
        CHECK(j > std::min(h1, hn));
        CHECK(j < std::max(h1, hn));
      } else {
        CHECK(count_token(inst, kMarkerToken) == 0);
      }
    }
  }

  TEST_CASE("positional rule") {
    SyntheticSpec spec;
    spec.count = 500;
    spec.positional_rule = true;
    for (const auto& inst : gen_synthetic(spec)) {
      REQUIRE(count_token(inst, kMarkerToken) == 1);
      const std::size_t h1 = inst.first_entity().head(), hn = inst.last_entity().head();
      const std::size_t j = marker_at(inst);
      CHECK(j > std::min(h1, hn));
      CHECK(j < std::max(h1, hn));
      const auto to1 = static_cast<long>(j) - static_cast<long>(h1), ton = static_cast<long>(j) - static_cast<long>(hn);
      CHECK((std::abs(to1) < std::abs(ton)) == (inst.label == "positive"));
    }
  }

  TEST_CASE("word-only cues sit at chance under the positional rule") {
    SyntheticSpec spec;
    spec.positional_rule = true;
    const auto corpus = gen_synthetic(spec);
    // Frequency-count oracles that see tokens and their order but not roles:
    // marker count, and whether the marker is nearer the leftmost or the
    // rightmost entity token in surface order.
    std::size_t count_rule = 0, nearer_left = 0;
    for (const auto& inst : corpus) {
      const bool positive = inst.label == "positive";
      count_rule += (count_token(inst, kMarkerToken) >= 1) == positive;
      std::size_t lo = inst.length(), hi = 0;
      for (const auto& e : inst.entities) {
        lo = std::min(lo, e.head());
        hi = std::max(hi, e.head());
      }
      const std::size_t j = marker_at(inst);
      nearer_left += (j - lo < hi - j) == positive;
    }
    const double n = static_cast<double>(corpus.size());
    CHECK(count_rule / n == 0.5);
    CHECK(std::abs(nearer_left / n - 0.5) < 0.045);
  }

  TEST_CASE("same seed, same bytes") {
    SyntheticSpec spec;
    spec.count = 50;
    const auto dir = testutil::temp_dir("synthetic_bytes");
    write_synthetic(spec, dir / "a.jsonl");
    write_synthetic(spec, dir / "b.jsonl");
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    spec.seed = 8;
    write_synthetic(spec, dir / "c.jsonl");
    CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));
    CHECK(parse_corpus(dir / "a.jsonl").size() == 50);
  }

  TEST_CASE("invalid specs") {
    SyntheticSpec spec;
    spec.span_min = 7;
    spec.span_max = 10;
    try {
      gen_synthetic(spec);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("too short") != std::string::npos);
    }
    spec = SyntheticSpec{};
    spec.count = 0;
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
    spec = SyntheticSpec{};
    spec.entity_pool = 2;
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
    spec = SyntheticSpec{};
    spec.span_max = 20;
    CHECK_THROWS_AS(gen_synthetic(spec), ConfigError);
  }

  TEST_CASE("minimum span is always fillable") {
    for (std::size_t arity : {2, 3, 4}) {
      for (std::size_t sentences : {1, 2, 3}) {
        for (bool positional : {false, true}) {
          SyntheticSpec spec;
          spec.arity = arity;
          spec.sentences = sentences;
          spec.span_min = spec.span_max = spec.min_span();
          spec.positional_rule = positional;
          spec.count = 40;
          CHECK_NOTHROW(gen_synthetic(spec));
        }
      }
    }
  }
}
