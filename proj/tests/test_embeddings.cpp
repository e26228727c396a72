// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <stdexcept>

#include <doctest.h>

#include "spannet/data.hpp"
#include "spannet/embeddings.hpp"
#include "spannet/error.hpp"
#include "test_util.hpp"

using namespace spannet;

namespace {

Instance tiny(std::vector<std::string> tokens, std::size_t h1, std::size_t hn) {
  Instance inst;
  inst.id = "emb";
  inst.tokens = std::move(tokens);
  inst.entities = {{h1, h1 + 1, 1}, {hn, hn + 1, 2}};
  inst.label = "none";
  return inst;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

std::string repeated(const std::string& token, double value, std::size_t n) {
  std::string line = token;
  for (std::size_t i = 0; i < n; ++i) line += " " + std::to_string(value);
  return line;
}

}  // namespace

TEST_SUITE("embeddings") {
  TEST_CASE("assembled width") {
    const auto t = init_tables(10, 300, 100, 2, 120, 1);
    CHECK(t.output_dim() == 500);
    CHECK(init_tables(10, 300, 100, 3, 120, 1).output_dim() == 600);
    CHECK(init_tables(10, 300, 100, 0, 120, 1).output_dim() == 300);
    CHECK(t.positions[0].shape() == Shape{242, 100});
  }

  TEST_CASE("init range, pad rows, determinism") {
    const auto t = init_tables(50, 8, 4, 2, 10, 42);
    for (double v : t.word.values()) CHECK(std::abs(v) <= 0.25);
    for (const auto& p : t.positions) {
      for (double v : p.values()) CHECK(std::abs(v) <= 0.25);
      for (double v : p.row(p.dim(0) - 1)) CHECK(v == 0.0);
    }
    for (double v : t.word.row(Vocabulary::kPad)) CHECK(v == 0.0);
    const auto again = init_tables(50, 8, 4, 2, 10, 42);
    CHECK(again.word == t.word);
    CHECK(again.positions == t.positions);
    CHECK_FALSE(init_tables(50, 8, 4, 2, 10, 43).word == t.word);
    CHECK_THROWS_AS(init_tables(50, 0, 4, 2, 10, 1), ConfigError);
  }

  TEST_CASE("concatenation order") {
    // m=2: token "x" at 0 is e1's head, e_n sits at 1 so PF_n(0) = -1.
    const std::vector<Instance> corpus = {tiny({"x", "y"}, 0, 1)};
    const auto vocab = build_vocab(corpus);
    REQUIRE(vocab.lookup("x") == 2);
    EncodingOptions opts;
    opts.clamp = 3;
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 1, std::nullopt, opts).at(0);
    auto t = init_tables(vocab.size(), 2, 1, 2, 3, 1);
    t.word.at(2, 0) = 0.1;
    t.word.at(2, 1) = 0.2;
    const PositionIndex idx{3};
    t.positions[0].at(static_cast<std::size_t>(idx.id(0)), 0) = 0.3;
    t.positions[1].at(static_cast<std::size_t>(idx.id(-1)), 0) = 0.4;
    const Tensor row = embed_row(t, batch, 0);
    CHECK(row.shape() == Shape{2, 4});
    CHECK(row.at(0, 0) == 0.1);
    CHECK(row.at(0, 1) == 0.2);
    CHECK(row.at(0, 2) == 0.3);
    CHECK(row.at(0, 3) == 0.4);
  }

  TEST_CASE("padded positions embed to zero") {
    const std::vector<Instance> corpus = {tiny({"a", "b"}, 0, 1), tiny({"a", "b", "c", "d"}, 0, 3)};
    const auto vocab = build_vocab(corpus);
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 2, std::nullopt).at(0);
    const auto t = init_tables(vocab.size(), 3, 2, 2, 120, 5);
    const Tensor all = embed_batch(t, batch);
    CHECK(all.shape() == Shape{2, 4, 7});
    for (std::size_t j = 2; j < 4; ++j) {
      for (std::size_t k = 0; k < 7; ++k) CHECK(all[(0 * 4 + j) * 7 + k] == 0.0);
    }
    const Tensor row1 = embed_row(t, batch, 1);
    for (std::size_t i = 0; i < row1.size(); ++i) CHECK(row1[i] == all[4 * 7 + i]);
  }

  TEST_CASE("word-only width") {
    const std::vector<Instance> corpus = {tiny({"a", "b", "c"}, 0, 2)};
    const auto vocab = build_vocab(corpus);
    EncodingOptions opts;
    opts.use_pf = false;
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 1, std::nullopt, opts).at(0);
    const auto t = init_tables(vocab.size(), 5, 2, 0, 120, 1);
    CHECK(embed_row(t, batch, 0).shape() == Shape{3, 5});
  }

  TEST_CASE("out-of-range ids fail fast") {
    const std::vector<Instance> corpus = {tiny({"a", "b"}, 0, 1)};
    const auto vocab = build_vocab(corpus);
    auto batch = make_batches(corpus, vocab, LabelSet::binary(), 1, std::nullopt).at(0);
    const auto t = init_tables(vocab.size(), 2, 2, 2, 120, 1);
    batch.token_ids.row(0)[0] = 999;
    CHECK_THROWS_AS(embed_row(t, batch, 0), std::logic_error);
  }

  TEST_CASE("pretrained loading") {
    const std::vector<Instance> corpus = {tiny({"the", "cat", "The"}, 0, 1)};
    const auto vocab = build_vocab(corpus);
    const auto dir = testutil::temp_dir("emb_pretrained");

    auto t = init_tables(vocab.size(), 300, 2, 2, 120, 1);
    write_lines(dir / "one.txt", {repeated("the", 0.1, 300)});
    CHECK(load_pretrained(t, vocab, dir / "one.txt") == 1);
    for (double v : t.word.row(static_cast<std::size_t>(vocab.lookup("the")))) CHECK(v == 0.1);

    auto fresh = init_tables(vocab.size(), 300, 2, 2, 120, 1);
    const Tensor before = fresh.word;
    std::ofstream(dir / "empty.txt").close();
    CHECK(load_pretrained(fresh, vocab, dir / "empty.txt") == 0);
    CHECK(fresh.word == before);

    write_lines(dir / "short.txt", {repeated("the", 0.1, 299)});
    try {
      load_pretrained(fresh, vocab, dir / "short.txt");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("'the'") != std::string::npos);
    }
    CHECK_THROWS_AS(load_pretrained(fresh, vocab, dir / "nope.txt"), IoError);
  }

  TEST_CASE("pretrained case matching") {
    const std::vector<Instance> corpus = {tiny({"The", "cat"}, 0, 1)};
    const auto vocab = build_vocab(corpus);
    const auto dir = testutil::temp_dir("emb_case");
    write_lines(dir / "v.txt", {"the 0.5 0.25", "cat 1 2"});
    auto exact = init_tables(vocab.size(), 2, 1, 2, 120, 1);
    CHECK(load_pretrained(exact, vocab, dir / "v.txt") == 1);
    auto lower = init_tables(vocab.size(), 2, 1, 2, 120, 1);
    CHECK(load_pretrained(lower, vocab, dir / "v.txt", true) == 2);
    CHECK(lower.word.at(static_cast<std::size_t>(vocab.lookup("The")), 1) == 0.25);
  }

  TEST_CASE("loaded vectors come back through embed_row") {
    const std::vector<Instance> corpus = {tiny({"p", "q", "r"}, 0, 2)};
    const auto vocab = build_vocab(corpus);
    const auto dir = testutil::temp_dir("emb_roundtrip");
    write_lines(dir / "v.txt", {"q 0.125 -3.5 1e-3", "r 7 8 9"});
    auto t = init_tables(vocab.size(), 3, 2, 2, 120, 1);
    load_pretrained(t, vocab, dir / "v.txt");
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 1, std::nullopt).at(0);
    const Tensor row = embed_row(t, batch, 0);
    CHECK(row.at(1, 0) == 0.125);
    CHECK(row.at(1, 1) == -3.5);
    CHECK(row.at(1, 2) == 1e-3);
    CHECK(row.at(2, 2) == 9.0);
  }

  TEST_CASE("sparse gradients touch only looked-up rows") {
    const std::vector<Instance> corpus = {tiny({"a", "b", "c"}, 0, 2), tiny({"a", "d"}, 0, 1)};
    const auto vocab = build_vocab(corpus);
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 2, std::nullopt).at(0);
    const auto t = init_tables(vocab.size(), 2, 1, 2, 5, 1);
    auto grads = EmbeddingGrads::like(t);
    accumulate_embedding_grad(grads, t, batch, 1, Tensor({3, 4}, 1.0));
    std::vector<std::size_t> touched(grads.word.touched().begin(), grads.word.touched().end());
    CHECK(touched == std::vector<std::size_t>{static_cast<std::size_t>(vocab.lookup("a")),
                                             static_cast<std::size_t>(vocab.lookup("d"))});
    // Pad position (index 2 of row 1) is skipped everywhere.
    for (const auto& pg : grads.positions) {
      for (std::size_t r : pg.touched()) CHECK(r != static_cast<std::size_t>(t.position_pad_row()));
    }
    for (double v : grads.word.dense().row(Vocabulary::kPad)) CHECK(v == 0.0);
    grads.clear();
    CHECK(grads.word.touched().empty());
    for (double v : grads.word.dense().values()) CHECK(v == 0.0);
  }
}
