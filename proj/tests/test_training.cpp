// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <doctest.h>

#include "model_check.hpp"
#include "spannet/error.hpp"
#include "spannet/training.hpp"
#include "test_util.hpp"

using namespace spannet;

namespace {

// Population statistics of {2,4,6,8,10}, frozen from a direct evaluation.
constexpr double kSigma = 2.8284271247461903;
constexpr double kLower = 3.1715728752538097;
constexpr double kUpper = 8.82842712474619;

ModelConfig small_config(Variant v = Variant::kLstmCnn) {
  ModelConfig c;
  c.variant = v;
  c.word_dim = 8;
  c.pf_dim = 2;
  c.hidden = 8;
  c.filters = 4;
  c.windows = {2, 3};
  c.dropout = 0.0;
  c.clamp = 10;
  c.arity = 2;
  return c;
}

TrainConfig quick_train(std::size_t epochs = 30) {
  TrainConfig t;
  t.batch_size = 5;
  t.max_epochs = epochs;
  t.learning_rate = 0.2;
  t.patience = 0;
  t.threads = 1;
  return t;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("sgd step arithmetic and frozen rows") {
    auto c = testutil::toy_config(Variant::kCnn, true);
    c.seed = 2;
    auto params = init_model(c, 6, 2);
    params.out_weight.fill(1.0);
    auto grads = ModelGradients::like(params);
    grads.out_weight.fill(0.5);
    const auto before = params;
    // Gradient on the PAD row must be ignored.
    grads.embeddings.word.add(Vocabulary::kPad, std::vector<double>(c.word_dim, 3.0));
    grads.embeddings.word.add(3, std::vector<double>(c.word_dim, 1.0));
    const auto pad_pos = static_cast<std::size_t>(params.embeddings.position_pad_row());
    grads.embeddings.positions[0].add(pad_pos, std::vector<double>(c.pf_dim, 1.0));
    sgd_step(c, params, grads, 0.1);
    for (double v : params.out_weight.values()) CHECK(v == 0.95);
    CHECK(params.out_bias == before.out_bias);
    CHECK(params.conv->weights == before.conv->weights);
    for (double v : params.embeddings.word.row(Vocabulary::kPad)) CHECK(v == 0.0);
    for (double v : params.embeddings.positions[0].row(pad_pos)) CHECK(v == 0.0);
    for (std::size_t j = 0; j < c.word_dim; ++j) {
      CHECK(params.embeddings.word.at(3, j) == before.embeddings.word.at(3, j) - 0.1);
      CHECK(params.embeddings.word.at(2, j) == before.embeddings.word.at(2, j));
    }

    auto frozen = c;
    frozen.fine_tune_words = false;
    auto p2 = before;
    sgd_step(frozen, p2, grads, 0.1);
    CHECK(p2.embeddings.word == before.embeddings.word);
  }

  TEST_CASE("zero gradients leave parameters unchanged") {
    const auto c = testutil::toy_config(Variant::kLstmCnn, true);
    auto params = init_model(c, 6, 2);
    const auto before = params;
    sgd_step(c, params, ModelGradients::like(params), 0.5);
    std::vector<Tensor> a, b;
    visit_tensors(params, [&](const std::string&, const Tensor& t) { a.push_back(t); });
    visit_tensors(before, [&](const std::string&, const Tensor& t) { b.push_back(t); });
    CHECK(a == b);
  }

  TEST_CASE("non-finite gradients abort without updating") {
    const auto c = testutil::toy_config(Variant::kLstm, false);
    auto params = init_model(c, 6, 2);
    const auto before = params;
    auto grads = ModelGradients::like(params);
    grads.out_weight.fill(1.0);
    grads.lstm->bias[2] = std::numeric_limits<double>::quiet_NaN();
    try {
      sgd_step(c, params, grads, 0.1);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("lstm.bias") != std::string::npos);
    }
    CHECK(params.out_weight == before.out_weight);
  }

  TEST_CASE("a small step decreases the instance loss") {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      auto corpus = testutil::toy_batch(rng);
      corpus.resize(1);
      const Variant v = std::array{Variant::kLstmCnn, Variant::kCnnLstm, Variant::kLstm, Variant::kCnn}[seed % 4];
      auto c = testutil::toy_config(v, seed % 2 == 0);
      c.seed = seed;
      const auto vocab = build_vocab(corpus);
      const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 1, std::nullopt, c.encoding()).at(0);
      auto params = init_model(c, vocab.size(), 2);
      auto grads = ModelGradients::like(params);
      const double before = batch_gradient(c, params, batch, false, 0, grads, 1);
      sgd_step(c, params, grads, 1e-3);
      const double after = batch_gradient(c, params, batch, false, 0, grads, 1);
      failures += !(after < before);
    }
    CHECK(failures <= 1);
  }

  TEST_CASE("batch gradient does not depend on the thread count") {
    const auto corpus = testutil::marker_corpus(12, 3);
    const auto c = small_config();
    const auto vocab = build_vocab(corpus);
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 12, std::nullopt, c.encoding()).at(0);
    const auto params = init_model(c, vocab.size(), 2);
    auto g1 = ModelGradients::like(params), g4 = ModelGradients::like(params);
    auto dropped = c;
    dropped.dropout = 0.5;
    CHECK(batch_gradient(dropped, params, batch, true, 7, g1, 1) == batch_gradient(dropped, params, batch, true, 7, g4, 4));
    CHECK(g1.out_weight == g4.out_weight);
    CHECK(g1.lstm->recurrent_weights == g4.lstm->recurrent_weights);
    CHECK(g1.embeddings.word.dense() == g4.embeddings.word.dense());
  }

  TEST_CASE("wide layers give identical gradients across thread counts") {
    const auto corpus = testutil::marker_corpus(24, 5);
    auto c = small_config(Variant::kCnnLstm);
    c.word_dim = 17;
    c.pf_dim = 3;
    c.hidden = 13;
    c.filters = 11;
    c.dropout = 0.5;
    const auto vocab = build_vocab(corpus);
    const auto batch = make_batches(corpus, vocab, LabelSet::binary(), 24, std::nullopt, c.encoding()).at(0);
    for (Variant v : {Variant::kLstmCnn, Variant::kCnnLstm}) {
      c.variant = v;
      const auto params = init_model(c, vocab.size(), 2);
      auto g1 = ModelGradients::like(params), g3 = ModelGradients::like(params);
      CHECK(batch_gradient(c, params, batch, true, 9, g1, 1) == batch_gradient(c, params, batch, true, 9, g3, 3));
      CHECK(g1.lstm->input_weights == g3.lstm->input_weights);
      CHECK(g1.lstm->recurrent_weights == g3.lstm->recurrent_weights);
      CHECK(g1.conv->weights == g3.conv->weights);
      CHECK(g1.embeddings.word.dense() == g3.embeddings.word.dense());
    }
  }

  TEST_CASE("rows outside the batch keep their embeddings") {
    auto corpus = testutil::marker_corpus(6, 4);
    corpus[5].tokens[2] = "only_here";
    const auto c = small_config();
    const auto vocab = build_vocab(corpus);
    auto params = init_model(c, vocab.size(), 2);
    const auto before = params;
    const std::vector<Instance> first = {corpus.begin(), corpus.begin() + 5};
    const auto batch = make_batches(first, vocab, LabelSet::binary(), 5, std::nullopt, c.encoding()).at(0);
    auto grads = ModelGradients::like(params);
    batch_gradient(c, params, batch, false, 0, grads, 1);
    sgd_step(c, params, grads, 0.5);
    std::set<TokenId> used(batch.token_ids.ids.begin(), batch.token_ids.ids.end());
    for (std::size_t r = 0; r < vocab.size(); ++r) {
      const bool same = std::equal(params.embeddings.word.row(r).begin(), params.embeddings.word.row(r).end(),
                                   before.embeddings.word.row(r).begin());
      if (!used.count(static_cast<TokenId>(r)) || r == Vocabulary::kPad) CHECK(same);
    }
    CHECK_FALSE(used.count(vocab.lookup("only_here")));
  }

  TEST_CASE("marker task is learned") {
    const auto train_set = testutil::marker_corpus(20, 11);
    const auto dev_set = testutil::marker_corpus(20, 12);
    const auto result = train(small_config(), train_set, dev_set, quick_train());
    REQUIRE_FALSE(result.log.empty());
    const double best = result.log[result.best_epoch - 1].dev_accuracy.value();
    CHECK(best == 1.0);
    CHECK(evaluate(result.best, dev_set, 1).accuracy == 1.0);
  }

  TEST_CASE("converged run fits its training split at least as well as dev") {
    const auto train_set = testutil::marker_corpus(20, 11);
    const auto dev_set = testutil::marker_corpus(20, 12);
    const auto result = train(small_config(), train_set, dev_set, quick_train(100));
    REQUIRE(result.log.back().train_loss < 0.01);
    const double best = result.log[result.best_epoch - 1].dev_accuracy.value();
    CHECK(evaluate(result.best, train_set, 1).accuracy >= best);
  }

  TEST_CASE("training is reproducible") {
    const auto train_set = testutil::marker_corpus(20, 21);
    const auto dev_set = testutil::marker_corpus(10, 22);
    auto c = small_config(Variant::kCnnLstm);
    c.dropout = 0.5;
    auto t = quick_train(4);
    const auto a = train(c, train_set, dev_set, t);
    t.threads = 3;
    const auto b = train(c, train_set, dev_set, t);
    CHECK(a.log == b.log);
    std::vector<Tensor> pa, pb;
    visit_tensors(a.best.params, [&](const std::string&, const Tensor& x) { pa.push_back(x); });
    visit_tensors(b.best.params, [&](const std::string&, const Tensor& x) { pb.push_back(x); });
    CHECK(pa == pb);
  }

  TEST_CASE("empty dev keeps the last epoch") {
    const auto train_set = testutil::marker_corpus(10, 31);
    const auto result = train(small_config(Variant::kLstm), train_set, {}, quick_train(3));
    REQUIRE(result.log.size() == 3);
    for (const auto& r : result.log) CHECK_FALSE(r.dev_accuracy.has_value());
    CHECK(result.best_epoch == 3);
    CHECK(result.log[0].to_json().find("\"dev_accuracy\":null") != std::string::npos);
  }

  TEST_CASE("patience counts strict gains and ties keep the later epoch") {
    const auto train_set = testutil::marker_corpus(10, 41);
    const auto dev_set = testutil::marker_corpus(10, 42);
    auto t = quick_train(30);
    t.patience = 2;
    t.learning_rate = 1e-9;  // dev accuracy cannot move
    const auto result = train(small_config(Variant::kCnn), train_set, dev_set, t);
    CHECK(result.log.size() == 3);
    CHECK(result.best_epoch == 3);
  }

  TEST_CASE("train config validation") {
    TrainConfig t;
    t.batch_size = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = TrainConfig{};
    t.learning_rate = 0.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    CHECK_THROWS(train(small_config(), {}, {}, TrainConfig{}));
  }

  TEST_CASE("cv folds over ten tuples") {
    const auto corpus = testutil::tuple_corpus(200, 10);
    for (bool preserve : {false, true}) {
      const auto folds = cv_split(corpus, 5, {0.7, 0.1, 0.2}, 3, preserve);
      REQUIRE(folds.size() == 5);
      std::set<std::string> tested;
      for (const auto& f : folds) {
        CHECK(f.train_tuples.size() == 7);
        CHECK(f.dev_tuples.size() == 1);
        CHECK(f.test_tuples.size() == 2);
        const auto tr = as_set(f.train_tuples), dv = as_set(f.dev_tuples), te = as_set(f.test_tuples);
        for (const auto& x : te) {
          CHECK_FALSE(tr.count(x));
          CHECK_FALSE(dv.count(x));
          CHECK(tested.insert(x).second);
        }
        for (const auto& x : dv) CHECK_FALSE(tr.count(x));
        CHECK(f.train.size() + f.dev.size() + f.test.size() == 200);
        for (std::size_t i : f.train) CHECK(tr.count(corpus[i].entity_tuple()));
        for (std::size_t i : f.dev) CHECK(dv.count(corpus[i].entity_tuple()));
        for (std::size_t i : f.test) CHECK(te.count(corpus[i].entity_tuple()));
      }
      CHECK(tested.size() == 10);
    }
  }

  TEST_CASE("cv preserve_order takes the first tuples for training") {
    const auto corpus = testutil::tuple_corpus(20, 10);
    const auto f0 = cv_split(corpus, 5, {0.7, 0.1, 0.2}, 1, true).at(0);
    std::vector<std::string> first;
    for (std::size_t i = 0; i < 7; ++i) first.push_back(corpus[i].entity_tuple());
    CHECK(f0.train_tuples == first);
    CHECK(f0.dev_tuples == std::vector<std::string>{corpus[7].entity_tuple()});
  }

  TEST_CASE("cv seeds and errors") {
    const auto corpus = testutil::tuple_corpus(40, 10);
    CHECK(cv_split(corpus, 5, {0.7, 0.1, 0.2}, 3)[0].test_tuples == cv_split(corpus, 5, {0.7, 0.1, 0.2}, 3)[0].test_tuples);
    CHECK(cv_split(corpus, 5, {0.7, 0.1, 0.2}, 3)[0].train_tuples != cv_split(corpus, 5, {0.7, 0.1, 0.2}, 4)[0].train_tuples);
    CHECK_THROWS_AS(cv_split(testutil::tuple_corpus(8, 4), 5), DataError);
    CHECK_THROWS_AS(cv_split(corpus, 5, {0.5, 0.1, 0.2}), ConfigError);
    // A tuple with many instances stays whole.
    auto heavy = testutil::tuple_corpus(50, 10);
    for (const auto& f : cv_split(heavy, 5)) {
      std::size_t in_test = 0;
      for (std::size_t i : f.test) in_test += heavy[i].entity_tuple() == heavy[0].entity_tuple();
      CHECK((in_test == 0 || in_test == 5));
    }
  }

  TEST_CASE("metrics from a confusion matrix") {
    const auto m = metrics_from_confusion({{1, 1}, {0, 2}}, {"a", "b"});
    CHECK(m.accuracy == 0.75);
    CHECK(m.per_class[0].precision == 1.0);
    CHECK(m.per_class[0].recall == 0.5);
    CHECK(m.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.per_class[1].precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.per_class[1].recall == 1.0);
    CHECK(m.per_class[1].f1 == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(m.macro_f1 == doctest::Approx(0.7333333333333334).epsilon(1e-15));
    CHECK(m.table().find("macro-F1") != std::string::npos);
    CHECK(m.to_json().find("\"accuracy\":0.75") != std::string::npos);

    const auto perfect = metrics_from_confusion({{3, 0}, {0, 4}}, {"a", "b"});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    const auto silent = metrics_from_confusion({{0, 2}, {0, 2}}, {"a", "b"});
    CHECK(silent.per_class[0].f1 == 0.0);
  }

  TEST_CASE("evaluate") {
    const auto train_set = testutil::marker_corpus(10, 51);
    const auto result = train(small_config(), train_set, {}, quick_train(2));
    CHECK_THROWS_WITH_AS(evaluate(result.best, {}, 1), "no instances to evaluate", DataError);
    auto odd = train_set;
    odd[0].label = "sensitivity";
    CHECK_THROWS_AS(evaluate(result.best, odd, 1), DataError);
    auto reversed = train_set;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = evaluate(result.best, train_set, 1), b = evaluate(result.best, reversed, 2);
    CHECK(a.confusion == b.confusion);
    CHECK(a.accuracy == b.accuracy);
  }

  TEST_CASE("span groups on the five-distance fixture") {
    const std::vector<std::size_t> d = {2, 4, 6, 8, 10};
    const auto r = group_spans(d, {true, false, true, true, false});
    CHECK(r.mean == 6.0);
    CHECK(r.stddev == kSigma);
    CHECK(r.mean - r.stddev == kLower);
    CHECK(r.mean + r.stddev == kUpper);
    CHECK(r.assignment == std::vector<SpanGroup>{SpanGroup::kShort, SpanGroup::kMedium, SpanGroup::kMedium,
                                                 SpanGroup::kMedium, SpanGroup::kLong});
    CHECK(r.groups[0].count == 1);
    CHECK(r.groups[1].count == 3);
    CHECK(r.groups[2].count == 1);
    CHECK(r.groups[1].correct == 2);
    CHECK(r.groups[1].percent_correct() == doctest::Approx(200.0 / 3.0));
    CHECK(r.table().find("short") != std::string::npos);
  }

  TEST_CASE("span group degenerate cases") {
    const std::vector<std::size_t> same = {5, 5, 5};
    const auto r = group_spans(same, {true, true, false});
    CHECK(r.stddev == 0.0);
    CHECK(r.groups[0].count == 3);
    const std::vector<std::size_t> one = {4};
    CHECK_THROWS_WITH_AS(group_spans(one, {true}), doctest::Contains("undefined"), DataError);
  }

  TEST_CASE("span groups partition random sets") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      Rng rng(seed);
      std::vector<std::size_t> d(2 + rng.below(40));
      for (auto& x : d) x = rng.below(50);
      const auto r = group_spans(d, std::vector<bool>(d.size(), true));
      CHECK(r.groups[0].count + r.groups[1].count + r.groups[2].count == d.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double k = static_cast<double>(d[i]);
        if (k <= r.mean - r.stddev) {
          CHECK(r.assignment[i] == SpanGroup::kShort);
        } else if (k >= r.mean + r.stddev) {
          CHECK(r.assignment[i] == SpanGroup::kLong);
        } else {
          CHECK(r.assignment[i] == SpanGroup::kMedium);
        }
      }
    }
  }

  TEST_CASE("span distance uses e1 and en heads") {
    const auto corpus = testutil::distance_corpus({2, 4, 6, 8, 10});
    for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(span_distance(corpus[i]) == 2 * (i + 1));
    auto tern = testutil::tuple_corpus(1, 1)[0];
    CHECK(span_distance(tern) == 5);
    const auto result = train(small_config(), corpus, {}, quick_train(1));
    const auto report = span_group_analysis(result.best, corpus, 1);
    CHECK(report.mean == 6.0);
    CHECK(report.stddev == kSigma);
  }
}
