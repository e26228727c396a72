// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "spannet/error.hpp"
#include "spannet/parallel.hpp"
#include "spannet/rng.hpp"

namespace spannet {

using nlohmann::json;

std::size_t default_threads() {
  if (const char* env = std::getenv("SPANNET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::size_t resolve_threads(std::size_t requested) { return requested ? requested : default_threads(); }

void check_finite(const Tensor& t, const std::string& name) {
  if (!t.all_finite()) throw NumericError("non-finite gradient in tensor '" + name + "'");
}

void check_finite_rows(const SparseRowGrad& g, const std::string& name) {
  for (std::size_t r : g.touched()) {
    for (double v : g.dense().row(r)) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in tensor '" + name + "' row " + std::to_string(r));
    }
  }
}

void descend(Tensor& param, const Tensor& grad, double lr) { param.vec() -= lr * grad.vec(); }

void descend_rows(Tensor& param, const SparseRowGrad& grad, double lr, std::size_t frozen_row) {
  for (std::size_t r : grad.touched()) {
    if (r == frozen_row) continue;
    auto p = param.row(r);
    const auto g = grad.dense().row(r);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
  }
}

double batch_gradient_with(const ModelConfig& config, const ModelParams& params, const Batch& batch, bool train,
                           std::uint64_t dropout_seed, ModelGradients& grads, std::size_t threads,
                           std::vector<RowGradient>& workspace) {
  const std::size_t rows = batch.size();
  while (workspace.size() < rows) workspace.push_back(RowGradient::like(params));
  parallel_for(rows, resolve_threads(threads), [&](std::size_t r) {
    RowGradient& g = workspace[r];
    g.clear();
    const Tensor embedded = embed_row(params.embeddings, batch, r);
    backprop_row(config, params, embedded, batch.valid_lengths[r], batch.labels[r], train,
                 derive_seed(dropout_seed, SeedStream::kDropout, {r}), g);
  });
  // Reduction in row order keeps results independent of the thread count.
  grads.clear();
  const double scale = rows ? 1.0 / static_cast<double>(rows) : 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    total += workspace[r].loss;
    grads.add_layers(workspace[r], scale);
    accumulate_embedding_grad(grads.embeddings, params.embeddings, batch, r, workspace[r].d_embedded, scale);
  }
  return total * scale;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be > 0");
}

void sgd_step(const ModelConfig& config, ModelParams& params, const ModelGradients& grads, double lr) {
  check_finite_rows(grads.embeddings.word, "emb.word");
  for (std::size_t a = 0; a < grads.embeddings.positions.size(); ++a) {
    check_finite_rows(grads.embeddings.positions[a], "emb.pos" + std::to_string(a));
  }
  if (grads.lstm) {
    check_finite(grads.lstm->input_weights, "lstm.input_weights");
    check_finite(grads.lstm->recurrent_weights, "lstm.recurrent_weights");
    check_finite(grads.lstm->bias, "lstm.bias");
  }
  if (grads.conv) {
    for (std::size_t k = 0; k < grads.conv->windows.size(); ++k) {
      const std::string prefix = "conv.w" + std::to_string(grads.conv->windows[k]);
      check_finite(grads.conv->weights[k], prefix + ".weight");
      check_finite(grads.conv->biases[k], prefix + ".bias");
    }
  }
  check_finite(grads.out_weight, "out.weight");
  check_finite(grads.out_bias, "out.bias");

  if (config.fine_tune_words) {
    descend_rows(params.embeddings.word, grads.embeddings.word, lr, Vocabulary::kPad);
  }
  for (std::size_t a = 0; a < params.embeddings.positions.size(); ++a) {
    descend_rows(params.embeddings.positions[a], grads.embeddings.positions[a], lr,
                 static_cast<std::size_t>(params.embeddings.position_pad_row()));
  }
  if (params.lstm) {
    descend(params.lstm->input_weights, grads.lstm->input_weights, lr);
    descend(params.lstm->recurrent_weights, grads.lstm->recurrent_weights, lr);
    descend(params.lstm->bias, grads.lstm->bias, lr);
  }
  if (params.conv) {
    for (std::size_t k = 0; k < params.conv->windows.size(); ++k) {
      descend(params.conv->weights[k], grads.conv->weights[k], lr);
      descend(params.conv->biases[k], grads.conv->biases[k], lr);
    }
  }
  descend(params.out_weight, grads.out_weight, lr);
  descend(params.out_bias, grads.out_bias, lr);
}

double batch_gradient(const ModelConfig& config, const ModelParams& params, const Batch& batch, bool train,
                      std::uint64_t dropout_seed, ModelGradients& grads, std::size_t threads) {
  std::vector<RowGradient> workspace;
  return batch_gradient_with(config, params, batch, train, dropout_seed, grads, threads, workspace);
}

std::string EpochRecord::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["dev_accuracy"] = dev_accuracy ? json(*dev_accuracy) : json(nullptr);
  return j.dump();
}

std::vector<std::size_t> predict(const Checkpoint& checkpoint, std::span<const Instance> instances,
                                 std::size_t threads) {
  const LabelSet labels = checkpoint.labels();
  EncodingOptions options = checkpoint.config.encoding();
  options.require_labels = false;
  std::vector<std::size_t> out(instances.size());
  parallel_for(instances.size(), resolve_threads(threads), [&](std::size_t i) {
    const std::size_t order[] = {i};
    const Batch b = encode_batch(instances, order, checkpoint.vocab, labels, options);
    const Tensor embedded = embed_row(checkpoint.params.embeddings, b, 0);
    out[i] = forward(checkpoint.config, checkpoint.params, embedded, b.valid_lengths[0]).label;
  });
  return out;
}

TrainResult train(const ModelConfig& config, std::span<const Instance> train_set, std::span<const Instance> dev_set,
                  const TrainConfig& train_config, const TrainInputs& inputs) {
  config.validate();
  train_config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  check_span_lengths(config, train_set);
  check_span_lengths(config, dev_set);

  const LabelSet labels = LabelSet::for_mode(config.label_mode);
  Checkpoint current{config, {}, build_vocab(train_set, 1)};
  current.params = init_model(config, current.vocab.size(), labels.size());
  if (inputs.pretrained) {
    load_pretrained(current.params.embeddings, current.vocab, *inputs.pretrained, inputs.lowercase_pretrained);
  }
  std::vector<std::size_t> dev_gold;
  for (const auto& inst : dev_set) dev_gold.push_back(labels.index(inst.label));

  TrainResult result;
  ModelGradients grads = ModelGradients::like(current.params);
  std::vector<RowGradient> workspace;
  double lr = train_config.learning_rate;
  std::optional<double> best_dev;
  std::size_t since_best = 0;
  const EncodingOptions encoding = config.encoding();

  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    const auto batches = make_batches(train_set, current.vocab, labels, train_config.batch_size,
                                      derive_seed(train_config.seed, SeedStream::kBatching, {epoch}), encoding);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double mean = batch_gradient_with(config, current.params, batches[b], true,
                                              derive_seed(train_config.seed, SeedStream::kDropout, {epoch, b}), grads,
                                              train_config.threads, workspace);
      loss_sum += mean * static_cast<double>(batches[b].size());
      sgd_step(config, current.params, grads, lr);
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(train_set.size()), std::nullopt};
    if (!dev_set.empty()) {
      const auto predicted = predict(current, dev_set, train_config.threads);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == dev_gold[i];
      record.dev_accuracy = static_cast<double>(correct) / static_cast<double>(dev_set.size());
    }
    result.log.push_back(record);

    if (!record.dev_accuracy) {
      result.best = current;
      result.best_epoch = epoch;
    } else if (!best_dev || *record.dev_accuracy > *best_dev) {
      best_dev = record.dev_accuracy;
      result.best = current;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      if (*record.dev_accuracy == *best_dev) {
        result.best = current;  // ties go to the later, longer-trained epoch
        result.best_epoch = epoch;
      }
      if (++since_best >= train_config.patience && train_config.patience > 0) break;
    }
    lr *= train_config.lr_decay;
  }
  if (result.best_epoch == 0) {
    result.best = current;  // max_epochs == 0
  }
  return result;
}

std::vector<FoldSplit> cv_split(std::span<const Instance> instances, std::size_t n_folds, std::array<double, 3> ratios,
                                std::uint64_t seed, bool preserve_order) {
  if (n_folds < 1) throw ConfigError("n_folds must be >= 1");
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  std::vector<std::string> tuples;
  std::unordered_map<std::string, std::size_t> tuple_index;
  std::vector<std::size_t> instance_tuple;
  for (const auto& inst : instances) {
    auto [it, inserted] = tuple_index.emplace(inst.entity_tuple(), tuples.size());
    if (inserted) tuples.push_back(it->first);
    instance_tuple.push_back(it->second);
  }
  const std::size_t count = tuples.size();
  if (count < n_folds) {
    throw DataError("cv_split needs at least " + std::to_string(n_folds) + " distinct entity tuples, found " +
                    std::to_string(count));
  }
  std::vector<std::size_t> listing(count);
  std::iota(listing.begin(), listing.end(), std::size_t{0});
  if (!preserve_order) {
    Rng rng(derive_seed(seed, SeedStream::kSplit));
    rng.shuffle(listing);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(count) + 1e-9));
  const auto n_dev = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(count) + 1e-9));

  std::vector<FoldSplit> folds;
  for (std::size_t k = 0; k < n_folds; ++k) {
    const std::size_t offset = k * count / n_folds;
    std::vector<int> part(count);  // 0 train, 1 dev, 2 test per tuple id
    FoldSplit split;
    split.fold = k;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t t = listing[(i + offset) % count];
      const int which = i < n_train ? 0 : (i < n_train + n_dev ? 1 : 2);
      part[t] = which;
      (which == 0 ? split.train_tuples : which == 1 ? split.dev_tuples : split.test_tuples).push_back(tuples[t]);
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const int which = part[instance_tuple[i]];
      (which == 0 ? split.train : which == 1 ? split.dev : split.test).push_back(i);
    }
    folds.push_back(std::move(split));
  }
  return folds;
}

std::vector<Instance> select(std::span<const Instance> instances, std::span<const std::size_t> indices) {
  std::vector<Instance> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(instances[i]);
  return out;
}

MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion, std::vector<std::string> labels) {
  MetricsReport m;
  const std::size_t c = confusion.size();
  m.labels = std::move(labels);
  m.confusion = std::move(confusion);
  std::size_t diagonal = 0;
  for (std::size_t g = 0; g < c; ++g) {
    for (std::size_t p = 0; p < c; ++p) m.total += m.confusion[g][p];
    diagonal += m.confusion[g][g];
  }
  m.accuracy = m.total ? static_cast<double>(diagonal) / static_cast<double>(m.total) : 0.0;
  double f_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t predicted = 0, support = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += m.confusion[j][k];
      support += m.confusion[k][j];
    }
    ClassMetrics cm;
    cm.support = support;
    const double tp = static_cast<double>(m.confusion[k][k]);
    cm.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    cm.recall = support ? tp / static_cast<double>(support) : 0.0;
    cm.f1 = cm.precision + cm.recall > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    f_sum += cm.f1;
    m.per_class.push_back(cm);
  }
  m.macro_f1 = c ? f_sum / static_cast<double>(c) : 0.0;
  return m;
}

MetricsReport metrics_from_predictions(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                                       const LabelSet& labels) {
  std::vector<std::vector<std::size_t>> confusion(labels.size(), std::vector<std::size_t>(labels.size(), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++confusion.at(gold[i]).at(predicted[i]);
  return metrics_from_confusion(std::move(confusion), {labels.names().begin(), labels.names().end()});
}

MetricsReport evaluate(const Checkpoint& checkpoint, std::span<const Instance> instances, std::size_t threads) {
  if (instances.empty()) throw DataError("no instances to evaluate");
  const LabelSet labels = checkpoint.labels();
  std::vector<std::size_t> gold;
  for (const auto& inst : instances) gold.push_back(labels.index(inst.label));
  check_span_lengths(checkpoint.config, instances);
  const auto predicted = predict(checkpoint, instances, threads);
  return metrics_from_predictions(gold, predicted, labels);
}

std::string MetricsReport::table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "accuracy " << accuracy << " (" << total << " instances), macro-F1 " << macro_f1 << '\n';
  os << std::left << std::setw(30) << "label" << std::right << std::setw(10) << "precision" << std::setw(10)
     << "recall" << std::setw(10) << "F1" << std::setw(10) << "support" << '\n';
  for (std::size_t k = 0; k < labels.size(); ++k) {
    os << std::left << std::setw(30) << labels[k] << std::right << std::setw(10) << per_class[k].precision
       << std::setw(10) << per_class[k].recall << std::setw(10) << per_class[k].f1 << std::setw(10)
       << per_class[k].support << '\n';
  }
  os << "confusion (rows gold, columns predicted):\n";
  for (const auto& row : confusion) {
    for (std::size_t v : row) os << std::setw(8) << v;
    os << '\n';
  }
  return os.str();
}

std::string MetricsReport::to_json() const {
  json j;
  j["record"] = "metrics";
  j["total"] = total;
  j["accuracy"] = accuracy;
  j["macro_f1"] = macro_f1;
  json classes = json::array();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    classes.push_back({{"label", labels[k]},
                       {"precision", per_class[k].precision},
                       {"recall", per_class[k].recall},
                       {"f1", per_class[k].f1},
                       {"support", per_class[k].support}});
  }
  j["classes"] = std::move(classes);
  j["confusion"] = confusion;
  return j.dump();
}

std::size_t span_distance(const Instance& instance) {
  const std::size_t a = instance.first_entity().head();
  const std::size_t b = instance.last_entity().head();
  return a > b ? a - b : b - a;
}

SpanGroupReport group_spans(std::span<const std::size_t> distances, const std::vector<bool>& correct) {
  if (distances.size() < 2) throw DataError("σ undefined: span grouping needs at least 2 instances");
  if (correct.size() != distances.size()) throw ConfigError("group_spans: distances and outcomes differ in length");
  const double n = static_cast<double>(distances.size());
  SpanGroupReport report;
  for (std::size_t k : distances) report.mean += static_cast<double>(k);
  report.mean /= n;
  double ss = 0.0;
  for (std::size_t k : distances) ss += (static_cast<double>(k) - report.mean) * (static_cast<double>(k) - report.mean);
  report.stddev = std::sqrt(ss / n);
  const double low = report.mean - report.stddev;
  const double high = report.mean + report.stddev;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double k = static_cast<double>(distances[i]);
    const SpanGroup g = k <= low ? SpanGroup::kShort : (k >= high ? SpanGroup::kLong : SpanGroup::kMedium);
    report.assignment.push_back(g);
    auto& stats = report.groups[static_cast<std::size_t>(g)];
    ++stats.count;
    stats.correct += correct[i] ? 1 : 0;
  }
  return report;
}

SpanGroupReport span_group_analysis(const Checkpoint& checkpoint, std::span<const Instance> instances,
                                    std::size_t threads) {
  if (instances.size() < 2) throw DataError("σ undefined: span grouping needs at least 2 instances");
  const LabelSet labels = checkpoint.labels();
  check_span_lengths(checkpoint.config, instances);
  const auto predicted = predict(checkpoint, instances, threads);
  std::vector<std::size_t> distances;
  std::vector<bool> correct;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    distances.push_back(span_distance(instances[i]));
    correct.push_back(predicted[i] == labels.index(instances[i].label));
  }
  return group_spans(distances, correct);
}

std::string SpanGroupReport::table() const {
  static constexpr const char* kNames[] = {"short (k <= mu-sigma)", "medium", "long (k >= mu+sigma)"};
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << "mu " << mean << ", sigma " << stddev << '\n';
  os << std::left << std::setw(24) << "group" << std::right << std::setw(8) << "count" << std::setw(12) << "% correct"
     << '\n';
  for (std::size_t g = 0; g < 3; ++g) {
    os << std::left << std::setw(24) << kNames[g] << std::right << std::setw(8) << groups[g].count << std::setw(12)
       << std::setprecision(1) << groups[g].percent_correct() << std::setprecision(3) << '\n';
  }
  return os.str();
}

std::string SpanGroupReport::to_json() const {
  static constexpr const char* kNames[] = {"short", "medium", "long"};
  json j;
  j["record"] = "span_groups";
  j["mu"] = mean;
  j["sigma"] = stddev;
  for (std::size_t g = 0; g < 3; ++g) {
    j["groups"][kNames[g]] = {{"count", groups[g].count},
                              {"correct", groups[g].correct},
                              {"percent_correct", groups[g].percent_correct()}};
  }
  return j.dump();
}

}  // namespace spannet
