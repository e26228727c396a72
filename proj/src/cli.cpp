// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "spannet/checkpoint.hpp"
#include "spannet/config.hpp"
#include "spannet/error.hpp"
#include "spannet/synthetic.hpp"
#include "spannet/training.hpp"

namespace spannet {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  out << line << '\n';
}

// Command-line overrides, applied after the config file. Each maps to a
// config key so precedence and validation match the file format exactly.
struct Overrides {
  std::map<std::string, std::string> values;

  void option(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
  void flag(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_flag_function(flag, [this, key](std::int64_t n) { values[key] = n > 0 ? "true" : "false"; }, help);
  }
  void apply(RunConfig& config) const {
    for (const auto& [key, value] : values) set_config_value(config, key, value);
  }
};

struct TrainArgs {
  std::string config_path;
  Overrides overrides;
};

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out;
  bool span_groups = false;
};

struct GenArgs {
  SyntheticSpec spec;
  std::string out;
};

Checkpoint open_checkpoint(const std::string& path) {
  if (path.empty()) throw UsageError("--checkpoint is required");
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  return load_checkpoint(path);
}

std::vector<Instance> open_corpus(const std::string& path) {
  if (path.empty()) throw UsageError("--corpus is required");
  if (!fs::exists(path)) throw UsageError("corpus not found: " + path);
  return parse_corpus(path);
}

void check_labels(const Checkpoint& ck, const std::vector<Instance>& instances) {
  const LabelSet labels = ck.labels();
  for (const auto& inst : instances) {
    if (!labels.find(inst.label)) {
      throw UsageError("label-set mismatch: corpus label '" + inst.label + "' is not in the checkpoint's " +
                       std::string(label_mode_name(labels.mode())) + " label set");
    }
  }
}

int cmd_train(const TrainArgs& args, std::ostream& out) {
  RunConfig cfg;
  if (!args.config_path.empty()) apply_ini_file(cfg, args.config_path);
  args.overrides.apply(cfg);
  cfg.model.validate();
  cfg.train.validate();
  if (cfg.folds < 1) throw ConfigKeyError("run.folds", "run.folds must be >= 1");

  const auto instances = open_corpus(cfg.paths.corpus);
  if (cfg.model.use_pf && cfg.model.pf_mode == PfMode::kNAnchor && !instances.empty()) {
    cfg.model.arity = instances.front().arity();
  }
  const fs::path out_dir = cfg.paths.out.empty() ? fs::path("spannet_run") : fs::path(cfg.paths.out);
  fs::create_directories(out_dir);
  write_text(out_dir / "effective.cfg", run_config_to_ini(cfg));
  out << "variant=" << variant_name(cfg.model.variant) << (cfg.model.use_pf ? "+wf+pf" : "+wf")
      << " d_in=" << cfg.model.input_dim() << " d_rep=" << cfg.model.rep_dim() << '\n';

  const std::size_t n_folds = cfg.cv ? cfg.folds : std::max<std::size_t>(cfg.folds, 1);
  const auto folds = cv_split(instances, n_folds, {0.7, 0.1, 0.2}, cfg.seed, cfg.preserve_order);
  const std::size_t runs = cfg.cv ? folds.size() : 1;
  const TrainInputs inputs{cfg.paths.pretrained.empty() ? std::nullopt
                                                        : std::optional<fs::path>(cfg.paths.pretrained),
                           cfg.lowercase_pretrained};

  double accuracy_sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t k = 0; k < runs; ++k) {
    const FoldSplit& split = folds[k];
    const fs::path dir = cfg.cv ? out_dir / ("fold" + std::to_string(k)) : out_dir;
    fs::create_directories(dir);
    const auto train_set = select(instances, split.train);
    const auto dev_set = select(instances, split.dev);
    const auto test_set = select(instances, split.test);
    out << "fold " << k << ": " << train_set.size() << " train / " << dev_set.size() << " dev / " << test_set.size()
        << " test instances\n";

    const TrainResult result = train(cfg.model, train_set, dev_set, cfg.train, inputs);
    const fs::path log_path = dir / "train_log.jsonl";
    write_text(log_path, "");
    for (const auto& rec : result.log) {
      append_line(log_path, rec.to_json());
      out << "  epoch " << rec.epoch << " loss " << std::fixed << std::setprecision(6) << rec.train_loss
          << " dev_acc " << (rec.dev_accuracy ? std::to_string(*rec.dev_accuracy) : std::string("n/a")) << '\n';
    }
    const fs::path ck_path = (!cfg.cv && !cfg.paths.checkpoint.empty()) ? fs::path(cfg.paths.checkpoint)
                                                                         : dir / "model.ckpt";
    save_checkpoint(result.best, ck_path);
    out << "  best epoch " << result.best_epoch << ", checkpoint " << ck_path.string() << '\n';

    if (!test_set.empty()) {
      const MetricsReport report = evaluate(result.best, test_set);
      out << report.table();
      write_text(dir / "metrics.jsonl", report.to_json() + "\n");
      accuracy_sum += report.accuracy;
      ++scored;
    }
  }
  if (scored > 0) {
    const double mean = accuracy_sum / static_cast<double>(scored);
    out << "mean test accuracy over " << scored << " fold(s): " << std::fixed << std::setprecision(4) << mean << '\n';
    write_text(out_dir / "summary.json",
               nlohmann::json{{"folds", scored}, {"mean_test_accuracy", mean}}.dump() + "\n");
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& args, bool metrics, std::ostream& out) {
  const Checkpoint ck = open_checkpoint(args.checkpoint);
  const auto instances = open_corpus(args.corpus);
  check_labels(ck, instances);
  std::string records;
  if (metrics) {
    const MetricsReport report = evaluate(ck, instances);
    out << report.table() << report.to_json() << '\n';
    records += report.to_json() + "\n";
  }
  if (args.span_groups) {
    const SpanGroupReport report = span_group_analysis(ck, instances);
    out << report.table() << report.to_json() << '\n';
    records += report.to_json() + "\n";
  }
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    write_text(fs::path(args.out) / (metrics ? "metrics.jsonl" : "span_groups.jsonl"), records);
  }
  return kExitOk;
}

int cmd_gen(const GenArgs& args, std::ostream& out, std::ostream& err) {
  const auto instances = gen_synthetic(args.spec);
  if (args.out.empty()) {
    for (const auto& inst : instances) out << corpus_line(inst) << '\n';
  } else {
    write_corpus(args.out, instances);
  }
  std::size_t positives = 0;
  for (const auto& inst : instances) positives += inst.label == "positive";
  err << "generated " << instances.size() << " instances (" << positives << " positive, "
      << instances.size() - positives << " none), rule=" << (args.spec.positional_rule ? "positional" : "lexical")
      << '\n';
  return kExitOk;
}

void add_train_options(CLI::App& cmd, TrainArgs& a) {
  auto& o = a.overrides;
  cmd.add_option("--config", a.config_path, "INI config file (flags override it)");
  o.option(cmd, "--corpus", "paths.corpus", "training corpus (.jsonl)");
  o.option(cmd, "--variant", "model.variant", "lstm_cnn | cnn_lstm | lstm | cnn");
  o.flag(cmd, "--use-pf,!--no-pf", "model.use_pf", "use position features");
  o.option(cmd, "--pf-mode", "model.pf_mode", "two | n");
  o.option(cmd, "--filters", "model.filters", "filters per window size");
  o.option(cmd, "--windows", "model.windows", "comma-separated window sizes");
  o.option(cmd, "--hidden", "model.hidden", "LSTM hidden size");
  o.option(cmd, "--word-dim", "model.word_dim", "word embedding dimension");
  o.option(cmd, "--pf-dim", "model.pf_dim", "position embedding dimension");
  o.option(cmd, "--dropout", "model.dropout", "dropout rate before the classifier");
  o.option(cmd, "--clamp", "model.clamp", "relative distance clamp");
  o.option(cmd, "--label-mode", "model.label_mode", "binary | multiclass");
  o.option(cmd, "--batch-size", "train.batch_size", "mini-batch size");
  o.option(cmd, "--epochs", "train.max_epochs", "maximum epochs");
  o.option(cmd, "--lr", "train.learning_rate", "SGD learning rate");
  o.option(cmd, "--patience", "train.patience", "early-stopping patience in epochs");
  o.option(cmd, "--seed", "run.seed", "root seed");
  o.flag(cmd, "--cv", "run.cv", "run every fold of the held-out cross-validation");
  o.option(cmd, "--folds", "run.folds", "number of folds");
  o.flag(cmd, "--preserve-order", "run.preserve_order", "list entity tuples in corpus order instead of shuffling");
  o.option(cmd, "--pretrained", "paths.pretrained", "pretrained word vector file");
  o.option(cmd, "--checkpoint", "paths.checkpoint", "checkpoint path (single split)");
  o.option(cmd, "--out", "paths.out", "output directory");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"spannet: cross-sentence n-ary relation extraction with LSTM/CNN models"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model (single split or --cv)");
  add_train_options(*train_cmd, train_args);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file");
  eval_cmd->add_option("--corpus", eval_args.corpus, "corpus (.jsonl)");
  eval_cmd->add_option("--out", eval_args.out, "directory for structured records");
  eval_cmd->add_flag("--span-groups", eval_args.span_groups, "add the span-distance group report");

  EvalArgs analyze_args;
  analyze_args.span_groups = true;
  auto* analyze_cmd = app.add_subcommand("analyze", "span-distance group analysis of a checkpoint");
  analyze_cmd->add_option("--checkpoint", analyze_args.checkpoint, "checkpoint file");
  analyze_cmd->add_option("--corpus", analyze_args.corpus, "corpus (.jsonl)");
  analyze_cmd->add_option("--out", analyze_args.out, "directory for structured records");

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
  gen_cmd->add_option("--arity", gen_args.spec.arity, "entities per instance");
  gen_cmd->add_option("--count", gen_args.spec.count, "number of instances");
  gen_cmd->add_option("--seed", gen_args.spec.seed, "generator seed");
  gen_cmd->add_option("--sentences", gen_args.spec.sentences, "sentences per span");
  gen_cmd->add_option("--span-min", gen_args.spec.span_min, "minimum span length");
  gen_cmd->add_option("--span-max", gen_args.spec.span_max, "maximum span length");
  gen_cmd->add_option("--vocab-size", gen_args.spec.vocab_size, "filler vocabulary size");
  gen_cmd->add_option("--entity-pool", gen_args.spec.entity_pool, "distinct entity surface forms");
  gen_cmd->add_flag("--positional-rule", gen_args.spec.positional_rule, "label by marker position");
  gen_cmd->add_option("--out", gen_args.out, "output corpus path (stdout when omitted)");

  std::vector<std::string> argv_store{"spannet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "spannet: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, true, out);
    if (*analyze_cmd) return cmd_eval(analyze_args, false, out);
    if (*gen_cmd) return cmd_gen(gen_args, out, err);
  } catch (const UsageError& e) {
    err << "spannet: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigKeyError& e) {
    err << "spannet: config key '" << e.key() << "': " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "spannet: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "spannet: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace spannet
