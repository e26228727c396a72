// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spannet/checkpoint.hpp"

namespace spannet {
namespace {

struct Entry {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean");
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a number");
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

#define SPANNET_SIZE(EXPR)                                                              \
  Entry {                                                                               \
    [](const RunConfig& c) { return std::to_string(c.EXPR); },                          \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<std::size_t>(v); } \
  }
#define SPANNET_DOUBLE(EXPR)                                                       \
  Entry {                                                                          \
    [](const RunConfig& c) { return format_double(c.EXPR); },                      \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<double>(v); } \
  }
#define SPANNET_BOOL(EXPR)                                                  \
  Entry {                                                                   \
    [](const RunConfig& c) { return bool_text(c.EXPR); },                   \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_bool(v); } \
  }
#define SPANNET_STRING(EXPR)                                       \
  Entry {                                                          \
    [](const RunConfig& c) { return c.EXPR; },                     \
        [](RunConfig& c, const std::string& v) { c.EXPR = v; }     \
  }

const std::vector<std::pair<std::string, Entry>>& table() {
  static const std::vector<std::pair<std::string, Entry>> entries = {
      {"run.seed", {[](const RunConfig& c) { return std::to_string(c.seed); },
                    [](RunConfig& c, const std::string& v) { c.set_seed(parse_number<std::uint64_t>(v)); }}},
      {"run.cv", SPANNET_BOOL(cv)},
      {"run.folds", SPANNET_SIZE(folds)},
      {"run.preserve_order", SPANNET_BOOL(preserve_order)},
      {"model.variant", {[](const RunConfig& c) { return std::string(variant_name(c.model.variant)); },
                         [](RunConfig& c, const std::string& v) {
                           auto parsed = parse_variant(v);
                           if (!parsed) throw std::invalid_argument("valid variants: lstm_cnn, cnn_lstm, lstm, cnn");
                           c.model.variant = *parsed;
                         }}},
      {"model.use_pf", SPANNET_BOOL(model.use_pf)},
      {"model.pf_mode", {[](const RunConfig& c) { return std::string(pf_mode_name(c.model.pf_mode)); },
                         [](RunConfig& c, const std::string& v) {
                           auto parsed = parse_pf_mode(v);
                           if (!parsed) throw std::invalid_argument("valid pf modes: two, n");
                           c.model.pf_mode = *parsed;
                         }}},
      {"model.arity", SPANNET_SIZE(model.arity)},
      {"model.word_dim", SPANNET_SIZE(model.word_dim)},
      {"model.pf_dim", SPANNET_SIZE(model.pf_dim)},
      {"model.hidden", SPANNET_SIZE(model.hidden)},
      {"model.filters", SPANNET_SIZE(model.filters)},
      {"model.windows", {[](const RunConfig& c) { return format_size_list(c.model.windows); },
                         [](RunConfig& c, const std::string& v) { c.model.windows = parse_size_list(v); }}},
      {"model.dropout", SPANNET_DOUBLE(model.dropout)},
      {"model.clamp", {[](const RunConfig& c) { return std::to_string(c.model.clamp); },
                       [](RunConfig& c, const std::string& v) { c.model.clamp = parse_number<int>(v); }}},
      {"model.label_mode", {[](const RunConfig& c) { return std::string(label_mode_name(c.model.label_mode)); },
                            [](RunConfig& c, const std::string& v) {
                              auto parsed = parse_label_mode(v);
                              if (!parsed) throw std::invalid_argument("valid label modes: binary, multiclass");
                              c.model.label_mode = *parsed;
                            }}},
      {"model.min_pad_to_window", SPANNET_BOOL(model.min_pad_to_window)},
      {"model.fine_tune_words", SPANNET_BOOL(model.fine_tune_words)},
      {"model.seed", {[](const RunConfig& c) { return std::to_string(c.model.seed); },
                      [](RunConfig& c, const std::string& v) { c.model.seed = parse_number<std::uint64_t>(v); }}},
      {"train.batch_size", SPANNET_SIZE(train.batch_size)},
      {"train.max_epochs", SPANNET_SIZE(train.max_epochs)},
      {"train.learning_rate", SPANNET_DOUBLE(train.learning_rate)},
      {"train.lr_decay", SPANNET_DOUBLE(train.lr_decay)},
      {"train.patience", SPANNET_SIZE(train.patience)},
      {"train.seed", {[](const RunConfig& c) { return std::to_string(c.train.seed); },
                      [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); }}},
      {"train.threads", SPANNET_SIZE(train.threads)},
      {"train.lowercase_pretrained", SPANNET_BOOL(lowercase_pretrained)},
      {"paths.corpus", SPANNET_STRING(paths.corpus)},
      {"paths.pretrained", SPANNET_STRING(paths.pretrained)},
      {"paths.checkpoint", SPANNET_STRING(paths.checkpoint)},
      {"paths.out", SPANNET_STRING(paths.out)},
  };
  return entries;
}

#undef SPANNET_SIZE
#undef SPANNET_DOUBLE
#undef SPANNET_BOOL
#undef SPANNET_STRING

const Entry& find_entry(const std::string& key) {
  for (const auto& [name, entry] : table()) {
    if (name == key) return entry;
  }
  throw ConfigKeyError(key, "unknown config key '" + key + "'");
}

void apply_tree(const boost::property_tree::ptree& tree, const std::function<void(const std::string&, const std::string&)>& fn) {
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigKeyError(section, "config key '" + section + "' is outside any section");
    }
    for (const auto& [key, value] : body) fn(section + "." + key, trim(value.data()));
  }
}

boost::property_tree::ptree read_tree(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return tree;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t root) {
  seed = root;
  model.seed = root;
  train.seed = root;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(trim(item)));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

std::string format_size_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, entry] : table()) keys.push_back(name);
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const Entry& entry = find_entry(key);
  try {
    entry.set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigKeyError(key, "bad value '" + value + "' for config key '" + key + "': " + e.what());
  } catch (const std::out_of_range&) {
    throw ConfigKeyError(key, "value '" + value + "' out of range for config key '" + key + "'");
  }
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return find_entry(key).get(config); }

void apply_ini(RunConfig& config, const std::string& text) {
  apply_tree(read_tree(text), [&](const std::string& key, const std::string& value) {
    set_config_value(config, key, value);
  });
}

void apply_ini_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_ini(config, buf.str());
}

std::string run_config_to_ini(const RunConfig& config) {
  std::ostringstream os;
  std::string current;
  for (const auto& [name, entry] : table()) {
    const auto dot = name.find('.');
    const std::string section = name.substr(0, dot);
    if (section != current) {
      os << (current.empty() ? "" : "\n") << '[' << section << "]\n";
      current = section;
    }
    os << name.substr(dot + 1) << " = " << entry.get(config) << '\n';
  }
  return os.str();
}

std::string model_config_to_ini(const ModelConfig& config) {
  RunConfig run;
  run.model = config;
  std::ostringstream os;
  os << "[model]\n";
  for (const auto& [name, entry] : table()) {
    if (name.rfind("model.", 0) == 0) os << name.substr(6) << " = " << entry.get(run) << '\n';
  }
  return os.str();
}

ModelConfig model_config_from_ini(const std::string& text) {
  RunConfig run;
  apply_tree(read_tree(text), [&](const std::string& key, const std::string& value) {
    if (key.rfind("model.", 0) != 0) throw ConfigKeyError(key, "unexpected key '" + key + "' in model config");
    set_config_value(run, key, value);
  });
  return run.model;
}

}  // namespace spannet
