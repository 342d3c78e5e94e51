/*
 * Copyright 2026 The BLV Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "blv/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "blv/error.hpp"
#include "blv/io.hpp"

namespace blv::cli {
namespace {

enum class KeyType { kString, kDouble, kUint, kDoubleList, kUintList, kStringList };

struct KeyInfo {
  KeyType type;
  const char* default_value;
  std::vector<std::string> choices = {};
};

const std::map<std::string, KeyInfo>& key_table() {
  static const std::map<std::string, KeyInfo> table = {
      {"run.id", {KeyType::kString, ""}},
      {"output.dir", {KeyType::kString, "out"}},
      {"seed", {KeyType::kUint, "0"}},
      {"input.data", {KeyType::kString, ""}},
      {"input.checkpoint", {KeyType::kString, ""}},
      {"input.split", {KeyType::kString, "test", {"train", "dev", "test"}}},

      {"data.classes", {KeyType::kUint, "5"}},
      {"data.samples", {KeyType::kUint, "2000"}},
      {"data.dim", {KeyType::kUint, "16"}},
      {"data.priors", {KeyType::kDoubleList, ""}},
      {"data.prior_mean", {KeyType::kDouble, "2"}},
      {"data.prior_std", {KeyType::kDouble, "0.88"}},
      {"data.separation", {KeyType::kDouble, "2"}},
      {"data.noise_std", {KeyType::kDouble, "1"}},
      {"data.min_tokens", {KeyType::kUint, "1"}},
      {"data.max_tokens", {KeyType::kUint, "1"}},

      {"split.train", {KeyType::kDouble, "0.8"}},
      {"split.dev", {KeyType::kDouble, "0.1"}},
      {"split.test", {KeyType::kDouble, "0.1"}},

      {"train.batch_size", {KeyType::kUint, "4"}},
      {"train.accumulation", {KeyType::kUint, "2"}},
      {"train.epochs", {KeyType::kUint, "20"}},
      {"train.learning_rate", {KeyType::kDouble, "1e-05"}},
      {"train.dropout", {KeyType::kDouble, "0.1"}},
      {"train.init_std", {KeyType::kDouble, "0.02"}},
      {"train.optimizer", {KeyType::kString, "adam", {"adam", "sgd"}}},
      {"train.beta1", {KeyType::kDouble, "0.9"}},
      {"train.beta2", {KeyType::kDouble, "0.999"}},
      {"train.epsilon", {KeyType::kDouble, "1e-08"}},

      {"loss.kind", {KeyType::kString, "cross_entropy", {"cross_entropy", "ce", "focal", "blv"}}},
      {"loss.sigma", {KeyType::kDouble, "0"}},
      {"loss.gamma", {KeyType::kDouble, "2"}},
      {"loss.zero_count", {KeyType::kString, "error", {"error", "clamp"}}},

      {"project.method", {KeyType::kString, "tsne", {"tsne", "pca"}}},
      {"tsne.perplexity", {KeyType::kDouble, "30"}},
      {"tsne.iterations", {KeyType::kUint, "5000"}},
      {"tsne.learning_rate", {KeyType::kDouble, "200"}},
      {"tsne.exaggeration", {KeyType::kDouble, "12"}},
      {"tsne.exaggeration_iterations", {KeyType::kUint, "250"}},
      {"tsne.momentum_switch", {KeyType::kUint, "250"}},

      {"experiment.seeds", {KeyType::kUintList, "0,1,2,3,4,5,6,7,8,9"}},
      {"experiment.variants", {KeyType::kStringList, "ce,focal:2,blv:2,blv:6"}},
      {"experiment.workers", {KeyType::kUint, "1"}},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorKind::kConfig, "config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "a real number");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "a non-negative integer");
  return v;
}

const KeyInfo& info(const std::string& key) {
  const auto& table = key_table();
  auto it = table.find(key);
  if (it == table.end()) fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
  return it->second;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, ki] : key_table()) values_[key] = ki.default_value;
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::kConfig, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    fail(ErrorKind::kConfig, "cannot read config file " + path.string());
  }
  return from_text(text);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  info(key);
  values_[key] = value;
  explicit_[key] = true;
}

const std::string& RunConfig::get(const std::string& key) const {
  info(key);
  return values_.at(key);
}

bool RunConfig::is_set_explicitly(const std::string& key) const { return explicit_.contains(key); }

double RunConfig::get_double(const std::string& key) const { return parse_double(key, get(key)); }
std::uint64_t RunConfig::get_uint(const std::string& key) const { return parse_uint(key, get(key)); }

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::uint64_t> RunConfig::get_uint_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(get(key))) out.push_back(parse_uint(key, item));
  return out;
}

std::vector<std::string> RunConfig::get_string_list(const std::string& key) const {
  return split_list(get(key));
}

void RunConfig::validate() const {
  for (const auto& [key, ki] : key_table()) {
    const std::string& v = values_.at(key);
    switch (ki.type) {
      case KeyType::kDouble: parse_double(key, v); break;
      case KeyType::kUint: parse_uint(key, v); break;
      case KeyType::kDoubleList: get_double_list(key); break;
      case KeyType::kUintList: get_uint_list(key); break;
      case KeyType::kStringList:
      case KeyType::kString: break;
    }
    if (!ki.choices.empty() && std::find(ki.choices.begin(), ki.choices.end(), v) == ki.choices.end()) {
      std::string allowed;
      for (const auto& ch : ki.choices) allowed += (allowed.empty() ? "" : ", ") + ch;
      fail(ErrorKind::kConfig, "config key '" + key + "': '" + v + "' is not one of {" + allowed + "}");
    }
  }
  for (const auto& v : get_string_list("experiment.variants")) parse_variant(v);
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, ki] : key_table()) keys.push_back(key);
  return keys;
}

GeneratorSpec generator_spec(const RunConfig& c) {
  GeneratorSpec g;
  g.classes = c.get_uint("data.classes");
  g.samples = c.get_uint("data.samples");
  g.dim = c.get_uint("data.dim");
  g.priors = c.get_double_list("data.priors");
  g.prior_mean = c.get_double("data.prior_mean");
  g.prior_std = c.get_double("data.prior_std");
  g.cluster_separation = c.get_double("data.separation");
  g.cluster_noise_std = c.get_double("data.noise_std");
  g.min_tokens = c.get_uint("data.min_tokens");
  g.max_tokens = c.get_uint("data.max_tokens");
  g.seed = c.get_uint("seed");
  g.validate();
  return g;
}

std::array<double, 3> split_fractions(const RunConfig& c) {
  return {c.get_double("split.train"), c.get_double("split.dev"), c.get_double("split.test")};
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.batch_size = c.get_uint("train.batch_size");
  t.grad_accumulation_steps = c.get_uint("train.accumulation");
  t.epochs = c.get_uint("train.epochs");
  t.learning_rate = c.get_double("train.learning_rate");
  t.dropout_rate = c.get_double("train.dropout");
  t.init_std = c.get_double("train.init_std");
  t.optimizer.kind = parse_optimizer_kind(c.get("train.optimizer"));
  t.optimizer.beta1 = c.get_double("train.beta1");
  t.optimizer.beta2 = c.get_double("train.beta2");
  t.optimizer.epsilon = c.get_double("train.epsilon");
  t.loss.kind = parse_loss_kind(c.get("loss.kind"));
  t.loss.sigma = c.get_double("loss.sigma");
  t.loss.gamma = c.get_double("loss.gamma");
  t.zero_count_policy =
      c.get("loss.zero_count") == "clamp" ? ZeroCountPolicy::kClamp : ZeroCountPolicy::kError;
  t.seed = c.get_uint("seed");
  t.validate();
  return t;
}

TsneConfig tsne_config(const RunConfig& c) {
  TsneConfig t;
  t.perplexity = c.get_double("tsne.perplexity");
  t.iterations = c.get_uint("tsne.iterations");
  t.learning_rate = c.get_double("tsne.learning_rate");
  t.early_exaggeration = c.get_double("tsne.exaggeration");
  t.exaggeration_iterations = c.get_uint("tsne.exaggeration_iterations");
  t.momentum_switch_iteration = c.get_uint("tsne.momentum_switch");
  t.seed = c.get_uint("seed");
  return t;
}

Variant parse_variant(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  Variant v;
  v.loss.kind = parse_loss_kind(kind);
  switch (v.loss.kind) {
    case LossKind::kCrossEntropy:
      if (!arg.empty()) fail(ErrorKind::kConfig, "variant '" + spec + "': ce takes no parameter");
      v.name = "ce";
      break;
    case LossKind::kFocal:
      v.loss.gamma = arg.empty() ? 2.0 : parse_double("experiment.variants", arg);
      v.name = "focal(gamma=" + format_double(v.loss.gamma) + ")";
      break;
    case LossKind::kBlv:
      if (arg.empty()) fail(ErrorKind::kConfig, "variant '" + spec + "': blv needs a sigma, e.g. blv:6");
      v.loss.sigma = parse_double("experiment.variants", arg);
      v.name = "blv(sigma=" + format_double(v.loss.sigma) + ")";
      break;
  }
  v.loss.validate();
  return v;
}

}  // namespace blv::cli
