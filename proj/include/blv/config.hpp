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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blv/data.hpp"
#include "blv/model.hpp"
#include "blv/viz.hpp"

namespace blv::cli {

// Flat dotted-key configuration ("loss.sigma = 6"). Every key has a default;
// unknown keys and unparsable values are rejected with ErrorKind::kConfig.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool is_set_explicitly(const std::string& key) const;

  double get_double(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::uint64_t> get_uint_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  // Parses every typed value; throws on the first bad one.
  void validate() const;

  // Every key, sorted, one "key=value" per line. Loading it reproduces the run.
  std::string echo() const;

  static std::vector<std::string> known_keys();

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

GeneratorSpec generator_spec(const RunConfig& c);
std::array<double, 3> split_fractions(const RunConfig& c);
TrainConfig train_config(const RunConfig& c);
TsneConfig tsne_config(const RunConfig& c);

// One row of the experiment grid: "ce", "focal:<gamma>" or "blv:<sigma>".
struct Variant {
  std::string name;
  LossConfig loss;
};

Variant parse_variant(const std::string& spec);

}  // namespace blv::cli
