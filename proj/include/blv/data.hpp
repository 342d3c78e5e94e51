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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blv/matrix.hpp"
#include "blv/rng.hpp"

namespace blv {

// Labelled embedding corpus. Each sample is a (tokens x dim) matrix; pre-pooled
// vectors are single-token samples. Immutable once built.
struct Dataset {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  std::vector<Matrix> embeddings;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sequence_length(std::size_t i) const { return embeddings[i].rows(); }

  // Throws kData when any invariant is broken.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::vector<std::string> default_class_names(std::size_t classes);

Dataset subset(const Dataset& d, const std::vector<std::size_t>& indices);

// JSON-lines codec. Line 1 is the header object, then one record per sample.
std::string serialize_dataset(const Dataset& d);
Dataset parse_dataset(const std::string& text);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

enum class ZeroCountPolicy { kError, kClamp };

struct ClassStats {
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  std::vector<double> alpha;
};

// alpha_k = log(N / q_k) / max_j log(N / q_j).
ClassStats compute_class_stats(const std::vector<int>& labels, std::size_t classes,
                               ZeroCountPolicy policy = ZeroCountPolicy::kError);

// Mass of N(mean, std^2) falling in [k - 0.5, k + 0.5], renormalised over the
// `classes` bins.
std::vector<double> discretized_gaussian_priors(std::size_t classes, double mean, double std);

// Largest-remainder allocation of `total` items according to `priors`.
std::vector<std::size_t> allocate_counts(const std::vector<double>& priors, std::size_t total);

struct GeneratorSpec {
  std::size_t classes = 5;
  std::size_t samples = 2000;
  std::vector<double> priors;  // empty => discretized Gaussian below
  double prior_mean = 2.0;
  double prior_std = 0.88;
  std::size_t dim = 16;
  double cluster_separation = 2.0;
  double cluster_noise_std = 1.0;
  std::size_t min_tokens = 1;
  std::size_t max_tokens = 1;
  std::uint64_t seed = 0;

  std::vector<double> resolved_priors() const;
  void validate() const;
};

Dataset generate_longtail(const GeneratorSpec& spec);

struct SplitResult {
  Dataset train;
  Dataset dev;
  Dataset test;
  std::array<std::vector<std::size_t>, 3> indices;  // into the source dataset
  std::vector<std::string> warnings;
};

SplitResult split_dataset(const Dataset& d, std::array<double, 3> fractions, std::uint64_t seed);

}  // namespace blv
