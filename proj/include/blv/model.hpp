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
#include <optional>
#include <string>
#include <vector>

#include "blv/data.hpp"
#include "blv/losses.hpp"
#include "blv/matrix.hpp"
#include "blv/metrics.hpp"
#include "blv/rng.hpp"

namespace blv {

// Mean pool -> dropout -> linear. The encoder producing token embeddings is
// frozen and lives outside this library.
struct ClassifierHead {
  Matrix weight;  // dim x classes
  Vector bias;    // classes
  double dropout_rate = 0.1;

  std::size_t dim() const noexcept { return weight.rows(); }
  std::size_t classes() const noexcept { return weight.cols(); }

  static ClassifierHead zeros(std::size_t dim, std::size_t classes, double dropout_rate = 0.1);
  // N(0, init_std^2) weights, zero bias.
  static ClassifierHead random(std::size_t dim, std::size_t classes, Rng& rng,
                               double init_std = 0.02, double dropout_rate = 0.1);

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

// Padded token tensor. tokens is (batch x max_tokens x dim) row-major, mask is
// (batch x max_tokens) with 1 on real tokens.
struct Batch {
  std::size_t size = 0;
  std::size_t max_tokens = 0;
  std::size_t dim = 0;
  std::vector<double> tokens;
  std::vector<std::uint8_t> mask;
  std::vector<int> labels;
};

Batch make_batch(const Dataset& d, const std::vector<std::size_t>& indices);

// Everything backward() needs from the paired forward() call.
struct ForwardCache {
  Matrix pooled;        // before dropout
  Matrix dropout_scale; // 0 or 1/(1-rate) per entry; all 1 outside training
  bool valid = false;
};

struct HeadGradients {
  Matrix weight;
  Vector bias;
};

Matrix mean_pool(const Batch& batch);

// Logits for the batch. `rng` drives the dropout mask and is only consulted in
// training mode with a positive rate.
Matrix forward(const ClassifierHead& head, const Batch& batch, bool training_mode, Rng* rng,
               ForwardCache* cache = nullptr);

HeadGradients backward(const ClassifierHead& head, const ForwardCache& cache,
                       const Matrix& grad_logits);

enum class OptimizerKind { kAdam, kSgd };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  Matrix m_weight, v_weight;
  Vector m_bias, v_bias;
  std::uint64_t step = 0;

  static OptimizerState for_head(const ClassifierHead& head);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

void optimizer_step(OptimizerState& state, ClassifierHead& head, const HeadGradients& grads,
                    double learning_rate, const OptimizerConfig& config = {});

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t grad_accumulation_steps = 2;
  std::size_t epochs = 20;
  double learning_rate = 1e-5;
  double dropout_rate = 0.1;
  double init_std = 0.02;
  LossConfig loss;
  ZeroCountPolicy zero_count_policy = ZeroCountPolicy::kError;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RngCursor {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;
  friend bool operator==(const RngCursor&, const RngCursor&) = default;
};

struct TrainReport {
  std::vector<double> epoch_losses;
  std::vector<MetricsReport> dev_metrics;  // empty when no dev split was given
  ClassifierHead head;
  OptimizerState optimizer;
  std::vector<RngCursor> rng_cursors;  // data, dropout, noise
  double train_accuracy = 0.0;
  double wall_clock_seconds = 0.0;
};

TrainReport train(const Dataset& train_set, const Dataset* dev_set, const TrainConfig& config);

struct Prediction {
  std::vector<int> labels;
  Matrix logits;
};

// Argmax of raw logits; ties go to the lower class index.
Prediction predict(const ClassifierHead& head, const Dataset& d);

// Checkpoint: versioned JSON holding the head, optimizer moments and RNG cursors.
struct Checkpoint {
  ClassifierHead head;
  OptimizerState optimizer;
  std::vector<RngCursor> rng_cursors;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace blv
