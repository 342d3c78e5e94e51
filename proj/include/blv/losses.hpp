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

#include <optional>
#include <string>
#include <vector>

#include "blv/data.hpp"
#include "blv/matrix.hpp"
#include "blv/rng.hpp"

namespace blv {

enum class LossKind { kCrossEntropy, kFocal, kBlv };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::kCrossEntropy;
  double sigma = 0.0;  // BLV noise scale
  double gamma = 2.0;  // focal exponent
  bool training_mode = true;
  // Pre-drawn |delta| values (B x C, all >= 0). When set, the noise stream is
  // not consulted. Used to pin the perturbation in gradient checks.
  std::optional<Matrix> noise_override;

  void validate() const;
};

struct LossResult {
  double value = 0.0;  // mean over the batch
  Matrix grad;         // d(value)/d(raw logits), B x C
};

// Source of |delta| for the perturbation: either a generator or a fixed matrix.
struct NoiseSource {
  Rng* rng = nullptr;
  const Matrix* override_abs = nullptr;
};

// z_hat[i][k] = z[i][k] + alpha_k * |delta[i][k]|, delta ~ N(0, sigma^2) drawn
// per entry.
Matrix perturb_logits(const Matrix& z, const ClassStats& stats, double sigma, NoiseSource noise);

LossResult cross_entropy(const Matrix& z, const std::vector<int>& labels);

// -(1 - p_t)^gamma * log p_t, averaged over the batch.
LossResult focal_loss(const Matrix& z, const std::vector<int>& labels, double gamma);

// Cross-entropy at the perturbed logits. The draw is held fixed for the
// gradient, and d z_hat / d z is the identity, so grad = (softmax(z_hat) -
// onehot) / B. With training_mode == false no perturbation is applied.
LossResult blv_loss(const Matrix& z, const std::vector<int>& labels, const ClassStats& stats,
                    double sigma, NoiseSource noise, bool training_mode);

// Dispatches on config.kind. `stats` is required for BLV only.
LossResult compute_loss(const LossConfig& config, const Matrix& z, const std::vector<int>& labels,
                        const ClassStats* stats, Rng* noise_rng);

}  // namespace blv
