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

#include "blv/losses.hpp"

#include <cmath>

#include "blv/error.hpp"
#include "blv/numerics.hpp"

namespace blv {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy: return "cross_entropy";
    case LossKind::kFocal: return "focal";
    case LossKind::kBlv: return "blv";
  }
  return "unknown";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::kCrossEntropy;
  if (name == "focal") return LossKind::kFocal;
  if (name == "blv") return LossKind::kBlv;
  fail(ErrorKind::kConfig, "unknown loss kind '" + name + "' (expected cross_entropy, focal or blv)");
}

void LossConfig::validate() const {
  require(sigma >= 0.0 && std::isfinite(sigma), "loss.sigma must be >= 0", ErrorKind::kConfig);
  require(gamma >= 0.0 && std::isfinite(gamma), "loss.gamma must be >= 0", ErrorKind::kConfig);
  if (noise_override) {
    for (double v : noise_override->values()) {
      require(v >= 0.0 && std::isfinite(v), "noise override entries must be finite and >= 0");
    }
  }
}

namespace {

void check_batch(const Matrix& z, const std::vector<int>& labels) {
  require(z.rows() >= 1 && z.cols() >= 1, "loss: empty logit batch");
  require(z.rows() == labels.size(), "loss: logits rows and labels length differ");
  require(z.all_finite(), "loss: non-finite logits");
  for (int y : labels) {
    require(y >= 0 && static_cast<std::size_t>(y) < z.cols(), "loss: label out of range");
  }
}

}  // namespace

Matrix perturb_logits(const Matrix& z, const ClassStats& stats, double sigma, NoiseSource noise) {
  require(z.cols() == stats.alpha.size(), "perturb_logits: logits have " + std::to_string(z.cols()) +
                                              " columns but class stats have " +
                                              std::to_string(stats.alpha.size()));
  require(sigma >= 0.0, "perturb_logits: sigma must be >= 0");
  Matrix out = z;
  if (noise.override_abs != nullptr) {
    const Matrix& abs_delta = *noise.override_abs;
    require(abs_delta.rows() == z.rows() && abs_delta.cols() == z.cols(),
            "perturb_logits: noise override shape mismatch");
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t k = 0; k < z.cols(); ++k) {
        require(abs_delta(i, k) >= 0.0, "perturb_logits: noise override must be >= 0");
        out(i, k) += stats.alpha[k] * abs_delta(i, k);
      }
    }
    return out;
  }
  if (sigma == 0.0) return out;
  require(noise.rng != nullptr, "perturb_logits: sigma > 0 needs a noise source");
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t k = 0; k < z.cols(); ++k) {
      out(i, k) += stats.alpha[k] * std::abs(sigma * noise.rng->normal());
    }
  }
  return out;
}

LossResult cross_entropy(const Matrix& z, const std::vector<int>& labels) {
  check_batch(z, labels);
  const std::size_t b = z.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  LossResult r{0.0, Matrix(b, z.cols())};
  for (std::size_t i = 0; i < b; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    auto row = z.row(i);
    r.value -= row[y] - log_sum_exp(row);
    const Vector p = softmax(row);
    for (std::size_t k = 0; k < z.cols(); ++k) {
      r.grad(i, k) = (p[k] - (k == y ? 1.0 : 0.0)) * inv_b;
    }
  }
  r.value *= inv_b;
  return r;
}

LossResult focal_loss(const Matrix& z, const std::vector<int>& labels, double gamma) {
  check_batch(z, labels);
  require(gamma >= 0.0, "focal_loss: gamma must be >= 0");
  const std::size_t b = z.rows();
  const double inv_b = 1.0 / static_cast<double>(b);
  LossResult r{0.0, Matrix(b, z.cols())};
  for (std::size_t i = 0; i < b; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    auto row = z.row(i);
    const double log_pt = row[y] - log_sum_exp(row);
    const double pt = std::exp(log_pt);
    const double one_minus = -std::expm1(log_pt);  // 1 - p_t without cancellation
    const double modulator = gamma == 0.0 ? 1.0 : std::pow(one_minus, gamma);
    r.value -= modulator * log_pt;

    // L = -(1-p)^g log p;  dL/dz_j = c * (1[j=y] - p_j) with
    // c = g (1-p)^(g-1) p log p - (1-p)^g.
    double c = -modulator;
    if (gamma != 0.0 && one_minus > 0.0) {
      c += gamma * std::pow(one_minus, gamma - 1.0) * pt * log_pt;
    }
    const Vector p = softmax(row);
    for (std::size_t k = 0; k < z.cols(); ++k) {
      r.grad(i, k) = c * ((k == y ? 1.0 : 0.0) - p[k]) * inv_b;
    }
  }
  r.value *= inv_b;
  return r;
}

LossResult blv_loss(const Matrix& z, const std::vector<int>& labels, const ClassStats& stats,
                    double sigma, NoiseSource noise, bool training_mode) {
  check_batch(z, labels);
  if (!training_mode) return cross_entropy(z, labels);
  // The gradient w.r.t. z equals the gradient w.r.t. z_hat.
  return cross_entropy(perturb_logits(z, stats, sigma, noise), labels);
}

LossResult compute_loss(const LossConfig& config, const Matrix& z, const std::vector<int>& labels,
                        const ClassStats* stats, Rng* noise_rng) {
  switch (config.kind) {
    case LossKind::kCrossEntropy:
      return cross_entropy(z, labels);
    case LossKind::kFocal:
      return focal_loss(z, labels, config.gamma);
    case LossKind::kBlv: {
      require(stats != nullptr, "blv loss requires class statistics");
      NoiseSource noise{noise_rng, config.noise_override ? &*config.noise_override : nullptr};
      return blv_loss(z, labels, *stats, config.sigma, noise, config.training_mode);
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown loss kind");
}

}  // namespace blv
