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

#include "blv/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "blv/error.hpp"
#include "blv/io.hpp"

namespace blv {

using ordered_json = nlohmann::ordered_json;

ClassifierHead ClassifierHead::zeros(std::size_t dim, std::size_t classes, double dropout_rate) {
  return ClassifierHead{Matrix(dim, classes), Vector(classes, 0.0), dropout_rate};
}

ClassifierHead ClassifierHead::random(std::size_t dim, std::size_t classes, Rng& rng,
                                      double init_std, double dropout_rate) {
  ClassifierHead head = zeros(dim, classes, dropout_rate);
  for (double& w : head.weight.values()) w = init_std * rng.normal();
  return head;
}

Batch make_batch(const Dataset& d, const std::vector<std::size_t>& indices) {
  require(!indices.empty(), "make_batch: empty index list");
  Batch b;
  b.size = indices.size();
  b.dim = d.dim;
  for (std::size_t i : indices) b.max_tokens = std::max(b.max_tokens, d.embeddings.at(i).rows());
  b.tokens.assign(b.size * b.max_tokens * b.dim, 0.0);
  b.mask.assign(b.size * b.max_tokens, 0);
  for (std::size_t s = 0; s < b.size; ++s) {
    const Matrix& e = d.embeddings[indices[s]];
    std::copy(e.storage().begin(), e.storage().end(),
              b.tokens.begin() + static_cast<std::ptrdiff_t>(s * b.max_tokens * b.dim));
    std::fill_n(b.mask.begin() + static_cast<std::ptrdiff_t>(s * b.max_tokens), e.rows(), 1);
    b.labels.push_back(d.labels[indices[s]]);
  }
  return b;
}

Matrix mean_pool(const Batch& batch) {
  require(batch.tokens.size() == batch.size * batch.max_tokens * batch.dim &&
              batch.mask.size() == batch.size * batch.max_tokens,
          "mean_pool: batch storage does not match its shape");
  Matrix pooled(batch.size, batch.dim);
  for (std::size_t s = 0; s < batch.size; ++s) {
    std::size_t valid = 0;
    for (std::size_t t = 0; t < batch.max_tokens; ++t) {
      if (!batch.mask[s * batch.max_tokens + t]) continue;
      ++valid;
      const double* tok = batch.tokens.data() + (s * batch.max_tokens + t) * batch.dim;
      for (std::size_t c = 0; c < batch.dim; ++c) pooled(s, c) += tok[c];
    }
    require(valid > 0, "mean_pool: sample " + std::to_string(s) + " has no valid tokens");
    for (std::size_t c = 0; c < batch.dim; ++c) pooled(s, c) /= static_cast<double>(valid);
  }
  return pooled;
}

Matrix forward(const ClassifierHead& head, const Batch& batch, bool training_mode, Rng* rng,
               ForwardCache* cache) {
  require(batch.dim == head.dim(), "forward: batch dim " + std::to_string(batch.dim) +
                                       " does not match head dim " + std::to_string(head.dim()),
          ErrorKind::kData);
  const Matrix pooled = mean_pool(batch);
  Matrix scale(batch.size, batch.dim, 1.0);
  if (training_mode && head.dropout_rate > 0.0) {
    require(rng != nullptr, "forward: dropout in training mode needs an rng");
    const double keep = 1.0 - head.dropout_rate;
    for (double& s : scale.values()) s = rng->uniform() < keep ? 1.0 / keep : 0.0;
  }

  const std::size_t classes = head.classes();
  Matrix logits(batch.size, classes);
  for (std::size_t i = 0; i < batch.size; ++i) {
    for (std::size_t k = 0; k < classes; ++k) logits(i, k) = head.bias[k];
    for (std::size_t c = 0; c < batch.dim; ++c) {
      const double x = pooled(i, c) * scale(i, c);
      if (x == 0.0) continue;
      auto w = head.weight.row(c);
      for (std::size_t k = 0; k < classes; ++k) logits(i, k) += x * w[k];
    }
  }
  if (cache != nullptr) {
    cache->pooled = pooled;
    cache->dropout_scale = std::move(scale);
    cache->valid = true;
  }
  return logits;
}

HeadGradients backward(const ClassifierHead& head, const ForwardCache& cache,
                       const Matrix& grad_logits) {
  require(cache.valid, "backward: no stored forward pass (call forward with a cache first)");
  require(grad_logits.rows() == cache.pooled.rows() && grad_logits.cols() == head.classes(),
          "backward: gradient shape does not match the forward batch");
  HeadGradients g{Matrix(head.dim(), head.classes()), Vector(head.classes(), 0.0)};
  for (std::size_t i = 0; i < grad_logits.rows(); ++i) {
    auto gi = grad_logits.row(i);
    for (std::size_t k = 0; k < head.classes(); ++k) g.bias[k] += gi[k];
    for (std::size_t c = 0; c < head.dim(); ++c) {
      const double x = cache.pooled(i, c) * cache.dropout_scale(i, c);
      if (x == 0.0) continue;
      auto gw = g.weight.row(c);
      for (std::size_t k = 0; k < head.classes(); ++k) gw[k] += x * gi[k];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  fail(ErrorKind::kConfig, "unknown optimizer '" + name + "' (expected adam or sgd)");
}

OptimizerState OptimizerState::for_head(const ClassifierHead& head) {
  OptimizerState s;
  s.m_weight = s.v_weight = Matrix(head.dim(), head.classes());
  s.m_bias = s.v_bias = Vector(head.classes(), 0.0);
  return s;
}

namespace {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, double lr, double c1, double c2, const OptimizerConfig& cfg) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace

void optimizer_step(OptimizerState& state, ClassifierHead& head, const HeadGradients& grads,
                    double learning_rate, const OptimizerConfig& config) {
  require(grads.weight.rows() == head.dim() && grads.weight.cols() == head.classes() &&
              grads.bias.size() == head.classes(),
          "optimizer_step: gradient shape mismatch");
  if (config.kind == OptimizerKind::kSgd) {
    auto w = head.weight.values();
    auto gw = grads.weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * gw[i];
    for (std::size_t k = 0; k < head.bias.size(); ++k) head.bias[k] -= learning_rate * grads.bias[k];
    ++state.step;
    return;
  }
  require(state.m_weight.rows() == head.dim() && state.m_weight.cols() == head.classes() &&
              state.m_bias.size() == head.classes(),
          "optimizer_step: optimizer state shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  adam_update(head.weight.values(), grads.weight.values(), state.m_weight.values(),
              state.v_weight.values(), learning_rate, c1, c2, config);
  adam_update(head.bias, grads.bias, state.m_bias, state.v_bias, learning_rate, c1, c2, config);
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  require(batch_size >= 1, "train.batch_size must be >= 1", ErrorKind::kConfig);
  require(grad_accumulation_steps >= 1, "train.accumulation must be >= 1", ErrorKind::kConfig);
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "train.learning_rate must be > 0",
          ErrorKind::kConfig);
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "train.dropout must be in [0, 1)",
          ErrorKind::kConfig);
  require(init_std >= 0.0, "train.init_std must be >= 0", ErrorKind::kConfig);
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 &&
              optimizer.beta2 < 1.0 && optimizer.epsilon > 0.0,
          "optimizer hyperparameters out of range", ErrorKind::kConfig);
  loss.validate();
}

namespace {

void add_scaled(HeadGradients& acc, const HeadGradients& g) {
  auto a = acc.weight.values();
  auto b = g.weight.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  for (std::size_t k = 0; k < acc.bias.size(); ++k) acc.bias[k] += g.bias[k];
}

void scale(HeadGradients& g, double s) {
  for (double& v : g.weight.values()) v *= s;
  for (double& v : g.bias) v *= s;
}

}  // namespace

TrainReport train(const Dataset& train_set, const Dataset* dev_set, const TrainConfig& config) {
  config.validate();
  train_set.validate();
  require(train_set.size() >= 1, "train: empty training split", ErrorKind::kData);
  if (dev_set != nullptr) {
    require(dev_set->size() >= 1, "train: dev split is empty but dev metrics were requested",
            ErrorKind::kData);
    require(dev_set->dim == train_set.dim && dev_set->classes == train_set.classes,
            "train: dev split shape differs from training split", ErrorKind::kData);
  }
  const auto start = std::chrono::steady_clock::now();

  Rng root(config.seed);
  Rng init_rng = root.child("init");
  Rng data_rng = root.child("data");
  Rng dropout_rng = root.child("dropout");
  Rng noise_rng = root.child("noise");

  std::optional<ClassStats> stats;
  if (config.loss.kind == LossKind::kBlv) {
    stats = compute_class_stats(train_set.labels, train_set.classes, config.zero_count_policy);
  }

  TrainReport report;
  report.head = ClassifierHead::random(train_set.dim, train_set.classes, init_rng, config.init_std,
                                       config.dropout_rate);
  report.optimizer = OptimizerState::for_head(report.head);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[data_rng.below(i)]);

    double loss_sum = 0.0;
    HeadGradients acc{Matrix(report.head.dim(), report.head.classes()),
                      Vector(report.head.classes(), 0.0)};
    std::size_t window = 0;

    auto flush = [&] {
      if (window == 0) return;
      scale(acc, 1.0 / static_cast<double>(window));
      optimizer_step(report.optimizer, report.head, acc, config.learning_rate, config.optimizer);
      acc = HeadGradients{Matrix(report.head.dim(), report.head.classes()),
                          Vector(report.head.classes(), 0.0)};
      window = 0;
    };

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const Batch batch = make_batch(train_set, idx);
      ForwardCache cache;
      const Matrix logits = forward(report.head, batch, true, &dropout_rng, &cache);
      LossConfig loss_cfg = config.loss;
      loss_cfg.training_mode = true;
      const LossResult loss = compute_loss(loss_cfg, logits, batch.labels,
                                           stats ? &*stats : nullptr, &noise_rng);
      loss_sum += loss.value * static_cast<double>(idx.size());
      add_scaled(acc, backward(report.head, cache, loss.grad));
      if (++window == config.grad_accumulation_steps) flush();
    }
    flush();
    report.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));

    if (dev_set != nullptr) {
      const Prediction p = predict(report.head, *dev_set);
      report.dev_metrics.push_back(full_report(dev_set->labels, p.labels, dev_set->classes));
    }
  }

  const Prediction fit = predict(report.head, train_set);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < fit.labels.size(); ++i) correct += fit.labels[i] == train_set.labels[i];
  report.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
  report.rng_cursors = {{data_rng.seed(), data_rng.counter()},
                        {dropout_rng.seed(), dropout_rng.counter()},
                        {noise_rng.seed(), noise_rng.counter()}};
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Prediction predict(const ClassifierHead& head, const Dataset& d) {
  require(d.dim == head.dim() && d.classes == head.classes(),
          "predict: dataset (dim " + std::to_string(d.dim) + ", classes " +
              std::to_string(d.classes) + ") does not match checkpoint (dim " +
              std::to_string(head.dim()) + ", classes " + std::to_string(head.classes()) + ")",
          ErrorKind::kData);
  Prediction out;
  out.logits = Matrix(d.size(), head.classes());
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < d.size(); begin += kChunk) {
    std::vector<std::size_t> idx(std::min(kChunk, d.size() - begin));
    std::iota(idx.begin(), idx.end(), begin);
    const Matrix logits = forward(head, make_batch(d, idx), false, nullptr);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = logits.row(i);
      std::copy(src.begin(), src.end(), out.logits.row(begin + i).begin());
    }
  }
  out.labels.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto row = out.logits.row(i);
    // max_element returns the first maximum, i.e. the lowest tied index.
    out.labels.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

Matrix matrix_from_json(const ordered_json& j, std::size_t rows, std::size_t cols,
                        const char* what) {
  const auto flat = j.get<std::vector<double>>();
  require(flat.size() == rows * cols, std::string("checkpoint: ") + what + " has wrong size",
          ErrorKind::kData);
  return Matrix(rows, cols, flat);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  ordered_json j;
  j["format"] = "blv-checkpoint";
  j["version"] = 1;
  j["dim"] = c.head.dim();
  j["classes"] = c.head.classes();
  j["dropout_rate"] = c.head.dropout_rate;
  j["weight"] = c.head.weight.storage();
  j["bias"] = c.head.bias;
  ordered_json opt;
  opt["step"] = c.optimizer.step;
  opt["m_weight"] = c.optimizer.m_weight.storage();
  opt["v_weight"] = c.optimizer.v_weight.storage();
  opt["m_bias"] = c.optimizer.m_bias;
  opt["v_bias"] = c.optimizer.v_bias;
  j["optimizer"] = std::move(opt);
  ordered_json rng = ordered_json::array();
  for (const auto& cur : c.rng_cursors) rng.push_back({{"seed", cur.seed}, {"counter", cur.counter}});
  j["rng"] = {{"algorithm", std::string(Rng::kAlgorithm)}, {"streams", std::move(rng)}};
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    require(j.at("format") == "blv-checkpoint" && j.at("version") == 1,
            "checkpoint: unsupported format or version", ErrorKind::kData);
    const auto dim = j.at("dim").get<std::size_t>();
    const auto classes = j.at("classes").get<std::size_t>();
    Checkpoint c;
    c.head.weight = matrix_from_json(j.at("weight"), dim, classes, "weight");
    c.head.bias = j.at("bias").get<Vector>();
    c.head.dropout_rate = j.at("dropout_rate").get<double>();
    require(c.head.bias.size() == classes, "checkpoint: bias has wrong size", ErrorKind::kData);
    const auto& opt = j.at("optimizer");
    c.optimizer.step = opt.at("step").get<std::uint64_t>();
    c.optimizer.m_weight = matrix_from_json(opt.at("m_weight"), dim, classes, "m_weight");
    c.optimizer.v_weight = matrix_from_json(opt.at("v_weight"), dim, classes, "v_weight");
    c.optimizer.m_bias = opt.at("m_bias").get<Vector>();
    c.optimizer.v_bias = opt.at("v_bias").get<Vector>();
    for (const auto& s : j.at("rng").at("streams")) {
      c.rng_cursors.push_back({s.at("seed").get<std::uint64_t>(), s.at("counter").get<std::uint64_t>()});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("checkpoint: malformed document: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace blv
