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
#include <string>
#include <vector>

#include "blv/matrix.hpp"

namespace blv {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 5000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch_iteration = 250;
  std::size_t output_dims = 2;
  std::size_t kl_every = 50;
  std::uint64_t seed = 0;

  // Throws kViz when the configuration cannot run on `points` samples.
  void validate(std::size_t points) const;
};

struct KlCheckpoint {
  std::size_t iteration = 0;
  double kl = 0.0;
};

struct ProjectionResult {
  Matrix coordinates;  // N x output_dims
  std::vector<int> labels;
  std::vector<KlCheckpoint> kl_trace;  // iteration 0 first, final iteration last
  double kl_after_exaggeration = 0.0;
  std::vector<double> perplexities;    // achieved, per point
  std::size_t calibration_failures = 0;
};

// Row-conditional Gaussian affinities p_{j|i} with the bandwidth of each row
// found by bisection so that 2^H(P_i) matches `perplexity`.
struct Affinities {
  Matrix conditional;                 // rows sum to 1, zero diagonal
  std::vector<double> perplexities;   // achieved
  std::vector<bool> converged;        // |log2 perplexity error| <= tolerance
};

Matrix squared_distances(const Matrix& points);
Affinities conditional_affinities(const Matrix& squared_dist, double perplexity,
                                  double log2_tolerance = 1e-5, std::size_t max_steps = 200);
// (P + P^T) / 2N.
Matrix joint_affinities(const Matrix& conditional);
// KL(P || Q) for the Student-t kernel on `embedding`.
double tsne_kl(const Matrix& joint, const Matrix& embedding);

// Exact O(N^2) t-SNE.
ProjectionResult tsne_project(const Matrix& points, const std::vector<int>& labels,
                              const TsneConfig& config);

// CSV "x,y,label,split" with shortest round-trip decimals.
std::string projection_to_csv(const ProjectionResult& result, const std::string& split);
void export_projection(const ProjectionResult& result, const std::string& split,
                       const std::filesystem::path& path);
std::string kl_trace_to_csv(const ProjectionResult& result);

}  // namespace blv
